// Copyright 2026 the emoaug authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "emoaug/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "emoaug/rng.hpp"

namespace emoaug {

namespace {

// Assembles rows `idx` of the feature matrix into a (B, dim, 1) batch.
net::BatchSeq<float> make_batch(const Eigen::MatrixXf& features, const std::vector<Eigen::Index>& idx) {
  const Eigen::Index dim = features.cols();
  net::BatchSeq<float> batch;
  batch.batch = static_cast<Eigen::Index>(idx.size());
  batch.len = dim;
  batch.channels = 1;
  batch.data.resize(batch.batch * dim, 1);
  for (Eigen::Index s = 0; s < batch.batch; ++s) {
    batch.data.col(0).segment(s * dim, dim) = features.row(idx[static_cast<size_t>(s)]).transpose();
  }
  return batch;
}

// Replays the plateau/early-stop bookkeeping over a full history. Both
// public rules share this so they can never drift apart.
struct MonitorReplay {
  double lr;
  bool stop = false;
  int best_epoch = -1;

  MonitorReplay(const std::vector<EpochRecord>& history, const TrainConfig& cfg) : lr(cfg.lr0) {
    double best = -std::numeric_limits<double>::infinity();
    int plateau_wait = 0;
    int stop_wait = 0;
    for (size_t e = 0; e < history.size(); ++e) {
      const double acc = history[e].val_acc;
      if (acc > best + cfg.min_delta) {
        best = acc;
        best_epoch = static_cast<int>(e);
        plateau_wait = 0;
        stop_wait = 0;
      } else {
        ++plateau_wait;
        ++stop_wait;
      }
      if (plateau_wait >= cfg.plateau_patience) {
        lr = std::max(lr * cfg.plateau_factor, cfg.min_lr);
        plateau_wait = 0;
      }
      if (stop_wait >= cfg.early_stop_patience) {
        stop = true;
        return;
      }
    }
  }
};

}  // namespace

void Standardization::apply(Eigen::MatrixXf& features) const {
  if (features.cols() != mean.size()) throw ShapeMismatch("standardization: dim mismatch");
  features = (features.rowwise() - mean.transpose()).array().rowwise() /
             stdev.transpose().array();
}

Standardization compute_standardization(const Eigen::MatrixXf& train_features) {
  if (train_features.rows() == 0) throw EmptyDataset("standardization needs a training set");
  Standardization s;
  s.mean = train_features.colwise().mean();
  Eigen::MatrixXf centered = train_features.rowwise() - s.mean.transpose();
  s.stdev = (centered.array().square().colwise().mean()).sqrt().matrix().transpose();
  s.stdev = s.stdev.cwiseMax(1e-8f);
  return s;
}

Dataset dataset_from_records(const std::vector<FeatureRecord>& records,
                             const std::unordered_set<std::string>* clips, bool variant0_only) {
  std::vector<const FeatureRecord*> picked;
  for (const FeatureRecord& r : records) {
    if (clips && clips->find(r.clip_id) == clips->end()) continue;
    if (variant0_only && r.variant != 0) continue;
    picked.push_back(&r);
  }

  Dataset ds;
  ds.features.resize(static_cast<Eigen::Index>(picked.size()),
                     static_cast<Eigen::Index>(kFeatureDim));
  ds.labels.reserve(picked.size());
  for (size_t i = 0; i < picked.size(); ++i) {
    ds.features.row(static_cast<Eigen::Index>(i)) = picked[i]->values.transpose();
    ds.labels.push_back(static_cast<int>(picked[i]->label));
    ds.clip_ids.push_back(picked[i]->clip_id);
    ds.variants.push_back(picked[i]->variant);
  }
  return ds;
}

double lr_schedule_step(const std::vector<EpochRecord>& history, const TrainConfig& cfg) {
  if (history.empty()) throw std::invalid_argument("lr_schedule_step: no completed epochs");
  return MonitorReplay(history, cfg).lr;
}

bool early_stop_check(const std::vector<EpochRecord>& history, const TrainConfig& cfg) {
  if (history.empty()) throw std::invalid_argument("early_stop_check: no completed epochs");
  return MonitorReplay(history, cfg).stop;
}

TrainResult train(net::Sequential<float>& model, const Dataset& train_set, const Dataset& val_set,
                  const TrainConfig& cfg,
                  const std::function<void(int, const net::Sequential<float>&)>& inspect) {
  if (train_set.size() == 0) throw EmptyDataset("train: empty training set");
  if (val_set.size() == 0) throw EmptyDataset("train: empty validation set");

  auto params = model.trainable();
  net::Adam<float> adam(params);

  TrainResult result;
  result.history.best_epoch = -1;
  double best_acc = -1.0;
  double lr = cfg.lr0;

  std::vector<Eigen::Index> order(static_cast<size_t>(train_set.size()));
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    SplitMix64 shuffle_rng(derive_seed(cfg.seed, 0x45504F43ULL + static_cast<std::uint64_t>(epoch)));
    for (size_t i = order.size(); i > 1; --i) {
      const auto j = static_cast<size_t>(shuffle_rng.uniform_int(0, static_cast<std::int64_t>(i) - 1));
      std::swap(order[i - 1], order[j]);
    }
    SplitMix64 dropout_rng(derive_seed(cfg.seed, 0x44524F50ULL + static_cast<std::uint64_t>(epoch)));

    double loss_sum = 0.0;
    Eigen::Index correct = 0;
    try {
      for (size_t start = 0; start < order.size(); start += static_cast<size_t>(cfg.batch_size)) {
        const size_t end = std::min(order.size(), start + static_cast<size_t>(cfg.batch_size));
        std::vector<Eigen::Index> idx(order.begin() + static_cast<long>(start),
                                      order.begin() + static_cast<long>(end));
        std::vector<int> labels;
        labels.reserve(idx.size());
        for (Eigen::Index i : idx) labels.push_back(train_set.labels[static_cast<size_t>(i)]);

        const auto batch = make_batch(train_set.features, idx);
        const auto probs = model.forward(batch, net::Mode::kTrain, dropout_rng);
        const double batch_loss = model.loss(labels);
        if (!std::isfinite(batch_loss)) throw TrainingDiverged(epoch, "loss is not finite");
        loss_sum += batch_loss * static_cast<double>(idx.size());
        for (Eigen::Index r = 0; r < probs.rows(); ++r) {
          Eigen::Index pred;
          probs.row(r).maxCoeff(&pred);
          if (static_cast<int>(pred) == labels[static_cast<size_t>(r)]) ++correct;
        }

        model.backward(labels);
        adam.step(params, static_cast<float>(lr));
      }
    } catch (const net::NonFiniteActivation& e) {
      throw TrainingDiverged(epoch, e.what());
    }

    EpochRecord rec;
    rec.lr = lr;
    rec.train_loss = loss_sum / static_cast<double>(train_set.size());
    rec.train_acc = static_cast<double>(correct) / static_cast<double>(train_set.size());

    const EvalReport val_report = evaluate(model, val_set, cfg.batch_size);
    rec.val_acc = val_report.weighted_accuracy;
    {
      // Validation loss in infer mode over the whole set.
      SplitMix64 rng(0);
      double vloss = 0.0;
      for (Eigen::Index start = 0; start < val_set.size(); start += cfg.batch_size) {
        const Eigen::Index end = std::min<Eigen::Index>(val_set.size(), start + cfg.batch_size);
        std::vector<Eigen::Index> idx;
        std::vector<int> labels;
        for (Eigen::Index i = start; i < end; ++i) {
          idx.push_back(i);
          labels.push_back(val_set.labels[static_cast<size_t>(i)]);
        }
        model.forward(make_batch(val_set.features, idx), net::Mode::kInfer, rng);
        vloss += static_cast<double>(model.loss(labels)) * static_cast<double>(idx.size());
      }
      rec.val_loss = vloss / static_cast<double>(val_set.size());
    }

    result.history.epochs.push_back(rec);

    if (rec.val_acc > best_acc) {  // ties keep the earlier epoch
      best_acc = rec.val_acc;
      result.history.best_epoch = epoch;
      result.best_state = model.state();
    }

    if (inspect) inspect(epoch, model);

    if (early_stop_check(result.history.epochs, cfg)) break;
    lr = lr_schedule_step(result.history.epochs, cfg);
  }

  model.set_state(result.best_state);
  return result;
}

EvalReport evaluate(net::Sequential<float>& model, const Dataset& dataset, int batch_size) {
  if (dataset.size() == 0) throw EmptyDataset("evaluate: empty dataset");
  Eigen::MatrixXi confusion = Eigen::MatrixXi::Zero(kNumClasses, kNumClasses);
  SplitMix64 rng(0);  // unused in infer mode
  for (Eigen::Index start = 0; start < dataset.size(); start += batch_size) {
    const Eigen::Index end = std::min<Eigen::Index>(dataset.size(), start + batch_size);
    std::vector<Eigen::Index> idx;
    for (Eigen::Index i = start; i < end; ++i) idx.push_back(i);
    const auto probs = model.forward(make_batch(dataset.features, idx), net::Mode::kInfer, rng);
    for (Eigen::Index r = 0; r < probs.rows(); ++r) {
      Eigen::Index pred;
      probs.row(r).maxCoeff(&pred);
      confusion(dataset.labels[static_cast<size_t>(start + r)], pred) += 1;
    }
  }
  return report_from_confusion(confusion);
}

EvalReport report_from_confusion(const Eigen::MatrixXi& confusion) {
  if (confusion.rows() != confusion.cols()) {
    throw ShapeMismatch("report_from_confusion: matrix must be square");
  }
  EvalReport report;
  report.confusion = confusion;
  const Eigen::Index c = confusion.rows();
  report.per_class_recall = Eigen::VectorXd::Zero(c);

  long total = 0, diag = 0;
  double recall_sum = 0.0;
  Eigen::Index supported = 0;
  for (Eigen::Index i = 0; i < c; ++i) {
    const long support = confusion.row(i).sum();
    total += support;
    diag += confusion(i, i);
    if (support > 0) {
      report.per_class_recall[i] = static_cast<double>(confusion(i, i)) / static_cast<double>(support);
      recall_sum += report.per_class_recall[i];
      ++supported;
    }
  }
  report.weighted_accuracy = total > 0 ? static_cast<double>(diag) / static_cast<double>(total) : 0.0;
  report.unweighted_accuracy = supported > 0 ? recall_sum / static_cast<double>(supported) : 0.0;
  return report;
}

void write_history_csv(const std::filesystem::path& path, const TrainHistory& history) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
  f << "epoch,train_loss,train_acc,val_loss,val_acc,lr\n";
  for (size_t e = 0; e < history.epochs.size(); ++e) {
    const EpochRecord& r = history.epochs[e];
    f << e << ',' << r.train_loss << ',' << r.train_acc << ',' << r.val_loss << ',' << r.val_acc
      << ',' << r.lr << '\n';
  }
}

void write_confusion_csv(const std::filesystem::path& path, const EvalReport& report) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
  for (Eigen::Index j = 0; j < report.confusion.cols(); ++j) {
    f << ',' << label_name(static_cast<EmotionLabel>(j));
  }
  f << '\n';
  for (Eigen::Index i = 0; i < report.confusion.rows(); ++i) {
    f << label_name(static_cast<EmotionLabel>(i));
    for (Eigen::Index j = 0; j < report.confusion.cols(); ++j) f << ',' << report.confusion(i, j);
    f << '\n';
  }
  f << "wa=" << report.weighted_accuracy << " ua=" << report.unweighted_accuracy << '\n';
}

}  // namespace emoaug
