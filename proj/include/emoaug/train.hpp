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

#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "emoaug/datastore.hpp"
#include "emoaug/net.hpp"

namespace emoaug {

struct TrainConfig {
  double lr0 = 1e-3;
  int batch_size = 64;
  int max_epochs = 100;
  double plateau_factor = 0.5;
  int plateau_patience = 5;
  double min_lr = 1e-6;
  int early_stop_patience = 10;
  double min_delta = 1e-4;  // improvement threshold for both monitors
  std::uint64_t seed = 0;
};

struct EpochRecord {
  double train_loss = 0.0;
  double train_acc = 0.0;
  double val_loss = 0.0;
  double val_acc = 0.0;
  double lr = 0.0;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  int best_epoch = -1;
};

struct EvalReport {
  Eigen::MatrixXi confusion;  // rows true, columns predicted
  double weighted_accuracy = 0.0;
  double unweighted_accuracy = 0.0;
  Eigen::VectorXd per_class_recall;
};

// In-memory feature dataset, one row per record.
struct Dataset {
  Eigen::MatrixXf features;  // N x dim
  std::vector<int> labels;
  std::vector<std::string> clip_ids;
  std::vector<int> variants;

  Eigen::Index size() const { return features.rows(); }
};

struct EmptyDataset : std::runtime_error {
  explicit EmptyDataset(const std::string& what) : std::runtime_error(what) {}
};

struct TrainingDiverged : std::runtime_error {
  TrainingDiverged(int epoch_idx, const std::string& what)
      : std::runtime_error("epoch " + std::to_string(epoch_idx) + ": " + what), epoch(epoch_idx) {}
  int epoch;
};

// Per-dimension mean/std, computed from the training split only.
struct Standardization {
  Eigen::VectorXf mean;
  Eigen::VectorXf stdev;  // floored away from zero

  void apply(Eigen::MatrixXf& features) const;
};

Standardization compute_standardization(const Eigen::MatrixXf& train_features);

// Builds a Dataset from cache records whose clip_id is in `clips`
// (nullptr = take everything). variant0_only drops augmented variants.
Dataset dataset_from_records(const std::vector<FeatureRecord>& records,
                             const std::unordered_set<std::string>* clips = nullptr,
                             bool variant0_only = false);

// Learning rate in effect for the epoch after `history`, replaying the
// plateau rule: no improvement > min_delta for plateau_patience consecutive
// epochs halves the rate (clamped at min_lr) and resets the counter.
double lr_schedule_step(const std::vector<EpochRecord>& history, const TrainConfig& cfg);

// True when validation accuracy has not improved for early_stop_patience
// consecutive epochs.
bool early_stop_check(const std::vector<EpochRecord>& history, const TrainConfig& cfg);

struct TrainResult {
  std::vector<net::VecX<float>> best_state;  // snapshot at best_epoch
  TrainHistory history;
};

// Mini-batch training with per-epoch shuffling, plateau LR reduction, early
// stopping and best-weight restoration (the model is left holding the best
// snapshot). `inspect`, when set, runs after every epoch.
TrainResult train(net::Sequential<float>& model, const Dataset& train_set, const Dataset& val_set,
                  const TrainConfig& cfg,
                  const std::function<void(int, const net::Sequential<float>&)>& inspect = {});

// Infer-mode evaluation: confusion matrix, weighted accuracy (overall) and
// unweighted accuracy (macro recall over classes with support).
EvalReport evaluate(net::Sequential<float>& model, const Dataset& dataset, int batch_size = 64);

// WA/UA/per-class recall from an arbitrary square confusion matrix.
EvalReport report_from_confusion(const Eigen::MatrixXi& confusion);

void write_history_csv(const std::filesystem::path& path, const TrainHistory& history);
void write_confusion_csv(const std::filesystem::path& path, const EvalReport& report);

}  // namespace emoaug
