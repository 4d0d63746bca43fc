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
//
// Conv1D-LSTM stack with explicit forward/backward passes. Everything is
// templated on the scalar so training runs in float while gradient checks
// run the identical code in double.

#pragma once

#include <Eigen/Core>
#include <array>
#include <cmath>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "emoaug/errors.hpp"
#include "emoaug/rng.hpp"

namespace emoaug::net {

template <class S>
using MatX = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <class S>
using VecX = Eigen::Matrix<S, Eigen::Dynamic, 1>;

enum class Mode { kTrain, kInfer };
enum class Activation { kNone, kReLU, kELU };

struct NonFiniteActivation : std::runtime_error {
  explicit NonFiniteActivation(const std::string& what) : std::runtime_error(what) {}
};

// Rank-3 (batch, len, channels) minibatch stored as one (batch*len) x channels
// matrix with rows grouped per sample. Flat rank-2 data uses len == 1.
template <class S>
struct BatchSeq {
  MatX<S> data;
  Eigen::Index batch = 0;
  Eigen::Index len = 0;
  Eigen::Index channels = 0;
};

template <class S>
void apply_activation(MatX<S>& z, Activation act) {
  switch (act) {
    case Activation::kNone:
      return;
    case Activation::kReLU:
      z = z.cwiseMax(S(0));
      return;
    case Activation::kELU:
      z = z.unaryExpr([](S v) { return v > S(0) ? v : S(std::expm1(static_cast<double>(v))); });
      return;
  }
}

// Derivative recovered from the activation output (both ReLU and ELU allow
// this: a > 0 iff z > 0, and elu'(z) = elu(z) + 1 for z <= 0).
template <class S>
MatX<S> activation_grad(const MatX<S>& a, Activation act) {
  switch (act) {
    case Activation::kNone:
      return MatX<S>::Ones(a.rows(), a.cols());
    case Activation::kReLU:
      return a.unaryExpr([](S v) { return v > S(0) ? S(1) : S(0); });
    case Activation::kELU:
      return a.unaryExpr([](S v) { return v > S(0) ? S(1) : v + S(1); });
  }
  return {};
}

// Row-wise softmax with max subtraction.
template <class S>
MatX<S> softmax_rows(const MatX<S>& logits) {
  MatX<S> out = logits;
  for (Eigen::Index r = 0; r < out.rows(); ++r) {
    const S m = out.row(r).maxCoeff();
    out.row(r) = (out.row(r).array() - m).exp();
    out.row(r) /= out.row(r).sum();
  }
  return out;
}

// Mean negative log-likelihood with a 1e-12 probability floor.
template <class S>
S cross_entropy(const MatX<S>& probs, const std::vector<int>& labels) {
  if (static_cast<size_t>(probs.rows()) != labels.size()) {
    throw ShapeMismatch("cross_entropy: batch size mismatch");
  }
  double acc = 0.0;
  for (Eigen::Index r = 0; r < probs.rows(); ++r) {
    const double p = std::max(static_cast<double>(probs(r, labels[static_cast<size_t>(r)])), 1e-12);
    acc -= std::log(p);
  }
  return static_cast<S>(acc / static_cast<double>(probs.rows()));
}

// Mutable view of one learnable tensor and its gradient.
template <class S>
struct ParamView {
  MatX<S>* value;
  MatX<S>* grad;
};

namespace detail {

template <class S>
void glorot_fill(MatX<S>& w, double fan_in, double fan_out, SplitMix64& rng) {
  const double limit = std::sqrt(6.0 / (fan_in + fan_out));
  S* p = w.data();
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    p[i] = static_cast<S>(rng.uniform(-limit, limit));
  }
}

template <class S>
VecX<S> pack(std::initializer_list<const MatX<S>*> parts) {
  Eigen::Index total = 0;
  for (const MatX<S>* m : parts) total += m->size();
  VecX<S> out(total);
  Eigen::Index off = 0;
  for (const MatX<S>* m : parts) {
    Eigen::Map<VecX<S>>(out.data() + off, m->size()) =
        Eigen::Map<const VecX<S>>(m->data(), m->size());
    off += m->size();
  }
  return out;
}

template <class S>
void unpack(const VecX<S>& flat, std::initializer_list<MatX<S>*> parts, std::string_view who) {
  Eigen::Index total = 0;
  for (MatX<S>* m : parts) total += m->size();
  if (flat.size() != total) {
    throw ShapeMismatch(std::string(who) + ": state size mismatch");
  }
  Eigen::Index off = 0;
  for (MatX<S>* m : parts) {
    Eigen::Map<VecX<S>>(m->data(), m->size()) =
        Eigen::Map<const VecX<S>>(flat.data() + off, m->size());
    off += m->size();
  }
}

}  // namespace detail

template <class S>
class Layer {
 public:
  virtual ~Layer() = default;
  virtual std::string_view kind() const = 0;
  virtual BatchSeq<S> forward(const BatchSeq<S>& x, Mode mode, SplitMix64& rng) = 0;
  virtual BatchSeq<S> backward(const BatchSeq<S>& grad) = 0;
  virtual std::vector<ParamView<S>> trainable() { return {}; }
  // Parameter count as reported in a model summary: includes the
  // non-trainable batch-norm moving statistics.
  virtual Eigen::Index param_count() const { return 0; }
  virtual VecX<S> state() const { return VecX<S>(); }
  virtual void set_state(const VecX<S>& s) {
    if (s.size() != 0) throw ShapeMismatch(std::string(kind()) + ": layer holds no state");
  }
};

template <class S>
class Conv1D final : public Layer<S> {
 public:
  Conv1D(Eigen::Index in_ch, Eigen::Index out_ch, Eigen::Index kernel, Activation act,
         SplitMix64& rng)
      : in_(in_ch), out_(out_ch), k_(kernel), pad_((kernel - 1) / 2), act_(act) {
    w_.resize(k_ * in_, out_);
    detail::glorot_fill(w_, static_cast<double>(k_ * in_), static_cast<double>(k_ * out_), rng);
    b_ = MatX<S>::Zero(1, out_);
    dw_ = MatX<S>::Zero(k_ * in_, out_);
    db_ = MatX<S>::Zero(1, out_);
  }

  std::string_view kind() const override { return "conv1d"; }
  Eigen::Index param_count() const override { return k_ * in_ * out_ + out_; }
  std::vector<ParamView<S>> trainable() override { return {{&w_, &dw_}, {&b_, &db_}}; }
  VecX<S> state() const override { return detail::pack<S>({&w_, &b_}); }
  void set_state(const VecX<S>& s) override { detail::unpack<S>(s, {&w_, &b_}, kind()); }

  BatchSeq<S> forward(const BatchSeq<S>& x, Mode mode, SplitMix64&) override {
    if (x.channels != in_) throw ShapeMismatch("conv1d: channel mismatch");
    BatchSeq<S> y{MatX<S>(x.batch * x.len, out_), x.batch, x.len, out_};
    y.data.rowwise() = b_.row(0);
    for (Eigen::Index s = 0; s < x.batch; ++s) {
      const auto xs = x.data.middleRows(s * x.len, x.len);
      auto ys = y.data.middleRows(s * x.len, x.len);
      for (Eigen::Index j = 0; j < k_; ++j) {
        const Eigen::Index t0 = std::max<Eigen::Index>(0, pad_ - j);
        const Eigen::Index t1 = std::min<Eigen::Index>(x.len, x.len + pad_ - j);
        if (t1 <= t0) continue;
        ys.middleRows(t0, t1 - t0).noalias() +=
            xs.middleRows(t0 + j - pad_, t1 - t0) * w_.middleRows(j * in_, in_);
      }
    }
    apply_activation(y.data, act_);
    if (mode == Mode::kTrain) {
      x_ = x;
      a_ = y.data;
    }
    return y;
  }

  BatchSeq<S> backward(const BatchSeq<S>& grad) override {
    MatX<S> gz = grad.data.cwiseProduct(activation_grad(a_, act_));
    db_ = gz.colwise().sum();
    dw_.setZero();
    BatchSeq<S> gx{MatX<S>::Zero(x_.data.rows(), in_), x_.batch, x_.len, in_};
    for (Eigen::Index s = 0; s < x_.batch; ++s) {
      const auto xs = x_.data.middleRows(s * x_.len, x_.len);
      const auto gs = gz.middleRows(s * x_.len, x_.len);
      auto gxs = gx.data.middleRows(s * x_.len, x_.len);
      for (Eigen::Index j = 0; j < k_; ++j) {
        const Eigen::Index t0 = std::max<Eigen::Index>(0, pad_ - j);
        const Eigen::Index t1 = std::min<Eigen::Index>(x_.len, x_.len + pad_ - j);
        if (t1 <= t0) continue;
        const Eigen::Index n = t1 - t0;
        dw_.middleRows(j * in_, in_).noalias() +=
            xs.middleRows(t0 + j - pad_, n).transpose() * gs.middleRows(t0, n);
        gxs.middleRows(t0 + j - pad_, n).noalias() +=
            gs.middleRows(t0, n) * w_.middleRows(j * in_, in_).transpose();
      }
    }
    return gx;
  }

 private:
  Eigen::Index in_, out_, k_, pad_;
  Activation act_;
  MatX<S> w_, b_, dw_, db_;
  BatchSeq<S> x_;
  MatX<S> a_;
};

template <class S>
class MaxPool1D final : public Layer<S> {
 public:
  MaxPool1D(Eigen::Index pool = 2, Eigen::Index stride = 2) : pool_(pool), stride_(stride) {}

  std::string_view kind() const override { return "maxpool1d"; }

  BatchSeq<S> forward(const BatchSeq<S>& x, Mode mode, SplitMix64&) override {
    const Eigen::Index out_len = x.len >= pool_ ? (x.len - pool_) / stride_ + 1 : 0;
    BatchSeq<S> y{MatX<S>(x.batch * out_len, x.channels), x.batch, out_len, x.channels};
    argmax_.resize(x.batch * out_len, x.channels);
    for (Eigen::Index s = 0; s < x.batch; ++s) {
      for (Eigen::Index t = 0; t < out_len; ++t) {
        const Eigen::Index out_row = s * out_len + t;
        const Eigen::Index base = s * x.len + t * stride_;
        for (Eigen::Index c = 0; c < x.channels; ++c) {
          S best = x.data(base, c);
          Eigen::Index best_row = base;
          for (Eigen::Index p = 1; p < pool_; ++p) {
            if (x.data(base + p, c) > best) {
              best = x.data(base + p, c);
              best_row = base + p;
            }
          }
          y.data(out_row, c) = best;
          argmax_(out_row, c) = best_row;
        }
      }
    }
    if (mode == Mode::kTrain) {
      in_rows_ = x.batch * x.len;
      in_shape_ = {x.batch, x.len, x.channels};
    }
    return y;
  }

  BatchSeq<S> backward(const BatchSeq<S>& grad) override {
    BatchSeq<S> gx{MatX<S>::Zero(in_rows_, in_shape_[2]), in_shape_[0], in_shape_[1], in_shape_[2]};
    for (Eigen::Index r = 0; r < grad.data.rows(); ++r) {
      for (Eigen::Index c = 0; c < grad.data.cols(); ++c) {
        gx.data(argmax_(r, c), c) += grad.data(r, c);
      }
    }
    return gx;
  }

 private:
  Eigen::Index pool_, stride_;
  Eigen::Matrix<Eigen::Index, Eigen::Dynamic, Eigen::Dynamic> argmax_;
  Eigen::Index in_rows_ = 0;
  std::array<Eigen::Index, 3> in_shape_{};
};

// Per-channel batch normalization over all (batch, time) positions, with
// moving statistics for inference.
template <class S>
class BatchNorm final : public Layer<S> {
 public:
  explicit BatchNorm(Eigen::Index channels, S momentum = S(0.99), S eps = S(1e-3))
      : ch_(channels), momentum_(momentum), eps_(eps) {
    gamma_ = MatX<S>::Ones(1, ch_);
    beta_ = MatX<S>::Zero(1, ch_);
    mov_mean_ = MatX<S>::Zero(1, ch_);
    mov_var_ = MatX<S>::Ones(1, ch_);
    dgamma_ = MatX<S>::Zero(1, ch_);
    dbeta_ = MatX<S>::Zero(1, ch_);
  }

  std::string_view kind() const override { return "batchnorm"; }
  Eigen::Index param_count() const override { return 4 * ch_; }
  std::vector<ParamView<S>> trainable() override { return {{&gamma_, &dgamma_}, {&beta_, &dbeta_}}; }
  VecX<S> state() const override { return detail::pack<S>({&gamma_, &beta_, &mov_mean_, &mov_var_}); }
  void set_state(const VecX<S>& s) override {
    detail::unpack<S>(s, {&gamma_, &beta_, &mov_mean_, &mov_var_}, kind());
  }

  BatchSeq<S> forward(const BatchSeq<S>& x, Mode mode, SplitMix64&) override {
    if (x.channels != ch_) throw ShapeMismatch("batchnorm: channel mismatch");
    BatchSeq<S> y{MatX<S>(x.data.rows(), ch_), x.batch, x.len, x.channels};
    if (mode == Mode::kTrain) {
      const auto rows = static_cast<S>(x.data.rows());
      MatX<S> mean = x.data.colwise().mean();
      MatX<S> centered = x.data.rowwise() - mean.row(0);
      MatX<S> var = centered.cwiseProduct(centered).colwise().sum() / rows;  // biased
      inv_std_ = (var.array() + eps_).rsqrt().matrix();
      xhat_ = centered.array().rowwise() * inv_std_.row(0).array();
      y.data = (xhat_.array().rowwise() * gamma_.row(0).array()).rowwise() + beta_.row(0).array();
      mov_mean_ = momentum_ * mov_mean_ + (S(1) - momentum_) * mean;
      mov_var_ = momentum_ * mov_var_ + (S(1) - momentum_) * var;
    } else {
      MatX<S> inv = (mov_var_.array() + eps_).rsqrt().matrix();
      y.data = (((x.data.rowwise() - mov_mean_.row(0)).array().rowwise() * inv.row(0).array())
                    .rowwise() *
                gamma_.row(0).array())
                   .rowwise() +
               beta_.row(0).array();
    }
    return y;
  }

  BatchSeq<S> backward(const BatchSeq<S>& grad) override {
    const auto m = static_cast<S>(grad.data.rows());
    dgamma_ = grad.data.cwiseProduct(xhat_).colwise().sum();
    dbeta_ = grad.data.colwise().sum();

    MatX<S> gxhat = grad.data.array().rowwise() * gamma_.row(0).array();
    MatX<S> sum_g = gxhat.colwise().sum();
    MatX<S> sum_gx = gxhat.cwiseProduct(xhat_).colwise().sum();
    BatchSeq<S> gx{MatX<S>(grad.data.rows(), ch_), grad.batch, grad.len, ch_};
    gx.data = ((gxhat * m).rowwise() - sum_g.row(0) -
               (xhat_.array().rowwise() * sum_gx.row(0).array()).matrix())
                  .array()
                  .rowwise() *
              (inv_std_.row(0).array() / m);
    return gx;
  }

 private:
  Eigen::Index ch_;
  S momentum_, eps_;
  MatX<S> gamma_, beta_, mov_mean_, mov_var_, dgamma_, dbeta_;
  MatX<S> xhat_, inv_std_;
};

// Inverted dropout: survivors scaled by 1/(1-rate) in training, identity at
// inference.
template <class S>
class Dropout final : public Layer<S> {
 public:
  explicit Dropout(double rate) : rate_(rate) {
    if (rate_ < 0.0 || rate_ >= 1.0) throw std::invalid_argument("dropout: rate must be in [0, 1)");
  }

  std::string_view kind() const override { return "dropout"; }

  BatchSeq<S> forward(const BatchSeq<S>& x, Mode mode, SplitMix64& rng) override {
    if (mode == Mode::kInfer || rate_ == 0.0) {
      mask_.resize(0, 0);
      return x;
    }
    const S scale = S(1.0 / (1.0 - rate_));
    mask_.resize(x.data.rows(), x.data.cols());
    S* p = mask_.data();
    for (Eigen::Index i = 0; i < mask_.size(); ++i) {
      p[i] = rng.uniform() < rate_ ? S(0) : scale;
    }
    BatchSeq<S> y{x.data.cwiseProduct(mask_), x.batch, x.len, x.channels};
    return y;
  }

  BatchSeq<S> backward(const BatchSeq<S>& grad) override {
    if (mask_.size() == 0) return grad;
    return {grad.data.cwiseProduct(mask_), grad.batch, grad.len, grad.channels};
  }

 private:
  double rate_;
  MatX<S> mask_;
};

// Gate layout follows the [input | forget | cell | output] column blocks.
// Backpropagation unrolls the full sequence.
template <class S>
class LSTM final : public Layer<S> {
 public:
  LSTM(Eigen::Index in_ch, Eigen::Index units, bool return_sequences, SplitMix64& rng)
      : in_(in_ch), units_(units), return_seq_(return_sequences) {
    w_.resize(in_, 4 * units_);
    u_.resize(units_, 4 * units_);
    detail::glorot_fill(w_, static_cast<double>(in_), static_cast<double>(4 * units_), rng);
    detail::glorot_fill(u_, static_cast<double>(units_), static_cast<double>(4 * units_), rng);
    b_ = MatX<S>::Zero(1, 4 * units_);
    b_.block(0, units_, 1, units_).setOnes();  // forget-gate bias
    dw_ = MatX<S>::Zero(in_, 4 * units_);
    du_ = MatX<S>::Zero(units_, 4 * units_);
    db_ = MatX<S>::Zero(1, 4 * units_);
  }

  std::string_view kind() const override { return "lstm"; }
  Eigen::Index param_count() const override { return 4 * (in_ * units_ + units_ * units_ + units_); }
  std::vector<ParamView<S>> trainable() override {
    return {{&w_, &dw_}, {&u_, &du_}, {&b_, &db_}};
  }
  VecX<S> state() const override { return detail::pack<S>({&w_, &u_, &b_}); }
  void set_state(const VecX<S>& s) override { detail::unpack<S>(s, {&w_, &u_, &b_}, kind()); }

  BatchSeq<S> forward(const BatchSeq<S>& x, Mode mode, SplitMix64&) override {
    if (x.channels != in_) throw ShapeMismatch("lstm: channel mismatch");
    const Eigen::Index B = x.batch, L = x.len;
    const bool cache = mode == Mode::kTrain;
    if (cache) {
      x_ = x;
      i_.assign(L, {});
      f_.assign(L, {});
      g_.assign(L, {});
      o_.assign(L, {});
      c_.assign(L, {});
      tanhc_.assign(L, {});
      h_.assign(L, {});
    }

    MatX<S> h_prev = MatX<S>::Zero(B, units_);
    MatX<S> c_prev = MatX<S>::Zero(B, units_);
    BatchSeq<S> y;
    if (return_seq_) {
      y = {MatX<S>(B * L, units_), B, L, units_};
    }

    MatX<S> xt(B, in_);
    for (Eigen::Index t = 0; t < L; ++t) {
      for (Eigen::Index s = 0; s < B; ++s) xt.row(s) = x.data.row(s * L + t);
      MatX<S> z = xt * w_ + h_prev * u_;
      z.rowwise() += b_.row(0);
      MatX<S> ig = sigmoid(z.leftCols(units_));
      MatX<S> fg = sigmoid(z.middleCols(units_, units_));
      MatX<S> gg = z.middleCols(2 * units_, units_).array().tanh().matrix();
      MatX<S> og = sigmoid(z.rightCols(units_));
      MatX<S> ct = fg.cwiseProduct(c_prev) + ig.cwiseProduct(gg);
      MatX<S> tc = ct.array().tanh().matrix();
      MatX<S> ht = og.cwiseProduct(tc);

      if (return_seq_) {
        for (Eigen::Index s = 0; s < B; ++s) y.data.row(s * L + t) = ht.row(s);
      }
      if (cache) {
        i_[t] = ig;
        f_[t] = fg;
        g_[t] = gg;
        o_[t] = og;
        c_[t] = ct;
        tanhc_[t] = tc;
        h_[t] = ht;
      }
      h_prev = std::move(ht);
      c_prev = std::move(ct);
    }

    if (!return_seq_) {
      y = {std::move(h_prev), B, 1, units_};
    }
    return y;
  }

  BatchSeq<S> backward(const BatchSeq<S>& grad) override {
    const Eigen::Index B = x_.batch, L = x_.len;
    dw_.setZero();
    du_.setZero();
    db_.setZero();
    BatchSeq<S> gx{MatX<S>::Zero(B * L, in_), B, L, in_};

    MatX<S> dh_next = MatX<S>::Zero(B, units_);
    MatX<S> dc_next = MatX<S>::Zero(B, units_);
    MatX<S> xt(B, in_);
    for (Eigen::Index t = L - 1; t >= 0; --t) {
      MatX<S> dh = dh_next;
      if (return_seq_) {
        for (Eigen::Index s = 0; s < B; ++s) dh.row(s) += grad.data.row(s * L + t);
      } else if (t == L - 1) {
        dh += grad.data;
      }

      const MatX<S>& ig = i_[t];
      const MatX<S>& fg = f_[t];
      const MatX<S>& gg = g_[t];
      const MatX<S>& og = o_[t];
      const MatX<S>& tc = tanhc_[t];

      MatX<S> dog = dh.cwiseProduct(tc);
      MatX<S> dc = dc_next + dh.cwiseProduct(og).cwiseProduct(
                                 (S(1) - tc.array().square()).matrix());
      MatX<S> dfg = t > 0 ? dc.cwiseProduct(c_[t - 1]) : MatX<S>::Zero(B, units_);
      MatX<S> dig = dc.cwiseProduct(gg);
      MatX<S> dgg = dc.cwiseProduct(ig);
      dc_next = dc.cwiseProduct(fg);

      MatX<S> dz(B, 4 * units_);
      dz.leftCols(units_) = dig.cwiseProduct(ig.cwiseProduct((S(1) - ig.array()).matrix()));
      dz.middleCols(units_, units_) =
          dfg.cwiseProduct(fg.cwiseProduct((S(1) - fg.array()).matrix()));
      dz.middleCols(2 * units_, units_) =
          dgg.cwiseProduct((S(1) - gg.array().square()).matrix());
      dz.rightCols(units_) = dog.cwiseProduct(og.cwiseProduct((S(1) - og.array()).matrix()));

      for (Eigen::Index s = 0; s < B; ++s) xt.row(s) = x_.data.row(s * L + t);
      dw_.noalias() += xt.transpose() * dz;
      if (t > 0) du_.noalias() += h_[t - 1].transpose() * dz;
      db_ += dz.colwise().sum();

      MatX<S> dxt = dz * w_.transpose();
      for (Eigen::Index s = 0; s < B; ++s) gx.data.row(s * L + t) = dxt.row(s);
      dh_next = dz * u_.transpose();
    }
    return gx;
  }

 private:
  static MatX<S> sigmoid(const MatX<S>& z) {
    return ((-z.array()).exp() + S(1)).inverse().matrix();
  }

  Eigen::Index in_, units_;
  bool return_seq_;
  MatX<S> w_, u_, b_, dw_, du_, db_;
  BatchSeq<S> x_;
  std::vector<MatX<S>> i_, f_, g_, o_, c_, tanhc_, h_;
};

template <class S>
class Dense final : public Layer<S> {
 public:
  Dense(Eigen::Index in_ch, Eigen::Index out_ch, Activation act, SplitMix64& rng)
      : in_(in_ch), out_(out_ch), act_(act) {
    w_.resize(in_, out_);
    detail::glorot_fill(w_, static_cast<double>(in_), static_cast<double>(out_), rng);
    b_ = MatX<S>::Zero(1, out_);
    dw_ = MatX<S>::Zero(in_, out_);
    db_ = MatX<S>::Zero(1, out_);
  }

  std::string_view kind() const override { return "dense"; }
  Eigen::Index param_count() const override { return in_ * out_ + out_; }
  std::vector<ParamView<S>> trainable() override { return {{&w_, &dw_}, {&b_, &db_}}; }
  VecX<S> state() const override { return detail::pack<S>({&w_, &b_}); }
  void set_state(const VecX<S>& s) override { detail::unpack<S>(s, {&w_, &b_}, kind()); }

  BatchSeq<S> forward(const BatchSeq<S>& x, Mode mode, SplitMix64&) override {
    if (x.len != 1) throw ShapeMismatch("dense: expects flat input");
    if (x.channels != in_) throw ShapeMismatch("dense: channel mismatch");
    BatchSeq<S> y{x.data * w_, x.batch, 1, out_};
    y.data.rowwise() += b_.row(0);
    apply_activation(y.data, act_);
    if (mode == Mode::kTrain) {
      x_ = x.data;
      a_ = y.data;
    }
    return y;
  }

  BatchSeq<S> backward(const BatchSeq<S>& grad) override {
    MatX<S> gz = grad.data.cwiseProduct(activation_grad(a_, act_));
    dw_.noalias() = x_.transpose() * gz;
    db_ = gz.colwise().sum();
    return {gz * w_.transpose(), grad.batch, 1, in_};
  }

 private:
  Eigen::Index in_, out_;
  Activation act_;
  MatX<S> w_, b_, dw_, db_;
  MatX<S> x_, a_;
};

// Layer stack ending in a softmax classifier. backward() seeds the gradient
// of the mean cross-entropy at the logits.
template <class S>
class Sequential {
 public:
  void add(std::unique_ptr<Layer<S>> layer) { layers_.push_back(std::move(layer)); }
  Eigen::Index num_layers() const { return static_cast<Eigen::Index>(layers_.size()); }
  Layer<S>& layer(Eigen::Index i) { return *layers_[static_cast<size_t>(i)]; }
  const Layer<S>& layer(Eigen::Index i) const { return *layers_[static_cast<size_t>(i)]; }

  // Returns class probabilities (batch x classes). `trace`, when given,
  // collects each layer's output (len, channels).
  MatX<S> forward(const BatchSeq<S>& input, Mode mode, SplitMix64& rng,
                  std::vector<std::pair<Eigen::Index, Eigen::Index>>* trace = nullptr) {
    BatchSeq<S> cur = input;
    for (auto& layer : layers_) {
      cur = layer->forward(cur, mode, rng);
      if (!cur.data.allFinite()) {
        throw NonFiniteActivation("non-finite activations after " + std::string(layer->kind()));
      }
      if (trace) trace->emplace_back(cur.len, cur.channels);
    }
    if (cur.len != 1) throw ShapeMismatch("model must end with flat output");
    probs_ = softmax_rows(cur.data);
    return probs_;
  }

  // Gradient of mean cross-entropy w.r.t. every parameter; requires a
  // train-mode forward on the same batch first.
  void backward(const std::vector<int>& labels) {
    if (static_cast<size_t>(probs_.rows()) != labels.size()) {
      throw ShapeMismatch("backward: label count mismatch");
    }
    const auto B = static_cast<S>(probs_.rows());
    MatX<S> g = probs_;
    for (Eigen::Index r = 0; r < g.rows(); ++r) {
      g(r, labels[static_cast<size_t>(r)]) -= S(1);
    }
    g /= B;
    BatchSeq<S> grad{std::move(g), probs_.rows(), 1, probs_.cols()};
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) {
      grad = (*it)->backward(grad);
    }
  }

  S loss(const std::vector<int>& labels) const { return cross_entropy(probs_, labels); }
  const MatX<S>& probabilities() const { return probs_; }

  std::vector<ParamView<S>> trainable() {
    std::vector<ParamView<S>> out;
    for (auto& layer : layers_) {
      for (ParamView<S> p : layer->trainable()) out.push_back(p);
    }
    return out;
  }

  std::vector<Eigen::Index> param_counts() const {
    std::vector<Eigen::Index> out;
    out.reserve(layers_.size());
    for (const auto& layer : layers_) out.push_back(layer->param_count());
    return out;
  }

  Eigen::Index total_param_count() const {
    Eigen::Index total = 0;
    for (const auto& layer : layers_) total += layer->param_count();
    return total;
  }

  // Full serializable state (weights plus moving statistics), layer by layer.
  std::vector<VecX<S>> state() const {
    std::vector<VecX<S>> out;
    out.reserve(layers_.size());
    for (const auto& layer : layers_) out.push_back(layer->state());
    return out;
  }

  void set_state(const std::vector<VecX<S>>& state) {
    if (state.size() != layers_.size()) throw ShapeMismatch("set_state: layer count mismatch");
    for (size_t i = 0; i < layers_.size(); ++i) layers_[i]->set_state(state[i]);
  }

 private:
  std::vector<std::unique_ptr<Layer<S>>> layers_;
  MatX<S> probs_;
};

// Widths of the classifier stack. Defaults reproduce the full model; tests
// shrink them for fast runs.
struct ModelConfig {
  Eigen::Index input_len = 2376;
  Eigen::Index input_channels = 1;
  Activation conv_activation = Activation::kReLU;
  std::array<Eigen::Index, 3> conv_filters{256, 512, 256};
  std::array<Eigen::Index, 3> conv_kernels{5, 3, 3};
  std::array<Eigen::Index, 2> lstm_units{128, 128};
  std::array<Eigen::Index, 3> dense_units{128, 64, 32};
  double dropout = 0.2;
  Eigen::Index num_classes = 7;
};

// The 23-layer stack. Block 1 pools before normalizing; blocks 2 and 3
// normalize before pooling.
template <class S>
Sequential<S> build_model(const ModelConfig& cfg, std::uint64_t seed) {
  SplitMix64 rng(seed);
  Sequential<S> net;
  const Activation conv_act = cfg.conv_activation;

  net.add(std::make_unique<Conv1D<S>>(cfg.input_channels, cfg.conv_filters[0],
                                      cfg.conv_kernels[0], conv_act, rng));
  net.add(std::make_unique<MaxPool1D<S>>());
  net.add(std::make_unique<BatchNorm<S>>(cfg.conv_filters[0]));
  net.add(std::make_unique<Dropout<S>>(cfg.dropout));

  net.add(std::make_unique<Conv1D<S>>(cfg.conv_filters[0], cfg.conv_filters[1],
                                      cfg.conv_kernels[1], conv_act, rng));
  net.add(std::make_unique<BatchNorm<S>>(cfg.conv_filters[1]));
  net.add(std::make_unique<MaxPool1D<S>>());
  net.add(std::make_unique<Dropout<S>>(cfg.dropout));

  net.add(std::make_unique<Conv1D<S>>(cfg.conv_filters[1], cfg.conv_filters[2],
                                      cfg.conv_kernels[2], conv_act, rng));
  net.add(std::make_unique<BatchNorm<S>>(cfg.conv_filters[2]));
  net.add(std::make_unique<MaxPool1D<S>>());

  net.add(std::make_unique<LSTM<S>>(cfg.conv_filters[2], cfg.lstm_units[0], true, rng));
  net.add(std::make_unique<Dropout<S>>(cfg.dropout));
  net.add(std::make_unique<LSTM<S>>(cfg.lstm_units[0], cfg.lstm_units[1], false, rng));
  net.add(std::make_unique<Dropout<S>>(cfg.dropout));

  net.add(std::make_unique<Dense<S>>(cfg.lstm_units[1], cfg.dense_units[0], Activation::kELU, rng));
  net.add(std::make_unique<BatchNorm<S>>(cfg.dense_units[0]));
  net.add(std::make_unique<Dense<S>>(cfg.dense_units[0], cfg.dense_units[1], Activation::kELU, rng));
  net.add(std::make_unique<BatchNorm<S>>(cfg.dense_units[1]));
  net.add(std::make_unique<Dense<S>>(cfg.dense_units[1], cfg.dense_units[2], Activation::kELU, rng));
  net.add(std::make_unique<BatchNorm<S>>(cfg.dense_units[2]));
  net.add(std::make_unique<Dropout<S>>(cfg.dropout));
  net.add(std::make_unique<Dense<S>>(cfg.dense_units[2], cfg.num_classes, Activation::kNone, rng));
  return net;
}

// Adam with bias correction; one moment pair per trainable tensor.
template <class S>
class Adam {
 public:
  explicit Adam(const std::vector<ParamView<S>>& params, S beta1 = S(0.9), S beta2 = S(0.999),
                S eps = S(1e-8))
      : beta1_(beta1), beta2_(beta2), eps_(eps) {
    m_.reserve(params.size());
    v_.reserve(params.size());
    for (const ParamView<S>& p : params) {
      m_.push_back(MatX<S>::Zero(p.value->rows(), p.value->cols()));
      v_.push_back(MatX<S>::Zero(p.value->rows(), p.value->cols()));
    }
  }

  void step(const std::vector<ParamView<S>>& params, S lr) {
    if (params.size() != m_.size()) throw ShapeMismatch("adam: parameter list changed");
    ++t_;
    const S bc1 = S(1) - S(std::pow(static_cast<double>(beta1_), t_));
    const S bc2 = S(1) - S(std::pow(static_cast<double>(beta2_), t_));
    for (size_t i = 0; i < params.size(); ++i) {
      const MatX<S>& g = *params[i].grad;
      m_[i] = beta1_ * m_[i] + (S(1) - beta1_) * g;
      v_[i] = beta2_ * v_[i] + (S(1) - beta2_) * g.cwiseProduct(g);
      params[i].value->array() -=
          lr * (m_[i].array() / bc1) / ((v_[i].array() / bc2).sqrt() + eps_);
    }
  }

  long steps() const { return t_; }

 private:
  S beta1_, beta2_, eps_;
  long t_ = 0;
  std::vector<MatX<S>> m_, v_;
};

}  // namespace emoaug::net
