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

#include "emoaug/dsp.hpp"

#include <cmath>

namespace emoaug {

namespace {

bool is_pow2(Eigen::Index n) { return n > 0 && (n & (n - 1)) == 0; }

// Symmetric reflection without repeating the edge sample, bouncing for
// signals shorter than the pad width.
Eigen::Index reflect_index(Eigen::Index i, Eigen::Index n) {
  if (n == 1) return 0;
  while (i < 0 || i >= n) {
    if (i < 0) i = -i;
    if (i >= n) i = 2 * (n - 1) - i;
  }
  return i;
}

double princarg(double phase) {
  return phase - 2.0 * M_PI * std::round(phase / (2.0 * M_PI));
}

const Eigen::ArrayXd& effective_window(const StftConfig& cfg, Eigen::ArrayXd& storage) {
  if (cfg.window.size() == 0) {
    storage = hann_window(cfg.n_fft);
    return storage;
  }
  if (cfg.window.size() != cfg.n_fft) {
    throw std::invalid_argument("stft: window length must equal n_fft");
  }
  return cfg.window;
}

void validate(const StftConfig& cfg) {
  if (!is_pow2(cfg.n_fft)) throw NonPowerOfTwo("stft: n_fft must be a power of two");
  if (cfg.hop <= 0 || cfg.hop > cfg.n_fft) {
    throw std::invalid_argument("stft: hop must satisfy 0 < hop <= n_fft");
  }
}

}  // namespace

Eigen::ArrayXd hann_window(Eigen::Index n) {
  if (n < 1) throw std::invalid_argument("hann_window: n must be >= 1");
  Eigen::ArrayXd w(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    w[i] = 0.5 - 0.5 * std::cos(2.0 * M_PI * static_cast<double>(i) / static_cast<double>(n));
  }
  return w;
}

FftPlan::FftPlan(Eigen::Index n) : n_(n) {
  if (!is_pow2(n)) throw NonPowerOfTwo("fft: length must be a power of two");

  bitrev_.resize(n);
  bitrev_[0] = 0;
  int log2n = 0;
  while ((Eigen::Index{1} << log2n) < n) ++log2n;
  for (Eigen::Index i = 1; i < n; ++i) {
    bitrev_[i] = (bitrev_[i >> 1] >> 1) | ((i & 1) << (log2n - 1));
  }

  // Twiddles for stage with half-size h: e^(-i*pi*j/h), j in [0, h).
  twiddles_.reserve(n - 1);
  for (Eigen::Index h = 1; h < n; h *= 2) {
    for (Eigen::Index j = 0; j < h; ++j) {
      const double ang = -M_PI * static_cast<double>(j) / static_cast<double>(h);
      twiddles_.emplace_back(std::cos(ang), std::sin(ang));
    }
  }
}

void FftPlan::transform(Eigen::VectorXcd& x, bool conjugate) const {
  if (x.size() != n_) throw std::invalid_argument("fft: buffer does not match plan size");
  for (Eigen::Index i = 0; i < n_; ++i) {
    const Eigen::Index j = bitrev_[i];
    if (i < j) std::swap(x[i], x[j]);
  }
  size_t tw = 0;  // start of this stage's block of h twiddles
  for (Eigen::Index h = 1; h < n_; h *= 2) {
    for (Eigen::Index start = 0; start < n_; start += 2 * h) {
      for (Eigen::Index j = 0; j < h; ++j) {
        std::complex<double> w = twiddles_[tw + static_cast<size_t>(j)];
        if (conjugate) w = std::conj(w);
        const std::complex<double> u = x[start + j];
        const std::complex<double> v = x[start + j + h] * w;
        x[start + j] = u + v;
        x[start + j + h] = u - v;
      }
    }
    tw += static_cast<size_t>(h);
  }
}

void FftPlan::forward(Eigen::VectorXcd& x) const { transform(x, false); }

void FftPlan::inverse(Eigen::VectorXcd& x) const {
  transform(x, true);
  x /= static_cast<double>(n_);
}

Eigen::VectorXcd fft(const Eigen::VectorXcd& x) {
  FftPlan plan(x.size());
  Eigen::VectorXcd y = x;
  plan.forward(y);
  return y;
}

Eigen::VectorXcd ifft(const Eigen::VectorXcd& x) {
  FftPlan plan(x.size());
  Eigen::VectorXcd y = x;
  plan.inverse(y);
  return y;
}

Spectrogram stft(const Eigen::ArrayXd& signal, const StftConfig& cfg) {
  validate(cfg);
  if (signal.size() == 0) throw std::invalid_argument("stft: empty signal");

  Eigen::ArrayXd window_storage;
  const Eigen::ArrayXd& window = effective_window(cfg, window_storage);

  const Eigen::Index n = signal.size();
  const Eigen::Index n_fft = cfg.n_fft;
  const Eigen::Index pad = cfg.center ? n_fft / 2 : 0;
  const Eigen::Index n_frames =
      cfg.center ? 1 + n / cfg.hop : (n >= n_fft ? 1 + (n - n_fft) / cfg.hop : 0);
  const Eigen::Index n_bins = n_fft / 2 + 1;

  FftPlan plan(n_fft);
  Spectrogram spec;
  spec.config = cfg;
  spec.config.window = window;
  spec.frames.resize(n_frames, n_bins);

  Eigen::VectorXcd buf(n_fft);
  for (Eigen::Index t = 0; t < n_frames; ++t) {
    const Eigen::Index start = t * cfg.hop - pad;
    for (Eigen::Index i = 0; i < n_fft; ++i) {
      Eigen::Index src = start + i;
      if (cfg.center) {
        src = reflect_index(src, n);
      }
      const double v = (src >= 0 && src < n) ? signal[src] : 0.0;
      buf[i] = std::complex<double>(v * window[i], 0.0);
    }
    plan.forward(buf);
    spec.frames.row(t) = buf.head(n_bins).transpose();
  }
  return spec;
}

Eigen::ArrayXd istft(const Spectrogram& spec, Eigen::Index out_len) {
  const StftConfig& cfg = spec.config;
  validate(cfg);
  Eigen::ArrayXd window_storage;
  const Eigen::ArrayXd& window = effective_window(cfg, window_storage);

  const Eigen::Index n_fft = cfg.n_fft;
  const Eigen::Index n_frames = spec.n_frames();
  const Eigen::Index padded_len = n_frames > 0 ? (n_frames - 1) * cfg.hop + n_fft : 0;

  Eigen::ArrayXd acc = Eigen::ArrayXd::Zero(padded_len);
  Eigen::ArrayXd wsum = Eigen::ArrayXd::Zero(padded_len);

  FftPlan plan(n_fft);
  Eigen::VectorXcd buf(n_fft);
  const Eigen::Index n_bins = n_fft / 2 + 1;
  for (Eigen::Index t = 0; t < n_frames; ++t) {
    buf.head(n_bins) = spec.frames.row(t).transpose();
    for (Eigen::Index k = 1; k < n_fft / 2; ++k) {
      buf[n_fft - k] = std::conj(buf[k]);
    }
    plan.inverse(buf);
    const Eigen::Index base = t * cfg.hop;
    for (Eigen::Index i = 0; i < n_fft; ++i) {
      acc[base + i] += window[i] * buf[i].real();
      wsum[base + i] += window[i] * window[i];
    }
  }

  for (Eigen::Index i = 0; i < padded_len; ++i) {
    acc[i] = wsum[i] > 1e-10 ? acc[i] / wsum[i] : 0.0;
  }

  const Eigen::Index skip = cfg.center ? n_fft / 2 : 0;
  Eigen::ArrayXd out = Eigen::ArrayXd::Zero(out_len);
  const Eigen::Index n = std::min(out_len, std::max<Eigen::Index>(0, padded_len - skip));
  if (n > 0) out.head(n) = acc.segment(skip, n);
  return out;
}

Spectrogram phase_vocoder(const Spectrogram& spec, double rate) {
  if (!(rate > 0.0)) throw std::invalid_argument("phase_vocoder: rate must be positive");
  const Eigen::Index n_in = spec.n_frames();
  const Eigen::Index n_bins = spec.n_bins();
  const Eigen::Index n_fft = spec.config.n_fft;

  Spectrogram out;
  out.config = spec.config;
  if (n_in == 0) {
    out.frames.resize(0, n_bins);
    return out;
  }

  const auto n_out = static_cast<Eigen::Index>(std::ceil(static_cast<double>(n_in) / rate));
  out.frames.resize(n_out, n_bins);

  // Expected per-hop phase advance of each bin.
  Eigen::ArrayXd omega(n_bins);
  for (Eigen::Index k = 0; k < n_bins; ++k) {
    omega[k] = 2.0 * M_PI * static_cast<double>(k) * spec.config.hop / static_cast<double>(n_fft);
  }

  Eigen::ArrayXd phase(n_bins);
  for (Eigen::Index k = 0; k < n_bins; ++k) phase[k] = std::arg(spec.frames(0, k));

  double t = 0.0;
  for (Eigen::Index j = 0; j < n_out; ++j, t += rate) {
    const auto i = std::min<Eigen::Index>(static_cast<Eigen::Index>(std::floor(t)), n_in - 1);
    const double a = t - static_cast<double>(i);
    const bool has_next = i + 1 < n_in;

    for (Eigen::Index k = 0; k < n_bins; ++k) {
      const std::complex<double> cur = spec.frames(i, k);
      const std::complex<double> nxt = has_next ? spec.frames(i + 1, k) : std::complex<double>(0.0);
      const double mag = (1.0 - a) * std::abs(cur) + a * std::abs(nxt);
      out.frames(j, k) = std::polar(mag, phase[k]);

      const double dphi =
          has_next ? princarg(std::arg(nxt) - std::arg(cur) - omega[k]) : 0.0;
      phase[k] = princarg(phase[k] + omega[k] + dphi);
    }
  }
  return out;
}

}  // namespace emoaug
