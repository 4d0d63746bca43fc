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
#include <complex>
#include <stdexcept>
#include <vector>

namespace emoaug {

struct NonPowerOfTwo : std::invalid_argument {
  explicit NonPowerOfTwo(const std::string& what) : std::invalid_argument(what) {}
};

// Periodic Hann window, w[i] = 0.5 - 0.5*cos(2*pi*i/n).
Eigen::ArrayXd hann_window(Eigen::Index n);

struct StftConfig {
  int n_fft = 2048;
  int hop = 512;
  Eigen::ArrayXd window;  // defaults to hann_window(n_fft) when empty
  bool center = true;     // reflect-pad by n_fft/2 on both sides
};

// Half-spectrum STFT frames: (n_frames, n_fft/2 + 1).
struct Spectrogram {
  Eigen::MatrixXcd frames;
  StftConfig config;

  Eigen::Index n_frames() const { return frames.rows(); }
  Eigen::Index n_bins() const { return frames.cols(); }
};

// Precomputed radix-2 plan (bit-reversal order + twiddles). Plans hold no
// mutable state and may be shared across threads; each transform call works
// in place on its own buffer.
class FftPlan {
 public:
  explicit FftPlan(Eigen::Index n);  // throws NonPowerOfTwo

  Eigen::Index size() const { return n_; }
  void forward(Eigen::VectorXcd& x) const;  // unnormalized
  void inverse(Eigen::VectorXcd& x) const;  // scaled by 1/N

 private:
  void transform(Eigen::VectorXcd& x, bool conjugate) const;

  Eigen::Index n_;
  std::vector<Eigen::Index> bitrev_;
  std::vector<std::complex<double>> twiddles_;  // per stage, concatenated
};

// One-shot convenience wrappers around FftPlan.
Eigen::VectorXcd fft(const Eigen::VectorXcd& x);
Eigen::VectorXcd ifft(const Eigen::VectorXcd& x);

// With center=true, n_frames = 1 + floor(len / hop); frame t is the windowed
// n_fft chunk centered at sample t*hop.
Spectrogram stft(const Eigen::ArrayXd& signal, const StftConfig& cfg);

// Weighted overlap-add with window-square normalization; the result is
// truncated or zero-padded to out_len.
Eigen::ArrayXd istft(const Spectrogram& spec, Eigen::Index out_len);

// Time-scale modification: resamples frame positions at step `rate`, linearly
// interpolating magnitudes and advancing accumulated phase by the per-bin
// instantaneous frequency. Output has ceil(n_frames / rate) frames.
Spectrogram phase_vocoder(const Spectrogram& spec, double rate);

}  // namespace emoaug
