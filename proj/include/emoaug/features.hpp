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

#include "emoaug/audio.hpp"
#include "emoaug/errors.hpp"

namespace emoaug {

struct FeatureConfig {
  int frame_len = 2048;
  int hop = 512;
  int n_mfcc = 20;
  int n_mels = 128;
  double fmin = 0.0;
  double fmax = -1.0;       // <= 0 means sample_rate / 2
  double log_floor = 1e-10;

  Eigen::Index n_frames(Eigen::Index n_samples) const { return 1 + n_samples / hop; }
};

double mel_from_hz(double hz);
double hz_from_mel(double mel);

// Per centered frame, the fraction of adjacent sample pairs whose signs
// differ strictly (zero counts as non-negative). Values in [0, 1].
Eigen::ArrayXd zcr_frames(const AudioClip& clip, const FeatureConfig& cfg);

// Per centered frame, sqrt(mean(x^2)).
Eigen::ArrayXd rmse_frames(const AudioClip& clip, const FeatureConfig& cfg);

// Triangular filters with centers equally spaced on the mel scale,
// area-normalized by 2 / (f_hi - f_lo). Shape (n_mels, frame_len/2 + 1).
Eigen::MatrixXd mel_filterbank(const FeatureConfig& cfg, int sample_rate);

// Power spectrogram -> mel filterbank -> 10*log10 (floored) -> orthonormal
// DCT-II along the mel axis, first n_mfcc coefficients.
// Shape (n_mfcc, n_frames).
Eigen::MatrixXd mfcc(const AudioClip& clip, const FeatureConfig& cfg);

// Concatenates [zcr | rmse | mfcc coefficient-major] into one vector of
// length (2 + n_mfcc) * n_frames (2376 for the canonical window).
Eigen::VectorXd assemble_features(const Eigen::ArrayXd& zcr, const Eigen::ArrayXd& rmse,
                                  const Eigen::MatrixXd& mfcc_mat);

// zcr/rmse/mfcc/assemble in one call.
Eigen::VectorXd extract_features(const AudioClip& clip, const FeatureConfig& cfg);

}  // namespace emoaug
