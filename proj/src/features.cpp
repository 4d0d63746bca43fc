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

#include "emoaug/features.hpp"

#include <cmath>

#include "emoaug/dsp.hpp"

namespace emoaug {

namespace {

// Zero-padded centered frame extraction shared by ZCR and RMSE. Frame t
// covers original samples [t*hop - frame_len/2, t*hop + frame_len/2).
Eigen::ArrayXd centered_frame(const Eigen::ArrayXd& x, Eigen::Index t, const FeatureConfig& cfg) {
  Eigen::ArrayXd frame = Eigen::ArrayXd::Zero(cfg.frame_len);
  const Eigen::Index start = t * cfg.hop - cfg.frame_len / 2;
  for (Eigen::Index i = 0; i < cfg.frame_len; ++i) {
    const Eigen::Index src = start + i;
    if (src >= 0 && src < x.size()) frame[i] = x[src];
  }
  return frame;
}

void validate(const FeatureConfig& cfg) {
  if (cfg.frame_len <= 0 || cfg.hop <= 0 || cfg.hop > cfg.frame_len) {
    throw std::invalid_argument("features: need 0 < hop <= frame_len");
  }
  if (cfg.n_mfcc <= 0 || cfg.n_mels <= 0 || cfg.n_mfcc > cfg.n_mels) {
    throw std::invalid_argument("features: need 0 < n_mfcc <= n_mels");
  }
}

}  // namespace

double mel_from_hz(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double hz_from_mel(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

Eigen::ArrayXd zcr_frames(const AudioClip& clip, const FeatureConfig& cfg) {
  validate(cfg);
  const Eigen::Index n_frames = cfg.n_frames(clip.samples.size());
  Eigen::ArrayXd out(n_frames);
  for (Eigen::Index t = 0; t < n_frames; ++t) {
    const Eigen::ArrayXd frame = centered_frame(clip.samples, t, cfg);
    Eigen::Index flips = 0;
    for (Eigen::Index i = 1; i < frame.size(); ++i) {
      if ((frame[i - 1] >= 0.0) != (frame[i] >= 0.0)) ++flips;
    }
    out[t] = static_cast<double>(flips) / static_cast<double>(cfg.frame_len - 1);
  }
  return out;
}

Eigen::ArrayXd rmse_frames(const AudioClip& clip, const FeatureConfig& cfg) {
  validate(cfg);
  const Eigen::Index n_frames = cfg.n_frames(clip.samples.size());
  Eigen::ArrayXd out(n_frames);
  for (Eigen::Index t = 0; t < n_frames; ++t) {
    const Eigen::ArrayXd frame = centered_frame(clip.samples, t, cfg);
    out[t] = std::sqrt(frame.square().mean());
  }
  return out;
}

Eigen::MatrixXd mel_filterbank(const FeatureConfig& cfg, int sample_rate) {
  validate(cfg);
  const double fmax = cfg.fmax > 0.0 ? cfg.fmax : sample_rate / 2.0;
  if (fmax > sample_rate / 2.0) {
    throw std::invalid_argument("mel_filterbank: fmax above Nyquist");
  }

  const Eigen::Index n_bins = cfg.frame_len / 2 + 1;
  const double mel_lo = mel_from_hz(cfg.fmin);
  const double mel_hi = mel_from_hz(fmax);

  // n_mels + 2 corner frequencies, evenly spaced in mel.
  Eigen::ArrayXd corners(cfg.n_mels + 2);
  for (Eigen::Index m = 0; m < corners.size(); ++m) {
    const double mel = mel_lo + (mel_hi - mel_lo) * static_cast<double>(m) /
                                    static_cast<double>(cfg.n_mels + 1);
    corners[m] = hz_from_mel(mel);
  }

  Eigen::MatrixXd fb = Eigen::MatrixXd::Zero(cfg.n_mels, n_bins);
  for (Eigen::Index m = 0; m < cfg.n_mels; ++m) {
    const double f_lo = corners[m];
    const double f_c = corners[m + 1];
    const double f_hi = corners[m + 2];
    const double norm = 2.0 / (f_hi - f_lo);
    for (Eigen::Index k = 0; k < n_bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate / cfg.frame_len;
      const double rise = (f - f_lo) / (f_c - f_lo);
      const double fall = (f_hi - f) / (f_hi - f_c);
      const double w = std::min(rise, fall);
      if (w > 0.0) fb(m, k) = w * norm;
    }
  }
  return fb;
}

Eigen::MatrixXd mfcc(const AudioClip& clip, const FeatureConfig& cfg) {
  validate(cfg);
  StftConfig stft_cfg;
  stft_cfg.n_fft = cfg.frame_len;
  stft_cfg.hop = cfg.hop;
  const Spectrogram spec = stft(clip.samples, stft_cfg);

  // Power spectrogram, bins x frames.
  const Eigen::MatrixXd power = spec.frames.cwiseAbs2().transpose();
  const Eigen::MatrixXd mel = mel_filterbank(cfg, clip.sample_rate) * power;
  const Eigen::MatrixXd mel_db =
      10.0 * mel.cwiseMax(cfg.log_floor).array().log10().matrix();

  // Orthonormal DCT-II along the mel axis.
  const Eigen::Index n = cfg.n_mels;
  Eigen::MatrixXd dct(cfg.n_mfcc, n);
  for (Eigen::Index k = 0; k < cfg.n_mfcc; ++k) {
    const double alpha = k == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n);
    for (Eigen::Index j = 0; j < n; ++j) {
      dct(k, j) = alpha * std::cos(M_PI * k * (2.0 * j + 1.0) / (2.0 * n));
    }
  }
  return dct * mel_db;
}

Eigen::VectorXd assemble_features(const Eigen::ArrayXd& zcr, const Eigen::ArrayXd& rmse,
                                  const Eigen::MatrixXd& mfcc_mat) {
  const Eigen::Index n_frames = zcr.size();
  if (rmse.size() != n_frames || mfcc_mat.cols() != n_frames) {
    throw ShapeMismatch("assemble_features: frame counts disagree");
  }
  const Eigen::Index n_mfcc = mfcc_mat.rows();
  Eigen::VectorXd out((2 + n_mfcc) * n_frames);
  out.segment(0, n_frames) = zcr.matrix();
  out.segment(n_frames, n_frames) = rmse.matrix();
  for (Eigen::Index c = 0; c < n_mfcc; ++c) {
    out.segment((2 + c) * n_frames, n_frames) = mfcc_mat.row(c).transpose();
  }
  return out;
}

Eigen::VectorXd extract_features(const AudioClip& clip, const FeatureConfig& cfg) {
  return assemble_features(zcr_frames(clip, cfg), rmse_frames(clip, cfg), mfcc(clip, cfg));
}

}  // namespace emoaug
