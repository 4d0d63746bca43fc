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
#include <filesystem>
#include <stdexcept>
#include <string>

namespace emoaug {

// Mono waveform with amplitudes in [-1, 1]. The unit every augmentation and
// feature operation works on.
struct AudioClip {
  Eigen::ArrayXd samples;
  int sample_rate = 0;

  double duration_s() const {
    return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate : 0.0;
  }
};

// Canonical crop applied after load: drop `offset_s`, keep exactly
// round(duration_s * target_rate) samples (zero-padding short clips).
struct ClipWindow {
  double duration_s = 2.5;
  double offset_s = 0.6;
  int target_rate = 22050;

  Eigen::Index length() const {
    return static_cast<Eigen::Index>(std::llround(duration_s * target_rate));
  }
};

struct AudioError : std::runtime_error {
  explicit AudioError(const std::string& what) : std::runtime_error(what) {}
};
struct MalformedWav : AudioError {
  using AudioError::AudioError;
};
struct UnsupportedEncoding : AudioError {
  using AudioError::AudioError;
};
struct EmptyAudio : AudioError {
  using AudioError::AudioError;
};
struct IoError : AudioError {
  using AudioError::AudioError;
};

// Reads a RIFF/WAVE file. Accepts PCM 16-bit and IEEE float 32-bit, one or
// two channels; stereo is downmixed by channel mean, 16-bit samples are
// scaled by 1/32768.
AudioClip load_wav(const std::filesystem::path& path);

// Writes mono PCM 16-bit; values are clipped to [-1, 1] before quantization.
void save_wav(const AudioClip& clip, const std::filesystem::path& path);

// Band-limited resampling (windowed sinc, 32 taps per side, Kaiser window).
// Identity (bitwise) when the rates already match.
AudioClip resample(const AudioClip& clip, int target_rate);

// Core kernel behind resample/pitch shift: output length round(len * ratio),
// ratio = out_rate / in_rate.
Eigen::ArrayXd resample_by_ratio(const Eigen::ArrayXd& x, double ratio);

// Drops the first offset_s seconds, then crops or zero-pads at the tail to
// exactly window.length() samples. The clip must already be at
// window.target_rate.
AudioClip fix_window(const AudioClip& clip, const ClipWindow& window);

// resample + fix_window; the full canonicalization every input goes through.
AudioClip canonicalize(const AudioClip& clip, const ClipWindow& window);

}  // namespace emoaug
