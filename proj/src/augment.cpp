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

#include "emoaug/augment.hpp"

#include <cmath>

#include "emoaug/dsp.hpp"

namespace emoaug {

namespace {

Eigen::ArrayXd crop_or_pad(const Eigen::ArrayXd& x, Eigen::Index n) {
  if (x.size() == n) return x;
  Eigen::ArrayXd out = Eigen::ArrayXd::Zero(n);
  out.head(std::min(n, x.size())) = x.head(std::min(n, x.size()));
  return out;
}

}  // namespace

VariantPlan default_variant_plan(std::uint64_t base_seed) {
  VariantPlan plan;
  plan.base_seed = base_seed;
  plan.recipes = {{
      {AugOp::Identity},
      {AugOp::Noise},
      {AugOp::PitchShift},
      {AugOp::StretchSlow},
      {AugOp::StretchFast},
      {AugOp::Shift},
      {AugOp::PitchShift, AugOp::Noise},
      {AugOp::StretchSlow, AugOp::Noise},
      {AugOp::StretchFast, AugOp::Noise},
      {AugOp::Shift, AugOp::Noise},
  }};
  return plan;
}

AudioClip add_noise(const AudioClip& clip, const NoiseParams& params, SplitMix64& rng) {
  const double peak = clip.samples.size() > 0 ? clip.samples.abs().maxCoeff() : 0.0;
  const double amp = params.scale * rng.uniform() * peak;

  Eigen::ArrayXd out = clip.samples;
  const Eigen::Index n = out.size();
  for (Eigen::Index i = 0; i < n; i += 2) {
    const GaussianPair g = gaussian_pair(rng);
    out[i] += amp * g.first;
    if (i + 1 < n) out[i + 1] += amp * g.second;
  }
  return {std::move(out), clip.sample_rate};
}

AudioClip temporal_shift(const AudioClip& clip, long k) {
  if (std::abs(k) > kShiftLimit) {
    throw ShiftOutOfRange("temporal_shift: |k| exceeds " + std::to_string(kShiftLimit));
  }
  const Eigen::Index n = clip.samples.size();
  Eigen::ArrayXd out(n);
  if (n == 0) return {std::move(out), clip.sample_rate};
  const Eigen::Index shift = ((static_cast<Eigen::Index>(k) % n) + n) % n;
  for (Eigen::Index i = 0; i < n; ++i) {
    out[i] = clip.samples[(i - shift + n) % n];
  }
  return {std::move(out), clip.sample_rate};
}

AudioClip time_stretch(const AudioClip& clip, double rate) {
  if (!(rate > 0.0)) throw std::invalid_argument("time_stretch: rate must be positive");
  const auto out_len =
      static_cast<Eigen::Index>(std::llround(static_cast<double>(clip.samples.size()) / rate));
  if (rate == 1.0) return clip;

  StftConfig cfg;
  const Spectrogram stretched = phase_vocoder(stft(clip.samples, cfg), rate);
  return {istft(stretched, out_len), clip.sample_rate};
}

AudioClip pitch_shift(const AudioClip& clip, double steps) {
  if (!std::isfinite(steps)) throw std::invalid_argument("pitch_shift: steps must be finite");
  if (steps == 0.0) return clip;

  const double factor = std::exp2(steps / 12.0);
  // Stretch to length*factor at constant pitch, then resample back down so
  // the duration returns to the original and frequencies scale by `factor`.
  const AudioClip stretched = time_stretch(clip, 1.0 / factor);
  Eigen::ArrayXd shifted = resample_by_ratio(stretched.samples, 1.0 / factor);
  return {crop_or_pad(shifted, clip.samples.size()), clip.sample_rate};
}

std::vector<AudioClip> generate_variants(const AudioClip& clip, std::uint64_t base_seed,
                                         const AugmentParams& params) {
  const VariantPlan plan = default_variant_plan(base_seed);
  std::vector<AudioClip> out;
  out.reserve(kNumVariants);

  for (int v = 0; v < kNumVariants; ++v) {
    SplitMix64 rng(derive_seed(base_seed, static_cast<std::uint64_t>(v)));
    AudioClip cur = clip;
    for (AugOp op : plan.recipes[static_cast<size_t>(v)]) {
      switch (op) {
        case AugOp::Identity:
          break;
        case AugOp::Noise:
          cur = add_noise(cur, params.noise, rng);
          break;
        case AugOp::PitchShift:
          cur = pitch_shift(cur, rng.uniform(params.pitch_min, params.pitch_max));
          break;
        case AugOp::StretchSlow:
          cur = time_stretch(cur, params.stretch_slow);
          break;
        case AugOp::StretchFast:
          cur = time_stretch(cur, params.stretch_fast);
          break;
        case AugOp::Shift:
          cur = temporal_shift(cur, rng.uniform_int(-params.shift_max, params.shift_max));
          break;
      }
    }
    cur.samples = crop_or_pad(cur.samples, clip.samples.size());
    out.push_back(std::move(cur));
  }
  return out;
}

}  // namespace emoaug
