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

#include <array>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "emoaug/audio.hpp"
#include "emoaug/rng.hpp"

namespace emoaug {

inline constexpr int kShiftLimit = 5000;
inline constexpr int kNumVariants = 10;

struct NoiseParams {
  double scale = 0.035;
};

// Tunable ranges for the randomized ops. Defaults are the pipeline contract;
// keep pitch within [-1, 1] semitones and |shift| <= kShiftLimit.
struct AugmentParams {
  NoiseParams noise;
  double pitch_min = -1.0;
  double pitch_max = 1.0;
  double stretch_slow = 0.9;
  double stretch_fast = 1.1;
  int shift_max = kShiftLimit;
};

enum class AugOp : std::uint8_t {
  Identity,
  Noise,
  PitchShift,
  StretchSlow,
  StretchFast,
  Shift,
};

// The fixed ten-variant recipe list. Recipe 0 is the untouched original;
// composites apply the base op first and then add noise.
struct VariantPlan {
  std::array<std::vector<AugOp>, kNumVariants> recipes;
  std::uint64_t base_seed = 0;
};

VariantPlan default_variant_plan(std::uint64_t base_seed);

struct ShiftOutOfRange : std::out_of_range {
  explicit ShiftOutOfRange(const std::string& what) : std::out_of_range(what) {}
};

// out[i] = x[i] + amp * g_i with amp = scale * U(0,1) * max|x| and g_i
// standard Gaussian. A silent clip stays silent.
AudioClip add_noise(const AudioClip& clip, const NoiseParams& params, SplitMix64& rng);

// Circular roll: out[i] = x[(i - k) mod N]. |k| must not exceed kShiftLimit.
AudioClip temporal_shift(const AudioClip& clip, long k);

// Phase-vocoder time stretch; output length round(len / rate), pitch kept.
AudioClip time_stretch(const AudioClip& clip, double rate);

// Shifts all frequencies by 2^(steps/12) while keeping the clip length
// (stretch then resample). steps == 0 is a bitwise no-op.
AudioClip pitch_shift(const AudioClip& clip, double steps);

// Runs the ten-recipe plan on one canonical clip. Each variant draws from its
// own generator seeded by derive_seed(base_seed, variant_index), and every
// output is cropped/padded back to the input length.
std::vector<AudioClip> generate_variants(const AudioClip& clip, std::uint64_t base_seed,
                                         const AugmentParams& params = {});

}  // namespace emoaug
