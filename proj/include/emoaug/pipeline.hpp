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

#include <functional>
#include <vector>

#include "emoaug/augment.hpp"
#include "emoaug/datastore.hpp"
#include "emoaug/features.hpp"

namespace emoaug {

struct FeaturePipeline {
  ClipWindow window;
  AugmentParams augment;
  FeatureConfig features;
};

// Content-addressed per-clip seed so manifests can be reordered without
// changing any clip's variants.
std::uint64_t clip_seed(std::uint64_t base_seed, std::string_view clip_id);

// Loads, canonicalizes and featurizes every manifest entry, optionally
// fanning the ten augmentation variants out in memory first. Record order is
// (entry order) x (variant index) regardless of thread count.
std::vector<FeatureRecord> extract_records(
    const std::vector<ManifestEntry>& entries, const FeaturePipeline& pipeline, bool augment,
    std::uint64_t base_seed, int threads,
    const std::function<void(const ManifestEntry&)>& progress = {});

// Featurizes already-canonical clips (library-level entry point used by the
// in-memory pipeline and the test suites).
std::vector<FeatureRecord> records_for_clip(const AudioClip& canonical,
                                            const ManifestEntry& entry,
                                            const FeaturePipeline& pipeline, bool augment,
                                            std::uint64_t base_seed);

}  // namespace emoaug
