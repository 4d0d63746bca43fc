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
#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace emoaug {

// The seven emotion classes shared by the supported corpora. Codes are
// stable; confusion-matrix axes use this order.
enum class EmotionLabel : std::uint8_t {
  kNeutral = 0,
  kHappy = 1,
  kSad = 2,
  kAngry = 3,
  kFear = 4,
  kDisgust = 5,
  kSurprise = 6,
};

inline constexpr int kNumClasses = 7;
inline constexpr std::uint32_t kFeatureDim = 2376;

std::string_view label_name(EmotionLabel label);
std::optional<EmotionLabel> label_from_name(std::string_view name);

struct ManifestEntry {
  std::filesystem::path path;
  EmotionLabel label = EmotionLabel::kNeutral;
  std::string clip_id;
};

struct DatastoreError : std::runtime_error {
  explicit DatastoreError(const std::string& what) : std::runtime_error(what) {}
};
struct BadFilename : DatastoreError {
  using DatastoreError::DatastoreError;
};
struct UnknownEmotionCode : DatastoreError {
  using DatastoreError::DatastoreError;
};
struct BadHeader : DatastoreError {
  using DatastoreError::DatastoreError;
};
struct UnknownLabel : DatastoreError {
  using DatastoreError::DatastoreError;
};
struct DuplicatePath : DatastoreError {
  using DatastoreError::DatastoreError;
};
struct BadMagic : DatastoreError {
  using DatastoreError::DatastoreError;
};
struct VersionMismatch : DatastoreError {
  using DatastoreError::DatastoreError;
};
struct TruncatedFile : DatastoreError {
  using DatastoreError::DatastoreError;
};
struct DimMismatch : DatastoreError {
  using DatastoreError::DatastoreError;
};

enum class CalmPolicy { kMergeIntoNeutral, kDrop };

// Maps the third dash-separated field of a RAVDESS stem to a label.
// Returns nullopt for calm clips under CalmPolicy::kDrop.
std::optional<EmotionLabel> parse_ravdess_filename(std::string_view name,
                                                   CalmPolicy calm = CalmPolicy::kMergeIntoNeutral);

// CSV with header `path,label,clip_id`; relative paths resolve against the
// manifest's directory.
std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path);

struct FeatureRecord {
  std::string clip_id;
  std::uint8_t variant = 0;
  EmotionLabel label = EmotionLabel::kNeutral;
  Eigen::VectorXf values;
};

// Binary cache, bit-exact round trip. Layout: magic "EAFV", version u16,
// record count u64, dim u32, then per record: clip_id (u16 length + UTF-8),
// variant u8, label u8, dim little-endian f32 values.
void write_cache(const std::vector<FeatureRecord>& records, const std::filesystem::path& path);
std::vector<FeatureRecord> read_cache(const std::filesystem::path& path);

struct SplitSets {
  std::unordered_set<std::string> train;
  std::unordered_set<std::string> val;
  std::unordered_set<std::string> test;
};

// Splits unique clip_ids with per-class proportions preserved within one
// clip; all variants of a clip land in the same split by construction.
SplitSets stratified_split(const std::vector<std::pair<std::string, EmotionLabel>>& clip_labels,
                           const std::array<double, 3>& ratios, std::uint64_t seed);

}  // namespace emoaug
