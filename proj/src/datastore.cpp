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

#include "emoaug/datastore.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "emoaug/rng.hpp"

namespace emoaug {

namespace {

constexpr std::array<std::string_view, kNumClasses> kLabelNames = {
    "neutral", "happy", "sad", "angry", "fear", "disgust", "surprise"};

constexpr char kCacheMagic[4] = {'E', 'A', 'F', 'V'};
constexpr std::uint16_t kCacheVersion = 1;

void put_u16(std::ofstream& f, std::uint16_t v) {
  const unsigned char b[2] = {static_cast<unsigned char>(v & 0xFF),
                              static_cast<unsigned char>(v >> 8)};
  f.write(reinterpret_cast<const char*>(b), 2);
}

void put_u32(std::ofstream& f, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFF);
  f.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ofstream& f, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFF);
  f.write(reinterpret_cast<const char*>(b), 8);
}

class ByteReader {
 public:
  ByteReader(const std::filesystem::path& path, std::string name)
      : in_(path, std::ios::binary), name_(std::move(name)) {
    if (!in_) throw TruncatedFile(name_ + ": cannot open " + path.string());
  }

  void read(void* dst, size_t n) {
    in_.read(reinterpret_cast<char*>(dst), static_cast<std::streamsize>(n));
    if (static_cast<size_t>(in_.gcount()) != n) throw TruncatedFile(name_ + ": truncated file");
  }

  std::uint16_t u16() {
    unsigned char b[2];
    read(b, 2);
    return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
  }
  std::uint32_t u32() {
    unsigned char b[4];
    read(b, 4);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | b[i];
    return v;
  }
  std::uint64_t u64() {
    unsigned char b[8];
    read(b, 8);
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
    return v;
  }

 private:
  std::ifstream in_;
  std::string name_;
};

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  return fields;
}

}  // namespace

std::string_view label_name(EmotionLabel label) {
  return kLabelNames[static_cast<size_t>(label)];
}

std::optional<EmotionLabel> label_from_name(std::string_view name) {
  for (size_t i = 0; i < kLabelNames.size(); ++i) {
    if (kLabelNames[i] == name) return static_cast<EmotionLabel>(i);
  }
  return std::nullopt;
}

std::optional<EmotionLabel> parse_ravdess_filename(std::string_view name, CalmPolicy calm) {
  std::string_view stem = name;
  if (const auto dot = stem.rfind('.'); dot != std::string_view::npos) stem = stem.substr(0, dot);
  if (const auto slash = stem.rfind('/'); slash != std::string_view::npos) {
    stem = stem.substr(slash + 1);
  }

  std::vector<std::string_view> fields;
  size_t start = 0;
  while (true) {
    const size_t dash = stem.find('-', start);
    if (dash == std::string_view::npos) {
      fields.push_back(stem.substr(start));
      break;
    }
    fields.push_back(stem.substr(start, dash - start));
    start = dash + 1;
  }
  if (fields.size() != 7) {
    throw BadFilename("expected 7 dash-separated fields in '" + std::string(stem) + "'");
  }
  for (std::string_view f : fields) {
    if (f.size() != 2 || !std::isdigit(static_cast<unsigned char>(f[0])) ||
        !std::isdigit(static_cast<unsigned char>(f[1]))) {
      throw BadFilename("non-numeric field in '" + std::string(stem) + "'");
    }
  }

  const int code = (fields[2][0] - '0') * 10 + (fields[2][1] - '0');
  switch (code) {
    case 1:
      return EmotionLabel::kNeutral;
    case 2:  // calm
      if (calm == CalmPolicy::kDrop) return std::nullopt;
      return EmotionLabel::kNeutral;
    case 3:
      return EmotionLabel::kHappy;
    case 4:
      return EmotionLabel::kSad;
    case 5:
      return EmotionLabel::kAngry;
    case 6:
      return EmotionLabel::kFear;
    case 7:
      return EmotionLabel::kDisgust;
    case 8:
      return EmotionLabel::kSurprise;
    default:
      throw UnknownEmotionCode("emotion code " + std::string(fields[2]) + " in '" +
                               std::string(stem) + "'");
  }
}

std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DatastoreError("cannot open manifest " + path.string());

  std::string line;
  if (!std::getline(in, line)) throw BadHeader(path.string() + ": empty manifest");
  {
    const auto header = split_csv_line(line);
    if (header.size() != 3 || header[0] != "path" || header[1] != "label" ||
        header[2] != "clip_id") {
      throw BadHeader(path.string() + ": expected header 'path,label,clip_id'");
    }
  }

  const std::filesystem::path base = path.parent_path();
  std::vector<ManifestEntry> entries;
  std::unordered_set<std::string> seen;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != 3) {
      throw DatastoreError(path.string() + ": malformed row '" + line + "'");
    }
    const auto label = label_from_name(fields[1]);
    if (!label) throw UnknownLabel(path.string() + ": unknown label '" + fields[1] + "'");

    std::filesystem::path p(fields[0]);
    if (p.is_relative()) p = base / p;
    if (!seen.insert(p.string()).second) {
      throw DuplicatePath(path.string() + ": duplicate path '" + p.string() + "'");
    }
    entries.push_back({std::move(p), *label, fields[2]});
  }
  return entries;
}

void write_cache(const std::vector<FeatureRecord>& records, const std::filesystem::path& path) {
  for (const FeatureRecord& r : records) {
    if (r.values.size() != static_cast<Eigen::Index>(kFeatureDim)) {
      throw DimMismatch("write_cache: record '" + r.clip_id + "' has dim " +
                        std::to_string(r.values.size()));
    }
  }

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DatastoreError("cannot open cache " + path.string() + " for writing");
  f.write(kCacheMagic, 4);
  put_u16(f, kCacheVersion);
  put_u64(f, records.size());
  put_u32(f, kFeatureDim);
  for (const FeatureRecord& r : records) {
    put_u16(f, static_cast<std::uint16_t>(r.clip_id.size()));
    f.write(r.clip_id.data(), static_cast<std::streamsize>(r.clip_id.size()));
    f.put(static_cast<char>(r.variant));
    f.put(static_cast<char>(r.label));
    f.write(reinterpret_cast<const char*>(r.values.data()),
            static_cast<std::streamsize>(sizeof(float) * kFeatureDim));
  }
  f.flush();
  if (!f) throw DatastoreError("write failed: " + path.string());
}

std::vector<FeatureRecord> read_cache(const std::filesystem::path& path) {
  ByteReader r(path, "cache");
  char magic[4];
  r.read(magic, 4);
  if (std::memcmp(magic, kCacheMagic, 4) != 0) throw BadMagic(path.string() + ": bad magic");
  const std::uint16_t version = r.u16();
  if (version != kCacheVersion) {
    throw VersionMismatch(path.string() + ": cache version " + std::to_string(version));
  }
  const std::uint64_t count = r.u64();
  const std::uint32_t dim = r.u32();
  if (dim != kFeatureDim) {
    throw DimMismatch(path.string() + ": dim " + std::to_string(dim) + ", expected " +
                      std::to_string(kFeatureDim));
  }

  std::vector<FeatureRecord> records;
  records.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    FeatureRecord rec;
    const std::uint16_t id_len = r.u16();
    rec.clip_id.resize(id_len);
    r.read(rec.clip_id.data(), id_len);
    std::uint8_t variant, label;
    r.read(&variant, 1);
    r.read(&label, 1);
    if (label >= kNumClasses) throw DatastoreError(path.string() + ": label out of range");
    rec.variant = variant;
    rec.label = static_cast<EmotionLabel>(label);
    rec.values.resize(dim);
    r.read(rec.values.data(), sizeof(float) * dim);
    records.push_back(std::move(rec));
  }
  return records;
}

SplitSets stratified_split(const std::vector<std::pair<std::string, EmotionLabel>>& clip_labels,
                           const std::array<double, 3>& ratios, std::uint64_t seed) {
  if (std::abs(ratios[0] + ratios[1] + ratios[2] - 1.0) > 1e-9) {
    throw std::invalid_argument("stratified_split: ratios must sum to 1");
  }

  // Unique clips per class, kept in first-seen order before shuffling.
  std::map<EmotionLabel, std::vector<std::string>> by_class;
  std::unordered_set<std::string> seen;
  for (const auto& [clip_id, label] : clip_labels) {
    if (seen.insert(clip_id).second) by_class[label].push_back(clip_id);
  }

  SplitSets out;
  SplitMix64 rng(derive_seed(seed, 0x53504C4954ULL));  // "SPLIT"
  for (auto& [label, clips] : by_class) {
    for (size_t i = clips.size(); i > 1; --i) {  // Fisher-Yates
      const auto j = static_cast<size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1));
      std::swap(clips[i - 1], clips[j]);
    }

    const auto n = static_cast<long>(clips.size());
    std::array<long, 3> take{};
    std::array<double, 3> frac{};
    long assigned = 0;
    for (int k = 0; k < 3; ++k) {
      const double exact = n * ratios[k];
      take[k] = static_cast<long>(std::floor(exact));
      frac[k] = exact - static_cast<double>(take[k]);
      assigned += take[k];
    }
    // Largest remainder for the leftovers, ties resolved train > val > test.
    std::array<int, 3> order{0, 1, 2};
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return frac[a] > frac[b]; });
    for (long left = n - assigned, k = 0; left > 0; --left, ++k) ++take[order[static_cast<size_t>(k % 3)]];

    long idx = 0;
    for (int k = 0; k < 3; ++k) {
      auto& dst = k == 0 ? out.train : (k == 1 ? out.val : out.test);
      for (long i = 0; i < take[k]; ++i) dst.insert(clips[static_cast<size_t>(idx++)]);
    }
  }
  return out;
}

}  // namespace emoaug
