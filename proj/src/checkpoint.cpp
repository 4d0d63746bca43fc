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

#include "emoaug/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "emoaug/datastore.hpp"

namespace emoaug {

namespace {

constexpr char kMagic[4] = {'E', 'A', 'N', 'N'};
constexpr std::uint16_t kVersion = 1;

void put_u16(std::ofstream& f, std::uint16_t v) {
  const unsigned char b[2] = {static_cast<unsigned char>(v & 0xFF),
                              static_cast<unsigned char>(v >> 8)};
  f.write(reinterpret_cast<const char*>(b), 2);
}

void put_u64(std::ofstream& f, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFF);
  f.write(reinterpret_cast<const char*>(b), 8);
}

void read_exact(std::ifstream& f, void* dst, size_t n, const std::string& path) {
  f.read(reinterpret_cast<char*>(dst), static_cast<std::streamsize>(n));
  if (static_cast<size_t>(f.gcount()) != n) {
    throw CheckpointError(path + ": truncated checkpoint");
  }
}

std::uint16_t get_u16(std::ifstream& f, const std::string& path) {
  unsigned char b[2];
  read_exact(f, b, 2, path);
  return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}

std::uint64_t get_u64(std::ifstream& f, const std::string& path) {
  unsigned char b[8];
  read_exact(f, b, 8, path);
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const net::Sequential<float>& model,
                     net::Activation conv_activation, const Eigen::VectorXf& feature_mean,
                     const Eigen::VectorXf& feature_std) {
  if (feature_mean.size() != static_cast<Eigen::Index>(kFeatureDim) ||
      feature_std.size() != static_cast<Eigen::Index>(kFeatureDim)) {
    throw ShapeMismatch("save_checkpoint: standardization vectors must have dim " +
                        std::to_string(kFeatureDim));
  }

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw CheckpointError("cannot open " + path.string() + " for writing");
  f.write(kMagic, 4);
  put_u16(f, kVersion);
  f.put(conv_activation == net::Activation::kELU ? 1 : 0);
  f.write(reinterpret_cast<const char*>(feature_mean.data()), sizeof(float) * kFeatureDim);
  f.write(reinterpret_cast<const char*>(feature_std.data()), sizeof(float) * kFeatureDim);

  const auto state = model.state();
  for (Eigen::Index i = 0; i < model.num_layers(); ++i) {
    const auto& blob = state[static_cast<size_t>(i)];
    if (blob.size() == 0) continue;
    put_u16(f, static_cast<std::uint16_t>(i));
    put_u64(f, static_cast<std::uint64_t>(blob.size()));
    f.write(reinterpret_cast<const char*>(blob.data()),
            static_cast<std::streamsize>(sizeof(float) * blob.size()));
  }
  f.flush();
  if (!f) throw CheckpointError("write failed: " + path.string());
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw CheckpointError("cannot open " + path.string());
  const std::string name = path.string();

  char magic[4];
  read_exact(f, magic, 4, name);
  if (std::memcmp(magic, kMagic, 4) != 0) throw CheckpointError(name + ": bad magic");
  const std::uint16_t version = get_u16(f, name);
  if (version != kVersion) {
    throw CheckpointError(name + ": unsupported version " + std::to_string(version));
  }

  Checkpoint ckpt;
  char tag;
  read_exact(f, &tag, 1, name);
  if (tag != 0 && tag != 1) throw CheckpointError(name + ": unknown activation tag");
  ckpt.conv_activation = tag == 1 ? net::Activation::kELU : net::Activation::kReLU;

  ckpt.feature_mean.resize(kFeatureDim);
  ckpt.feature_std.resize(kFeatureDim);
  read_exact(f, ckpt.feature_mean.data(), sizeof(float) * kFeatureDim, name);
  read_exact(f, ckpt.feature_std.data(), sizeof(float) * kFeatureDim, name);

  while (true) {
    unsigned char b[2];
    f.read(reinterpret_cast<char*>(b), 2);
    if (f.gcount() == 0) break;  // clean end of file
    if (f.gcount() != 2) throw CheckpointError(name + ": truncated checkpoint");
    const auto index = static_cast<std::uint16_t>(b[0] | (b[1] << 8));
    const std::uint64_t count = get_u64(f, name);
    Eigen::VectorXf blob(static_cast<Eigen::Index>(count));
    read_exact(f, blob.data(), sizeof(float) * count, name);
    ckpt.blobs.emplace_back(index, std::move(blob));
  }
  return ckpt;
}

void apply_checkpoint(net::Sequential<float>& model, const Checkpoint& ckpt) {
  std::vector<bool> filled(static_cast<size_t>(model.num_layers()), false);
  for (const auto& [index, blob] : ckpt.blobs) {
    if (index >= model.num_layers()) {
      throw ShapeMismatch("checkpoint names layer " + std::to_string(index) +
                          " beyond the model's " + std::to_string(model.num_layers()));
    }
    model.layer(index).set_state(blob);  // throws ShapeMismatch on size mismatch
    filled[index] = true;
  }
  for (Eigen::Index i = 0; i < model.num_layers(); ++i) {
    if (model.layer(i).param_count() > 0 && !filled[static_cast<size_t>(i)]) {
      throw ShapeMismatch("checkpoint missing parameters for layer " + std::to_string(i));
    }
  }
}

}  // namespace emoaug
