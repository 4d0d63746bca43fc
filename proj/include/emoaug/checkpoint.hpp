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
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <vector>

#include "emoaug/net.hpp"

namespace emoaug {

struct CheckpointError : std::runtime_error {
  explicit CheckpointError(const std::string& what) : std::runtime_error(what) {}
};

// On-disk model snapshot. Layout: magic "EANN", version u16, conv-activation
// tag u8 (0 = relu, 1 = elu), feature standardization mean then std (2376 f32
// each), then one blob per parameterized layer: layer index u16, element
// count u64, little-endian f32 values in the layer's state order.
struct Checkpoint {
  net::Activation conv_activation = net::Activation::kReLU;
  Eigen::VectorXf feature_mean;
  Eigen::VectorXf feature_std;
  std::vector<std::pair<std::uint16_t, Eigen::VectorXf>> blobs;
};

void save_checkpoint(const std::filesystem::path& path, const net::Sequential<float>& model,
                     net::Activation conv_activation, const Eigen::VectorXf& feature_mean,
                     const Eigen::VectorXf& feature_std);

Checkpoint read_checkpoint(const std::filesystem::path& path);

// Loads blob contents into an already-built model; throws ShapeMismatch when
// any layer's element count disagrees.
void apply_checkpoint(net::Sequential<float>& model, const Checkpoint& ckpt);

}  // namespace emoaug
