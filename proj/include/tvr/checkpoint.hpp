// Copyright 2026 The tvret Authors. All Rights Reserved.
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

#include <filesystem>

#include "tvr/adam.hpp"
#include "tvr/config.hpp"
#include "tvr/model.hpp"

namespace tvr {

// Layout, little-endian:
//   "TVCK" | version u32 | config_hash u64 | config_len u32 | config text
//   | step u64 | tensor_count u32
//   | tensor_count x { name_len u16 | name | rows u32 | cols u32
//                      | value f64[rows*cols] | adam m f64[..] | adam v f64[..] }
//   | CRC-32 of all preceding bytes u32
// Values are column-major, matching Eigen's default storage.
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  TrainConfig config;
  Model model;
  Adam optimizer;
};

void save_checkpoint(const std::filesystem::path& path, const TrainConfig& config, Model& model, Adam& optimizer);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace tvr
