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

#include <cstdint>
#include <filesystem>
#include <string>

#include "tvr/adam.hpp"
#include "tvr/model.hpp"

namespace tvr {

/// Everything a training run depends on. Serializes to `key = value` lines.
struct TrainConfig {
  int batch_size = 16;
  int epochs = 10;
  long max_steps = 0;  // 0: no cap
  AdamOptions adam;
  double w = kDefaultFusionWeight;
  ModelConfig model;
  int tokens = 32;
  std::uint64_t seed = 0;
  std::string data;
  std::string checkpoint;

  /// Applies one `key = value` setting; throws on unknown keys or bad values.
  void set(const std::string& key, const std::string& value);
  void validate() const;

  /// Canonical text, one setting per line in a fixed order.
  std::string to_text() const;
  /// FNV-1a 64 of the model- and optimizer-relevant settings.
  std::uint64_t hash() const;

  static TrainConfig parse(const std::string& text);
  static TrainConfig load(const std::filesystem::path& path);
};

/// Seed from the TVE_SEED environment variable, if set.
bool seed_from_env(std::uint64_t& seed);

}  // namespace tvr
