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
#include <vector>

#include "tvr/dataset.hpp"
#include "tvr/embedding_file.hpp"

namespace tvr {

/// Paired embeddings built from a vocabulary of concept vectors.
///
/// Each pair draws `segments` distinct concepts in some order. Frame t shows
/// the concept of segment floor(t * segments / frames) plus noise. Caption
/// row 0 ([CLS]) is normalize(mean(w) + order_weight * (w_last - w_first)),
/// rows 1..segments are the concept words in order, each shifted by a
/// sentence-position code, then a fixed [SEP] row. Noise is N(0, noise^2 / dim)
/// per coordinate.
///
/// With `order_discriminative`, pairs come in sibling sets of two: the second
/// video is the first one's frames in reverse order (the same rows) and its
/// caption lists the same concepts reversed.
struct SyntheticConfig {
  int num_concepts = 32;
  int num_pairs = 64;
  int frames = 12;
  int tokens = 32;
  int dim = 512;
  double noise = 0.1;
  bool order_discriminative = false;
  std::uint64_t seed = 0;
  int segments = 4;
  double order_weight = 0.5;
  /// Fraction of pairs (whole sibling sets) assigned to the test split.
  double test_fraction = 0.0;

  void validate() const;
};

struct SyntheticData {
  EmbeddingFile videos;
  EmbeddingFile texts;
  std::vector<ManifestEntry> manifest;
};

SyntheticData synthesize_dataset(const SyntheticConfig& cfg);
void write_dataset(const std::filesystem::path& dir, const SyntheticData& data);

/// Groups video indices by id prefix before the last '.', the sibling naming
/// used by the generator ("s0003.a", "s0003.b"). Ids without '.' are singletons.
std::vector<std::vector<Eigen::Index>> sibling_groups(const std::vector<std::string>& video_ids);

}  // namespace tvr
