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
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tvr/embedding_file.hpp"
#include "tvr/retrieval.hpp"

namespace tvr {

enum class Split { Train, Val, Test };
const char* to_string(Split s);
Split parse_split(const std::string& s);

/// One line of a manifest: text_id <TAB> video_id <TAB> split.
struct ManifestEntry {
  std::string text_id;
  std::string video_id;
  Split split = Split::Train;

  bool operator==(const ManifestEntry&) const = default;
};

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& entries);

struct VideoItem {
  std::string id;
  Eigen::MatrixXd frames;  // valid frames x d
};

struct TextItem {
  std::string id;
  Eigen::MatrixXd tokens;  // seq_len x d; row 0 is the [CLS] position
  Eigen::Index valid_len = 0;
};

struct PairRef {
  std::size_t text = 0;
  std::size_t video = 0;
  Split split = Split::Train;
};

/// Standard file names inside a data directory.
struct DataPaths {
  std::filesystem::path videos, texts, manifest;
  static DataPaths in(const std::filesystem::path& dir);
};

/// Texts, videos and their pairing, all in memory at binary64.
struct Dataset {
  std::vector<VideoItem> videos;
  std::vector<TextItem> texts;
  std::vector<PairRef> pairs;  // one per text

  Eigen::Index dim() const;

  static Dataset from_files(const EmbeddingFile& videos, const EmbeddingFile& texts,
                            const std::vector<ManifestEntry>& manifest);
  static Dataset load(const std::filesystem::path& dir);

  std::vector<std::size_t> pairs_in(Split split) const;
  bool has_split(Split split) const { return !pairs_in(split).empty(); }
};

/// Texts of a split with every video they reference, re-indexed for evaluation.
struct EvalSubset {
  std::vector<std::size_t> texts;   // dataset text indices
  std::vector<std::size_t> videos;  // dataset video indices
  EvalPairing pairing;
};
EvalSubset select_split(const Dataset& data, Split split);
/// Every paired text and video.
EvalSubset select_all(const Dataset& data);

}  // namespace tvr
