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

#include <algorithm>
#include <bit>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace tvr {

// On-disk layout, little-endian, no padding:
//   "TVEM" | version u32 | kind u32 | count u32 | seq_len u32 | dim u32
//   count x { id_len u16 | id bytes (UTF-8) | valid_len u16 | seq_len*dim f32 }
//   version 2 only: CRC-32 (zlib polynomial) of every preceding byte, u32
inline constexpr std::uint32_t kEmbeddingVersionPlain = 1;
inline constexpr std::uint32_t kEmbeddingVersionChecked = 2;
inline constexpr std::size_t kEmbeddingHeaderBytes = 24;

enum class EmbeddingKind : std::uint32_t { VideoFrames = 0, TextTokens = 1 };

using FloatRows = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct EmbeddingRecord {
  std::string id;
  std::uint16_t valid_len = 0;
  FloatRows values;  // seq_len x dim

  /// Rows [0, valid_len) widened to binary64.
  Eigen::MatrixXd valid_rows() const;
  bool operator==(const EmbeddingRecord& o) const {
    return id == o.id && valid_len == o.valid_len && values.rows() == o.values.rows() &&
           values.cols() == o.values.cols() &&
           std::equal(values.data(), values.data() + values.size(), o.values.data(),
                      [](float a, float b) { return std::bit_cast<std::uint32_t>(a) == std::bit_cast<std::uint32_t>(b); });
  }
};

struct EmbeddingFile {
  std::uint32_t version = kEmbeddingVersionChecked;
  EmbeddingKind kind = EmbeddingKind::VideoFrames;
  std::uint32_t seq_len = 0;
  std::uint32_t dim = 0;
  std::vector<EmbeddingRecord> records;

  bool operator==(const EmbeddingFile&) const = default;
};

/// Malformed bytes: bad magic or version, truncation, trailing data, checksum.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Well-formed bytes whose content breaks an invariant.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

std::vector<std::uint8_t> encode_embeddings(const EmbeddingFile& file);
/// Structural parse only; call validate() for content invariants.
EmbeddingFile parse_embeddings(std::span<const std::uint8_t> bytes);
void validate(const EmbeddingFile& file);

void write_embeddings(const std::filesystem::path& path, const EmbeddingFile& file);
/// parse + validate.
EmbeddingFile read_embeddings(const std::filesystem::path& path);

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path);
void write_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace tvr
