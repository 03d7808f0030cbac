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

#include "tvr/embedding_file.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <unordered_set>

#include <zlib.h>

namespace tvr {
namespace {

constexpr std::uint8_t kMagic[4] = {'T', 'V', 'E', 'M'};

class Writer {
 public:
  void u16(std::uint16_t v) {
    bytes_.push_back(static_cast<std::uint8_t>(v));
    bytes_.push_back(static_cast<std::uint8_t>(v >> 8));
  }
  void u32(std::uint32_t v) {
    for (int s = 0; s < 32; s += 8) bytes_.push_back(static_cast<std::uint8_t>(v >> s));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void raw(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    bytes_.insert(bytes_.end(), b, b + n);
  }
  std::vector<std::uint8_t>& bytes() { return bytes_; }

 private:
  std::vector<std::uint8_t> bytes_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> b) : b_(b) {}
  bool has(std::size_t n) const { return b_.size() - pos_ >= n; }
  std::size_t remaining() const { return b_.size() - pos_; }
  std::uint16_t u16() {
    std::uint16_t v = static_cast<std::uint16_t>(b_[pos_] | (b_[pos_ + 1] << 8));
    pos_ += 2;
    return v;
  }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int k = 0; k < 4; ++k) v |= static_cast<std::uint32_t>(b_[pos_ + k]) << (8 * k);
    pos_ += 4;
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  std::string str(std::size_t n) {
    std::string s(reinterpret_cast<const char*>(b_.data() + pos_), n);
    pos_ += n;
    return s;
  }

 private:
  std::span<const std::uint8_t> b_;
  std::size_t pos_ = 0;
};

std::uint32_t crc32_of(std::span<const std::uint8_t> bytes) {
  return static_cast<std::uint32_t>(::crc32(0L, bytes.data(), static_cast<uInt>(bytes.size())));
}

bool valid_utf8(const std::string& s) {
  std::size_t i = 0;
  while (i < s.size()) {
    const auto c = static_cast<unsigned char>(s[i]);
    std::size_t extra = 0;
    std::uint32_t cp = 0;
    if (c < 0x80) {
      ++i;
      continue;
    } else if ((c & 0xE0) == 0xC0) {
      extra = 1;
      cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
      extra = 2;
      cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
      extra = 3;
      cp = c & 0x07;
    } else {
      return false;
    }
    if (i + extra >= s.size()) return false;
    for (std::size_t k = 1; k <= extra; ++k) {
      const auto cc = static_cast<unsigned char>(s[i + k]);
      if ((cc & 0xC0) != 0x80) return false;
      cp = (cp << 6) | (cc & 0x3F);
    }
    if ((extra == 1 && cp < 0x80) || (extra == 2 && cp < 0x800) || (extra == 3 && cp < 0x10000) || cp > 0x10FFFF ||
        (cp >= 0xD800 && cp <= 0xDFFF)) {
      return false;
    }
    i += extra + 1;
  }
  return true;
}

}  // namespace

Eigen::MatrixXd EmbeddingRecord::valid_rows() const {
  return values.topRows(valid_len).cast<double>();
}

std::vector<std::uint8_t> encode_embeddings(const EmbeddingFile& file) {
  if (file.version != kEmbeddingVersionPlain && file.version != kEmbeddingVersionChecked) {
    throw FormatError("unrecognized format: cannot write version " + std::to_string(file.version));
  }
  Writer w;
  w.raw(kMagic, 4);
  w.u32(file.version);
  w.u32(static_cast<std::uint32_t>(file.kind));
  w.u32(static_cast<std::uint32_t>(file.records.size()));
  w.u32(file.seq_len);
  w.u32(file.dim);
  for (std::size_t i = 0; i < file.records.size(); ++i) {
    const EmbeddingRecord& r = file.records[i];
    if (r.id.size() > 0xFFFF) throw ValidationError("record " + std::to_string(i) + ": id longer than 65535 bytes");
    if (r.values.rows() != file.seq_len || r.values.cols() != file.dim) {
      throw ValidationError("record " + std::to_string(i) + " (" + r.id + "): values are " +
                            std::to_string(r.values.rows()) + "x" + std::to_string(r.values.cols()) + ", header says " +
                            std::to_string(file.seq_len) + "x" + std::to_string(file.dim));
    }
    w.u16(static_cast<std::uint16_t>(r.id.size()));
    w.raw(r.id.data(), r.id.size());
    w.u16(r.valid_len);
    for (Eigen::Index k = 0; k < r.values.size(); ++k) w.f32(r.values.data()[k]);
  }
  if (file.version == kEmbeddingVersionChecked) w.u32(crc32_of(w.bytes()));
  return std::move(w.bytes());
}

EmbeddingFile parse_embeddings(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kEmbeddingHeaderBytes || !std::equal(kMagic, kMagic + 4, bytes.begin())) {
    throw FormatError("unrecognized format: missing TVEM header");
  }
  Reader r(bytes.subspan(4));
  EmbeddingFile file;
  file.version = r.u32();
  if (file.version != kEmbeddingVersionPlain && file.version != kEmbeddingVersionChecked) {
    throw FormatError("unrecognized format: version " + std::to_string(file.version));
  }
  std::span<const std::uint8_t> body = bytes;
  if (file.version == kEmbeddingVersionChecked) {
    if (bytes.size() < kEmbeddingHeaderBytes + 4) throw FormatError("corrupt file: missing checksum");
    body = bytes.first(bytes.size() - 4);
    Reader tail(bytes.last(4));
    if (tail.u32() != crc32_of(body)) throw FormatError("corrupt file: checksum mismatch");
    r = Reader(body.subspan(8));
  }
  const std::uint32_t kind = r.u32();
  if (kind > 1) throw FormatError("unrecognized format: kind " + std::to_string(kind));
  file.kind = static_cast<EmbeddingKind>(kind);
  const std::uint32_t count = r.u32();
  file.seq_len = r.u32();
  file.dim = r.u32();
  const std::uint64_t floats = static_cast<std::uint64_t>(file.seq_len) * file.dim;
  if (count > 0 && floats > r.remaining() / 4) {
    throw FormatError("corrupt file: record size " + std::to_string(file.seq_len) + "x" + std::to_string(file.dim) +
                      " exceeds file size");
  }
  const std::uint64_t payload = floats * 4;
  // Smallest possible record: empty id and the valid_len field.
  if (static_cast<std::uint64_t>(count) * (4 + payload) > r.remaining()) {
    throw FormatError("corrupt file: " + std::to_string(count) + " records do not fit in " +
                      std::to_string(r.remaining()) + " bytes");
  }
  file.records.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::string where = "corrupt file at record " + std::to_string(i);
    if (!r.has(2)) throw FormatError(where + ": truncated id length");
    const std::uint16_t id_len = r.u16();
    if (!r.has(std::size_t{id_len} + 2)) throw FormatError(where + ": truncated id");
    EmbeddingRecord rec;
    rec.id = r.str(id_len);
    rec.valid_len = r.u16();
    if (r.remaining() < payload) throw FormatError(where + ": truncated values");
    rec.values.resize(file.seq_len, file.dim);
    for (std::uint64_t k = 0; k < floats; ++k) rec.values.data()[k] = r.f32();
    file.records.push_back(std::move(rec));
  }
  if (r.remaining() != 0) {
    throw FormatError("corrupt file: " + std::to_string(r.remaining()) + " trailing bytes after record " +
                      std::to_string(count));
  }
  return file;
}

void validate(const EmbeddingFile& file) {
  if (!file.records.empty() && (file.seq_len == 0 || file.dim == 0)) {
    throw ValidationError("records present but seq_len or dim is zero");
  }
  std::unordered_set<std::string> ids;
  for (std::size_t i = 0; i < file.records.size(); ++i) {
    const EmbeddingRecord& r = file.records[i];
    const std::string where = "record " + std::to_string(i) + " ('" + r.id + "')";
    if (r.id.empty()) throw ValidationError("record " + std::to_string(i) + ": empty id");
    if (!valid_utf8(r.id)) throw ValidationError("record " + std::to_string(i) + ": id is not valid UTF-8");
    if (!ids.insert(r.id).second) throw ValidationError(where + ": duplicate id");
    if (r.valid_len > file.seq_len) {
      throw ValidationError(where + ": valid_len " + std::to_string(r.valid_len) + " exceeds seq_len " +
                            std::to_string(file.seq_len));
    }
    if (r.valid_len == 0) throw ValidationError(where + ": valid_len is zero");
    if (r.values.rows() != file.seq_len || r.values.cols() != file.dim) throw ValidationError(where + ": wrong shape");
    if (!r.values.allFinite()) throw ValidationError(where + ": non-finite value");
  }
}

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

void write_embeddings(const std::filesystem::path& path, const EmbeddingFile& file) {
  validate(file);
  write_bytes(path, encode_embeddings(file));
}

EmbeddingFile read_embeddings(const std::filesystem::path& path) {
  EmbeddingFile file = parse_embeddings(read_bytes(path));
  validate(file);
  return file;
}

}  // namespace tvr
