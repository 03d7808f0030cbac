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

#include "tvr/checkpoint.hpp"

#include <bit>
#include <map>
#include <stdexcept>

#include <zlib.h>

#include "tvr/embedding_file.hpp"

namespace tvr {
namespace {

class Out {
 public:
  void u16(std::uint16_t v) { put(v, 2); }
  void u32(std::uint32_t v) { put(v, 4); }
  void u64(std::uint64_t v) { put(v, 8); }
  void f64(double v) { put(std::bit_cast<std::uint64_t>(v), 8); }
  void str(const std::string& s) { bytes.insert(bytes.end(), s.begin(), s.end()); }
  void matrix(const Matrix& m) {
    for (Eigen::Index k = 0; k < m.size(); ++k) f64(m.data()[k]);
  }
  std::vector<std::uint8_t> bytes;

 private:
  void put(std::uint64_t v, int n) {
    for (int k = 0; k < n; ++k) bytes.push_back(static_cast<std::uint8_t>(v >> (8 * k)));
  }
};

class In {
 public:
  explicit In(std::span<const std::uint8_t> b) : b_(b) {}
  std::uint16_t u16() { return static_cast<std::uint16_t>(get(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
  std::uint64_t u64() { return get(8); }
  double f64() { return std::bit_cast<double>(get(8)); }
  std::string str(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(b_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  Matrix matrix(Eigen::Index rows, Eigen::Index cols) {
    need(static_cast<std::size_t>(rows * cols) * 8);
    Matrix m(rows, cols);
    for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = f64();
    return m;
  }
  std::size_t remaining() const { return b_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (b_.size() - pos_ < n) throw FormatError("corrupt checkpoint: truncated");
  }
  std::uint64_t get(int n) {
    need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int k = 0; k < n; ++k) v |= static_cast<std::uint64_t>(b_[pos_ + k]) << (8 * k);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }
  std::span<const std::uint8_t> b_;
  std::size_t pos_ = 0;
};

std::uint32_t crc(std::span<const std::uint8_t> b) {
  return static_cast<std::uint32_t>(::crc32(0L, b.data(), static_cast<uInt>(b.size())));
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const TrainConfig& config, Model& model, Adam& optimizer) {
  const auto params = model.parameters();
  if (optimizer.first_moments().size() != params.size()) {
    throw std::invalid_argument("save_checkpoint: optimizer state does not match model parameters");
  }
  Out o;
  o.str("TVCK");
  o.u32(kCheckpointVersion);
  o.u64(config.hash());
  const std::string text = config.to_text();
  o.u32(static_cast<std::uint32_t>(text.size()));
  o.str(text);
  o.u64(static_cast<std::uint64_t>(optimizer.steps()));
  o.u32(static_cast<std::uint32_t>(params.size()));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const ad::Parameter& p = *params[i];
    o.u16(static_cast<std::uint16_t>(p.name.size()));
    o.str(p.name);
    o.u32(static_cast<std::uint32_t>(p.value.rows()));
    o.u32(static_cast<std::uint32_t>(p.value.cols()));
    o.matrix(p.value);
    o.matrix(optimizer.first_moments()[i]);
    o.matrix(optimizer.second_moments()[i]);
  }
  o.u32(crc(o.bytes));
  write_bytes(path, o.bytes);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  const std::vector<std::uint8_t> bytes = read_bytes(path);
  if (bytes.size() < 8 || std::string(bytes.begin(), bytes.begin() + 4) != "TVCK") {
    throw FormatError("unrecognized format: " + path.string() + " is not a checkpoint");
  }
  std::span<const std::uint8_t> all(bytes);
  In tail(all.last(4));
  if (tail.u32() != crc(all.first(all.size() - 4))) throw FormatError("corrupt checkpoint: checksum mismatch");
  In in(all.first(all.size() - 4).subspan(4));
  if (const auto v = in.u32(); v != kCheckpointVersion) {
    throw FormatError("unrecognized format: checkpoint version " + std::to_string(v));
  }
  const std::uint64_t hash = in.u64();
  const std::uint32_t text_len = in.u32();
  Checkpoint ck{TrainConfig::parse(in.str(text_len)), Model{}, Adam{}};
  if (ck.config.hash() != hash) throw FormatError("corrupt checkpoint: config hash mismatch");
  ck.model = Model::init(ck.config.model, ck.config.seed);
  const auto params = ck.model.parameters();
  ck.optimizer = Adam(params, ck.config.adam);
  ck.optimizer.set_steps(static_cast<long>(in.u64()));

  std::map<std::string, std::size_t> slot;
  for (std::size_t i = 0; i < params.size(); ++i) slot.emplace(params[i]->name, i);
  const std::uint32_t count = in.u32();
  if (count != params.size()) {
    throw FormatError("checkpoint holds " + std::to_string(count) + " tensors, model expects " +
                      std::to_string(params.size()));
  }
  std::vector<bool> seen(params.size(), false);
  for (std::uint32_t k = 0; k < count; ++k) {
    const std::string name = in.str(in.u16());
    const auto rows = static_cast<Eigen::Index>(in.u32());
    const auto cols = static_cast<Eigen::Index>(in.u32());
    auto it = slot.find(name);
    if (it == slot.end()) throw FormatError("checkpoint tensor '" + name + "' is not a model parameter");
    ad::Parameter& p = *params[it->second];
    if (rows != p.value.rows() || cols != p.value.cols()) {
      throw FormatError("checkpoint tensor '" + name + "' is " + shape_string(rows, cols) + ", model expects " +
                        shape_string(p.value.rows(), p.value.cols()));
    }
    p.value = in.matrix(rows, cols);
    ck.optimizer.first_moments()[it->second] = in.matrix(rows, cols);
    ck.optimizer.second_moments()[it->second] = in.matrix(rows, cols);
    seen[it->second] = true;
  }
  if (in.remaining() != 0) throw FormatError("corrupt checkpoint: trailing bytes");
  for (std::size_t i = 0; i < seen.size(); ++i) {
    if (!seen[i]) throw FormatError("checkpoint is missing tensor '" + params[i]->name + "'");
  }
  return ck;
}

}  // namespace tvr
