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

#include "tvr/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <stdexcept>

#include "tvr/random.hpp"

namespace tvr {

void SyntheticConfig::validate() const {
  if (num_concepts < 1 || num_pairs < 1 || frames < 1 || tokens < 1 || dim < 1 || segments < 1) {
    throw std::invalid_argument("synthetic config: all sizes must be positive");
  }
  if (!(noise >= 0.0)) throw std::invalid_argument("synthetic config: noise must be non-negative");
  if (segments > frames) throw std::invalid_argument("synthetic config: more segments than frames");
  if (segments > num_concepts) throw std::invalid_argument("synthetic config: more segments than concepts");
  if (tokens < segments + 2) throw std::invalid_argument("synthetic config: token length cannot hold [CLS], words, [SEP]");
  if (order_discriminative && frames < 3) {
    throw std::invalid_argument("synthetic config: order-discriminative sets need at least 3 frames");
  }
  if (order_discriminative && num_pairs % 2 != 0) {
    throw std::invalid_argument("synthetic config: order-discriminative sets need an even pair count");
  }
  if (!(test_fraction >= 0.0 && test_fraction <= 1.0)) throw std::invalid_argument("synthetic config: test_fraction outside [0, 1]");
}

namespace {

std::string numbered(char prefix, int k) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%c%04d", prefix, k);
  return buf;
}

FloatRows noisy(const Eigen::MatrixXd& clean, double stddev, Rng& rng) {
  Eigen::MatrixXd out = clean;
  if (stddev > 0.0) out += rng.normal_matrix(clean.rows(), clean.cols(), stddev);
  return out.cast<float>();
}

}  // namespace

SyntheticData synthesize_dataset(const SyntheticConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  const Eigen::Index d = cfg.dim;
  const double coord_noise = cfg.noise / std::sqrt(static_cast<double>(d));

  Eigen::MatrixXd concepts(cfg.num_concepts, d);
  for (int c = 0; c < cfg.num_concepts; ++c) concepts.row(c) = rng.unit_vector(d);
  Eigen::MatrixXd positions(cfg.segments, d);
  for (int s = 0; s < cfg.segments; ++s) positions.row(s) = 0.5 * rng.unit_vector(d);
  const Eigen::RowVectorXd sep = rng.unit_vector(d);

  SyntheticData out;
  out.videos.kind = EmbeddingKind::VideoFrames;
  out.videos.seq_len = static_cast<std::uint32_t>(cfg.frames);
  out.videos.dim = static_cast<std::uint32_t>(d);
  out.texts.kind = EmbeddingKind::TextTokens;
  out.texts.seq_len = static_cast<std::uint32_t>(cfg.tokens);
  out.texts.dim = static_cast<std::uint32_t>(d);

  auto draw_sequence = [&] {
    std::vector<int> ids(static_cast<std::size_t>(cfg.num_concepts));
    std::iota(ids.begin(), ids.end(), 0);
    for (int k = 0; k < cfg.segments; ++k) {
      const auto j = k + static_cast<int>(rng.uniform() * (cfg.num_concepts - k));
      std::swap(ids[static_cast<std::size_t>(k)], ids[static_cast<std::size_t>(std::min(j, cfg.num_concepts - 1))]);
    }
    ids.resize(static_cast<std::size_t>(cfg.segments));
    return ids;
  };
  auto frames_for = [&](const std::vector<int>& seq) {
    Eigen::MatrixXd f(cfg.frames, d);
    for (int t = 0; t < cfg.frames; ++t) f.row(t) = concepts.row(seq[static_cast<std::size_t>(t * cfg.segments / cfg.frames)]);
    return f;
  };
  auto caption_for = [&](const std::vector<int>& seq) {
    Eigen::MatrixXd rows = Eigen::MatrixXd::Zero(cfg.tokens, d);
    Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(d);
    for (int k = 0; k < cfg.segments; ++k) {
      const Eigen::RowVectorXd w = concepts.row(seq[static_cast<std::size_t>(k)]);
      mean += w / cfg.segments;
      rows.row(1 + k) = w + positions.row(k);
    }
    Eigen::RowVectorXd cls =
        mean + cfg.order_weight * (concepts.row(seq.back()) - concepts.row(seq.front()));
    rows.row(0) = cls / cls.norm();
    rows.row(1 + cfg.segments) = sep;
    return rows;
  };
  const auto valid_text = static_cast<std::uint16_t>(cfg.segments + 2);
  const auto valid_video = static_cast<std::uint16_t>(cfg.frames);

  auto emit = [&](const std::string& video_id, const std::string& text_id, const FloatRows& frames,
                  const Eigen::MatrixXd& caption) {
    out.videos.records.push_back({video_id, valid_video, frames});
    FloatRows tokens = noisy(caption, coord_noise, rng);
    tokens.bottomRows(cfg.tokens - valid_text).setZero();
    out.texts.records.push_back({text_id, valid_text, std::move(tokens)});
  };

  const int sets = cfg.order_discriminative ? cfg.num_pairs / 2 : cfg.num_pairs;
  const int test_sets = static_cast<int>(std::ceil(cfg.test_fraction * sets - 1e-9));
  for (int s = 0; s < sets; ++s) {
    const Split split = s >= sets - test_sets ? Split::Test : Split::Train;
    const std::vector<int> seq = draw_sequence();
    FloatRows frames = noisy(frames_for(seq), coord_noise, rng);
    if (!cfg.order_discriminative) {
      const std::string v = numbered('v', s), t = numbered('t', s);
      emit(v, t, frames, caption_for(seq));
      out.manifest.push_back({t, v, split});
      continue;
    }
    const std::vector<int> reversed(seq.rbegin(), seq.rend());
    const FloatRows backwards = frames.colwise().reverse();
    const std::string base = numbered('s', s);
    emit(base + ".a", "t" + base.substr(1) + ".a", frames, caption_for(seq));
    emit(base + ".b", "t" + base.substr(1) + ".b", backwards, caption_for(reversed));
    out.manifest.push_back({"t" + base.substr(1) + ".a", base + ".a", split});
    out.manifest.push_back({"t" + base.substr(1) + ".b", base + ".b", split});
  }
  return out;
}

void write_dataset(const std::filesystem::path& dir, const SyntheticData& data) {
  std::filesystem::create_directories(dir);
  const DataPaths p = DataPaths::in(dir);
  write_embeddings(p.videos, data.videos);
  write_embeddings(p.texts, data.texts);
  write_manifest(p.manifest, data.manifest);
}

std::vector<std::vector<Eigen::Index>> sibling_groups(const std::vector<std::string>& video_ids) {
  std::map<std::string, std::size_t> slot;
  std::vector<std::vector<Eigen::Index>> groups;
  for (std::size_t i = 0; i < video_ids.size(); ++i) {
    const std::string& id = video_ids[i];
    const auto dot = id.rfind('.');
    const std::string key = dot == std::string::npos ? id + "\x1f" + std::to_string(i) : id.substr(0, dot);
    auto [it, inserted] = slot.emplace(key, groups.size());
    if (inserted) groups.emplace_back();
    groups[it->second].push_back(static_cast<Eigen::Index>(i));
  }
  return groups;
}

}  // namespace tvr
