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

#include "tvr/dataset.hpp"

#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace tvr {

const char* to_string(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
  }
  return "?";
}

Split parse_split(const std::string& s) {
  if (s == "train") return Split::Train;
  if (s == "val") return Split::Val;
  if (s == "test") return Split::Test;
  throw std::invalid_argument("unknown split '" + s + "' (expected train, val or test)");
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open manifest " + path.string());
  std::vector<ManifestEntry> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, '\t')) fields.push_back(f);
    if (fields.size() != 3 || fields[0].empty() || fields[1].empty()) {
      throw std::invalid_argument(path.string() + ":" + std::to_string(line_no) +
                                  ": expected text_id<TAB>video_id<TAB>split");
    }
    out.push_back({fields[0], fields[1], parse_split(fields[2])});
  }
  return out;
}

void write_manifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& entries) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write manifest " + path.string());
  for (const ManifestEntry& e : entries) out << e.text_id << '\t' << e.video_id << '\t' << to_string(e.split) << '\n';
}

DataPaths DataPaths::in(const std::filesystem::path& dir) {
  return {dir / "videos.tvem", dir / "texts.tvem", dir / "manifest.tsv"};
}

Eigen::Index Dataset::dim() const {
  if (!videos.empty()) return videos.front().frames.cols();
  if (!texts.empty()) return texts.front().tokens.cols();
  return 0;
}

Dataset Dataset::from_files(const EmbeddingFile& videos, const EmbeddingFile& texts,
                            const std::vector<ManifestEntry>& manifest) {
  if (videos.kind != EmbeddingKind::VideoFrames) throw std::invalid_argument("video file has kind text-tokens");
  if (texts.kind != EmbeddingKind::TextTokens) throw std::invalid_argument("text file has kind video-frames");
  if (!videos.records.empty() && !texts.records.empty() && videos.dim != texts.dim) {
    throw std::invalid_argument("embedding dims differ: videos " + std::to_string(videos.dim) + ", texts " +
                                std::to_string(texts.dim));
  }
  Dataset d;
  std::unordered_map<std::string, std::size_t> video_index, text_index;
  for (const EmbeddingRecord& r : videos.records) {
    video_index.emplace(r.id, d.videos.size());
    d.videos.push_back({r.id, r.valid_rows()});
  }
  for (const EmbeddingRecord& r : texts.records) {
    text_index.emplace(r.id, d.texts.size());
    d.texts.push_back({r.id, r.values.cast<double>(), r.valid_len});
  }
  std::vector<bool> paired(d.texts.size(), false);
  for (const ManifestEntry& e : manifest) {
    auto t = text_index.find(e.text_id);
    auto v = video_index.find(e.video_id);
    if (t == text_index.end()) throw std::invalid_argument("manifest references unknown text '" + e.text_id + "'");
    if (v == video_index.end()) throw std::invalid_argument("manifest references unknown video '" + e.video_id + "'");
    if (paired[t->second]) throw std::invalid_argument("text '" + e.text_id + "' listed twice in manifest");
    paired[t->second] = true;
    d.pairs.push_back({t->second, v->second, e.split});
  }
  return d;
}

Dataset Dataset::load(const std::filesystem::path& dir) {
  const DataPaths p = DataPaths::in(dir);
  return from_files(read_embeddings(p.videos), read_embeddings(p.texts), read_manifest(p.manifest));
}

std::vector<std::size_t> Dataset::pairs_in(Split split) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (pairs[i].split == split) out.push_back(i);
  }
  return out;
}

namespace {

EvalSubset subset_of(const Dataset& data, const std::vector<std::size_t>& pair_ids) {
  EvalSubset s;
  std::map<std::size_t, Eigen::Index> video_slot;
  for (std::size_t p : pair_ids) {
    const PairRef& ref = data.pairs[p];
    auto [it, inserted] = video_slot.emplace(ref.video, static_cast<Eigen::Index>(s.videos.size()));
    if (inserted) s.videos.push_back(ref.video);
    s.texts.push_back(ref.text);
    s.pairing.text_to_video.push_back(it->second);
  }
  s.pairing.num_videos = static_cast<Eigen::Index>(s.videos.size());
  return s;
}

}  // namespace

EvalSubset select_split(const Dataset& data, Split split) { return subset_of(data, data.pairs_in(split)); }

EvalSubset select_all(const Dataset& data) {
  std::vector<std::size_t> all(data.pairs.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return subset_of(data, all);
}

}  // namespace tvr
