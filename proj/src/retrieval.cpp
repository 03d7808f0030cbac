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

#include "tvr/retrieval.hpp"

#include <algorithm>
#include <iomanip>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

namespace tvr {

const char* to_string(Direction d) { return d == Direction::TextToVideo ? "t2v" : "v2t"; }

void EvalPairing::validate(Eigen::Index num_texts) const {
  if (static_cast<Eigen::Index>(text_to_video.size()) != num_texts) {
    throw std::invalid_argument("pairing: " + std::to_string(text_to_video.size()) + " truth entries for " +
                                std::to_string(num_texts) + " texts");
  }
  for (std::size_t i = 0; i < text_to_video.size(); ++i) {
    if (text_to_video[i] < 0 || text_to_video[i] >= num_videos) {
      throw std::invalid_argument("pairing: text " + std::to_string(i) + " has no ground-truth video");
    }
  }
}

std::vector<std::vector<Eigen::Index>> EvalPairing::caption_groups() const {
  validate(static_cast<Eigen::Index>(text_to_video.size()));
  std::vector<std::vector<Eigen::Index>> groups(static_cast<std::size_t>(num_videos));
  for (std::size_t i = 0; i < text_to_video.size(); ++i) {
    groups[static_cast<std::size_t>(text_to_video[i])].push_back(static_cast<Eigen::Index>(i));
  }
  for (std::size_t v = 0; v < groups.size(); ++v) {
    if (groups[v].empty()) throw std::invalid_argument("pairing: video " + std::to_string(v) + " has no captions");
  }
  return groups;
}

EvalPairing EvalPairing::identity(Eigen::Index n) {
  EvalPairing p;
  p.num_videos = n;
  p.text_to_video.resize(static_cast<std::size_t>(n));
  std::iota(p.text_to_video.begin(), p.text_to_video.end(), Eigen::Index{0});
  return p;
}

RetrievalReport summarize_ranks(std::vector<long> ranks, Direction direction) {
  if (ranks.empty()) throw std::invalid_argument("summarize_ranks: no queries");
  RetrievalReport r;
  r.direction = direction;
  const auto n = static_cast<double>(ranks.size());
  auto recall = [&](long k) {
    return 100.0 * static_cast<double>(std::count_if(ranks.begin(), ranks.end(), [k](long x) { return x <= k; })) / n;
  };
  r.r1 = recall(1);
  r.r5 = recall(5);
  r.r10 = recall(10);
  r.mean_rank = std::accumulate(ranks.begin(), ranks.end(), 0.0) / n;
  std::vector<long> sorted = ranks;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t mid = sorted.size() / 2;
  r.median_rank = sorted.size() % 2 == 1 ? static_cast<double>(sorted[mid])
                                         : 0.5 * static_cast<double>(sorted[mid - 1] + sorted[mid]);
  r.ranks = std::move(ranks);
  return r;
}

RetrievalReport evaluate_t2v(const Eigen::MatrixXd& s, const EvalPairing& pairing, TieRule rule) {
  pairing.validate(s.rows());
  if (s.cols() != pairing.num_videos) {
    throw ShapeError("evaluate_t2v", std::to_string(s.cols()) + " video columns for " +
                                         std::to_string(pairing.num_videos) + " videos");
  }
  std::vector<long> ranks;
  ranks.reserve(static_cast<std::size_t>(s.rows()));
  for (Eigen::Index i = 0; i < s.rows(); ++i) {
    ranks.push_back(rank_of_true(s.row(i), pairing.text_to_video[static_cast<std::size_t>(i)], rule));
  }
  return summarize_ranks(std::move(ranks), Direction::TextToVideo);
}

RetrievalReport evaluate_v2t(const Eigen::MatrixXd& s, const EvalPairing& pairing, TieRule rule) {
  pairing.validate(s.rows());
  if (s.cols() != pairing.num_videos) {
    throw ShapeError("evaluate_v2t", std::to_string(s.cols()) + " video columns for " +
                                         std::to_string(pairing.num_videos) + " videos");
  }
  const auto groups = pairing.caption_groups();
  std::vector<long> ranks;
  ranks.reserve(groups.size());
  Eigen::VectorXd group_best(static_cast<Eigen::Index>(groups.size()));
  for (Eigen::Index v = 0; v < s.cols(); ++v) {
    for (std::size_t g = 0; g < groups.size(); ++g) {
      double best = -std::numeric_limits<double>::infinity();
      for (Eigen::Index t : groups[g]) {
        if (std::isnan(s(t, v))) throw std::domain_error("evaluate_v2t: NaN similarity");
        best = std::max(best, s(t, v));
      }
      group_best(static_cast<Eigen::Index>(g)) = best;
    }
    ranks.push_back(rank_of_true(group_best, v, rule));
  }
  return summarize_ranks(std::move(ranks), Direction::VideoToText);
}

double group_recall_at_1(const Eigen::MatrixXd& s, const EvalPairing& pairing,
                         const std::vector<std::vector<Eigen::Index>>& video_groups) {
  pairing.validate(s.rows());
  std::vector<Eigen::Index> group_of(static_cast<std::size_t>(pairing.num_videos), -1);
  for (std::size_t g = 0; g < video_groups.size(); ++g) {
    for (Eigen::Index v : video_groups[g]) group_of.at(static_cast<std::size_t>(v)) = static_cast<Eigen::Index>(g);
  }
  double credit = 0.0;
  for (Eigen::Index t = 0; t < s.rows(); ++t) {
    const Eigen::Index truth = pairing.text_to_video[static_cast<std::size_t>(t)];
    const Eigen::Index g = group_of[static_cast<std::size_t>(truth)];
    if (g < 0) throw std::invalid_argument("group_recall_at_1: video " + std::to_string(truth) + " is in no group");
    const double target = s(t, truth);
    long tied = 0;
    bool beaten = false;
    for (Eigen::Index v : video_groups[static_cast<std::size_t>(g)]) {
      if (v == truth) continue;
      if (s(t, v) > target) beaten = true;
      if (s(t, v) == target) ++tied;
    }
    if (!beaten) credit += 1.0 / static_cast<double>(1 + tied);
  }
  return 100.0 * credit / static_cast<double>(s.rows());
}

Eigen::MatrixXd build_similarity_matrix(const Encodings& texts, const Encodings& videos, double w) {
  check_fusion_weight(w);
  if (texts.global.cols() != videos.global.cols() || texts.aligned.cols() != videos.aligned.cols()) {
    throw ShapeError("build_similarity_matrix", texts.global, videos.global);
  }
  const bool use_aligned = w != 1.0;
  if (use_aligned && (texts.aligned.rows() != texts.global.rows() || videos.aligned.rows() != videos.global.rows())) {
    throw ShapeError("build_similarity_matrix", "aligned representations missing");
  }
  Eigen::MatrixXd s(texts.global.rows(), videos.global.rows());
  for (Eigen::Index i = 0; i < s.rows(); ++i) {
    for (Eigen::Index j = 0; j < s.cols(); ++j) {
      if (use_aligned) {
        s(i, j) = fused_similarity(texts.global.row(i), videos.global.row(j), texts.aligned.row(i),
                                   videos.aligned.row(j), w);
      } else {
        s(i, j) = cosine(texts.global.row(i), videos.global.row(j));
      }
    }
  }
  return s;
}

namespace {

std::string fixed1(double v) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(1) << v;
  return os.str();
}

}  // namespace

void write_table(std::ostream& os, const RetrievalReport& t2v, const RetrievalReport& v2t, const std::string& label) {
  const std::string method = label.empty() ? "Method" : label;
  const int w0 = static_cast<int>(std::max<std::size_t>(6, method.size()));
  auto cells = [](const RetrievalReport& r) {
    std::ostringstream os;
    os << std::setw(6) << fixed1(r.r1) << std::setw(6) << fixed1(r.r5) << std::setw(6) << fixed1(r.r10)
       << std::setw(6) << fixed1(r.median_rank) << std::setw(7) << fixed1(r.mean_rank);
    return os.str();
  };
  os << std::string(static_cast<std::size_t>(w0), ' ') << " | " << "Text ⟹ Video              "
     << " | " << "Video ⟹ Text\n";
  os << std::left << std::setw(w0) << "" << std::right << " | " << std::setw(6) << "R@1" << std::setw(6) << "R@5"
     << std::setw(6) << "R@10" << std::setw(6) << "MdR" << std::setw(7) << "MnR"
     << " | " << std::setw(6) << "R@1" << std::setw(6) << "R@5" << std::setw(6) << "R@10" << std::setw(6) << "MdR"
     << std::setw(7) << "MnR" << "\n";
  os << std::left << std::setw(w0) << (label.empty() ? "" : label) << std::right << " | " << cells(t2v) << " | "
     << cells(v2t) << "\n";
}

void write_record(std::ostream& os, const RetrievalReport& r) {
  const char* d = to_string(r.direction);
  os << d << " R@1 " << fixed1(r.r1) << "\n";
  os << d << " R@5 " << fixed1(r.r5) << "\n";
  os << d << " R@10 " << fixed1(r.r10) << "\n";
  os << d << " MdR " << fixed1(r.median_rank) << "\n";
  os << d << " MnR " << fixed1(r.mean_rank) << "\n";
}

std::vector<RetrievalReport> read_record(std::istream& is) {
  RetrievalReport t2v, v2t;
  v2t.direction = Direction::VideoToText;
  int seen_t2v = 0, seen_v2t = 0;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string dir, metric;
    double value = 0.0;
    if (!(ls >> dir >> metric >> value)) {
      throw std::invalid_argument("metrics record line " + std::to_string(line_no) + ": expected '<direction> <metric> <value>'");
    }
    RetrievalReport* r = nullptr;
    if (dir == "t2v") {
      r = &t2v;
      ++seen_t2v;
    } else if (dir == "v2t") {
      r = &v2t;
      ++seen_v2t;
    } else {
      throw std::invalid_argument("metrics record line " + std::to_string(line_no) + ": unknown direction '" + dir + "'");
    }
    if (metric == "R@1") r->r1 = value;
    else if (metric == "R@5") r->r5 = value;
    else if (metric == "R@10") r->r10 = value;
    else if (metric == "MdR") r->median_rank = value;
    else if (metric == "MnR") r->mean_rank = value;
    else throw std::invalid_argument("metrics record line " + std::to_string(line_no) + ": unknown metric '" + metric + "'");
  }
  if (seen_t2v == 0 && seen_v2t == 0) throw std::invalid_argument("metrics record is empty");
  std::vector<RetrievalReport> out;
  if (seen_t2v > 0) out.push_back(t2v);
  if (seen_v2t > 0) out.push_back(v2t);
  return out;
}

}  // namespace tvr
