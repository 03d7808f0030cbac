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

#include <cmath>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tvr/objective.hpp"

namespace tvr {

/// How candidates scoring exactly the true item's score are counted.
enum class TieRule {
  Optimistic,   // rank = 1 + #{score > true}
  Pessimistic,  // rank = 1 + #{score >= true, other than the true item}
};

template <typename Derived>
long rank_of_true(const Eigen::DenseBase<Derived>& scores, Eigen::Index true_index,
                  TieRule rule = TieRule::Optimistic) {
  if (scores.size() < 1) throw std::invalid_argument("rank_of_true: empty score row");
  if (true_index < 0 || true_index >= scores.size()) {
    throw std::out_of_range("rank_of_true: true index " + std::to_string(true_index) + " outside " +
                            std::to_string(scores.size()) + " candidates");
  }
  const double target = scores(true_index);
  long above = 0;
  for (Eigen::Index i = 0; i < scores.size(); ++i) {
    const double s = scores(i);
    if (std::isnan(s)) throw std::domain_error("rank_of_true: NaN score at candidate " + std::to_string(i));
    if (i == true_index) continue;
    if (s > target || (rule == TieRule::Pessimistic && s == target)) ++above;
  }
  return above + 1;
}

/// Text i belongs to video text_to_video[i]; videos may own several texts.
struct EvalPairing {
  std::vector<Eigen::Index> text_to_video;
  Eigen::Index num_videos = 0;

  /// Texts of each video, in text order. Throws when a video has none or a
  /// text points outside [0, num_videos).
  std::vector<std::vector<Eigen::Index>> caption_groups() const;
  void validate(Eigen::Index num_texts) const;

  /// One text per video, text i paired with video i.
  static EvalPairing identity(Eigen::Index n);
};

enum class Direction { TextToVideo, VideoToText };
const char* to_string(Direction d);

struct RetrievalReport {
  Direction direction = Direction::TextToVideo;
  double r1 = 0.0, r5 = 0.0, r10 = 0.0;  // percentages
  double median_rank = 0.0;
  double mean_rank = 0.0;
  std::vector<long> ranks;
};

/// R@K, median rank (mean of the middle two for even counts) and mean rank.
RetrievalReport summarize_ranks(std::vector<long> ranks, Direction direction);

/// S is texts x videos.
RetrievalReport evaluate_t2v(const Eigen::MatrixXd& similarities, const EvalPairing& pairing,
                             TieRule rule = TieRule::Optimistic);

/// Each video query scores a caption group by its best caption.
RetrievalReport evaluate_v2t(const Eigen::MatrixXd& similarities, const EvalPairing& pairing,
                             TieRule rule = TieRule::Optimistic);

/// Text-to-video R@1 restricted to the true video's group (e.g. temporal
/// siblings). Exact ties earn fractional credit 1/(1 + #tied), the expected
/// hit rate under uniformly random tie-breaking.
double group_recall_at_1(const Eigen::MatrixXd& similarities, const EvalPairing& pairing,
                         const std::vector<std::vector<Eigen::Index>>& video_groups);

/// Global and aligned representations, one row per item.
struct Encodings {
  Eigen::MatrixXd global;
  Eigen::MatrixXd aligned;
};

/// S[i][j] = fused_similarity(text i, video j, w).
Eigen::MatrixXd build_similarity_matrix(const Encodings& texts, const Encodings& videos,
                                        double w = kDefaultFusionWeight);

/// Fixed-width table: R@1 R@5 R@10 MdR MnR for both directions.
void write_table(std::ostream& os, const RetrievalReport& t2v, const RetrievalReport& v2t,
                 const std::string& label = "");
/// One metric per line: "<direction> <metric> <value>", one decimal.
void write_record(std::ostream& os, const RetrievalReport& report);
/// Inverse of write_record for a two-direction record.
std::vector<RetrievalReport> read_record(std::istream& is);

}  // namespace tvr
