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

#include "tvr/tab.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace tvr {

using ad::Var;

std::string_view to_string(TabVariant v) {
  switch (v) {
    case TabVariant::None: return "none";
    case TabVariant::Base: return "base";
    case TabVariant::Temporal: return "temporal";
    case TabVariant::Transformer: return "transformer";
    case TabVariant::Tdb: return "tdb";
  }
  throw std::invalid_argument("unknown TAB variant");
}

TabVariant parse_tab_variant(std::string_view name) {
  for (TabVariant v :
       {TabVariant::None, TabVariant::Base, TabVariant::Temporal, TabVariant::Transformer, TabVariant::Tdb}) {
    if (to_string(v) == name) return v;
  }
  throw std::invalid_argument("unknown TAB variant '" + std::string(name) + "'");
}

SharedCenters SharedCenters::random(Eigen::Index k, Eigen::Index dim, Rng& rng) {
  if (k < 1) throw std::invalid_argument("SharedCenters: need at least one center");
  const double stddev = 1.0 / std::sqrt(static_cast<double>(dim));
  return {ad::Parameter("tab.centers", rng.normal_matrix(k, dim, stddev)),
          ad::Parameter("tab.adaption", rng.normal_matrix(k, dim, stddev))};
}

TabParams TabParams::random(Eigen::Index k, Eigen::Index dim, int heads, Rng& rng) {
  TabParams p;
  p.shared = SharedCenters::random(k, dim, rng);
  p.correlate = EncoderLayer::random("tab.correlate", dim, heads, rng, 0.02, 1.0 / std::sqrt(2.0));
  return p;
}

std::vector<ad::Parameter*> TabParams::parameters() {
  std::vector<ad::Parameter*> out = shared.parameters();
  auto ps = correlate.parameters();
  out.insert(out.end(), ps.begin(), ps.end());
  return out;
}

Var center_confidence(Var tokens, Var centers) {
  if (tokens.rows() < 1) throw ShapeError("center_confidence", "no tokens");
  if (tokens.cols() != centers.cols()) throw ShapeError("center_confidence", tokens.value(), centers.value());
  return ad::softmax_rows(ad::matmul(tokens, ad::transpose(centers)));
}

Var aggregate(Var tokens, Var weights, Var adaption) {
  if (weights.rows() != tokens.rows() || weights.cols() != adaption.rows() || tokens.cols() != adaption.cols()) {
    throw ShapeError("aggregate", "tokens " + shape_string(tokens.rows(), tokens.cols()) + ", weights " +
                                      shape_string(weights.rows(), weights.cols()) + ", adaption " +
                                      shape_string(adaption.rows(), adaption.cols()));
  }
  ad::Tape& tape = *tokens.tape();
  Var weights_t = ad::transpose(weights);
  Var weighted_tokens = ad::matmul(weights_t, tokens);
  // sum_i w_ij (rho_i - c~_j) = (W^T rho)_j - (sum_i w_ij) c~_j
  Var mass = ad::matmul(weights_t, tape.constant(Matrix::Ones(tokens.rows(), tokens.cols())));
  Var residual = ad::sub(weighted_tokens, ad::mul(mass, adaption));
  return ad::l2_normalize_rows(residual);
}

namespace {

// Rows in lexicographic order, so sums over tokens do not depend on the order
// the tokens arrived in.
std::vector<Eigen::Index> canonical_row_order(const Matrix& x) {
  std::vector<Eigen::Index> order(static_cast<std::size_t>(x.rows()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&x](Eigen::Index a, Eigen::Index b) {
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      if (x(a, c) != x(b, c)) return x(a, c) < x(b, c);
    }
    return false;
  });
  return order;
}

}  // namespace

Alignment align_tokens(ad::Tape& tape, Var tokens, SharedCenters& shared) {
  if (tokens.value().allFinite()) tokens = ad::gather_rows(tokens, canonical_row_order(tokens.value()));
  Var weights = center_confidence(tokens, tape.param(shared.centers));
  Alignment out;
  out.center_embeddings = aggregate(tokens, weights, tape.param(shared.adaption));
  out.aligned = ad::mean_rows(out.center_embeddings);
  out.shared = &shared;
  return out;
}

Var resample_large_rate(Var frames) {
  const Eigen::Index m = frames.rows();
  if (m < 3) throw std::invalid_argument("resample_large_rate: need at least 3 frames, got " + std::to_string(m));
  std::vector<Eigen::Index> rows;
  for (Eigen::Index i = 0; i < m; i += 2) rows.push_back(i);
  return ad::gather_rows(frames, rows);
}

Alignment tab_video(ad::Tape& tape, Var frames, const TdbOutput& main, TdbParams& tdb, TdbVariant tdb_variant,
                    TabParams& tab, TabVariant variant) {
  switch (variant) {
    case TabVariant::None:
      throw std::invalid_argument("tab_video: alignment branch disabled (variant none)");
    case TabVariant::Base:
      return align_tokens(tape, frames, tab.shared);
    case TabVariant::Temporal:
      if (!main.frame_outputs.valid()) throw std::invalid_argument("tab_video: temporal variant needs main-path outputs");
      return align_tokens(tape, main.frame_outputs, tab.shared);
    case TabVariant::Transformer: {
      Var sparse = add_positional(tape, resample_large_rate(frames), tdb.embeddings);
      Var correlated = encoder_layer_forward(tape, sparse, tab.correlate);
      return align_tokens(tape, ad::concat_rows({frames, correlated}), tab.shared);
    }
    case TabVariant::Tdb: {
      Var sparse = resample_large_rate(frames);
      TdbOutput half = tdb_forward(tape, sparse, tdb, tdb_variant);
      Var correlated;
      if (tab.keep_difference_tokens && half.interleaved.valid()) {
        Var all = encoder_layer_forward(tape, half.encoded, tab.correlate);
        correlated = ad::gather_rows(all, frame_token_rows(sparse.rows()));
      } else {
        correlated = encoder_layer_forward(tape, half.frame_outputs, tab.correlate);
      }
      return align_tokens(tape, ad::concat_rows({frames, correlated}), tab.shared);
    }
  }
  throw std::invalid_argument("tab_video: unknown variant");
}

Alignment tab_text(ad::Tape& tape, Var tokens, Eigen::Index valid_len, TabParams& tab) {
  if (valid_len < 1) throw std::invalid_argument("tab_text: empty text");
  if (valid_len > tokens.rows()) {
    throw std::invalid_argument("tab_text: valid length " + std::to_string(valid_len) + " exceeds " +
                                std::to_string(tokens.rows()) + " token rows");
  }
  Var used = valid_len == tokens.rows() ? tokens : ad::slice_rows(tokens, 0, valid_len);
  return align_tokens(tape, used, tab.shared);
}

}  // namespace tvr
