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

#include <string>
#include <string_view>
#include <vector>

#include "tvr/autodiff.hpp"
#include "tvr/tdb.hpp"
#include "tvr/transformer.hpp"

namespace tvr {

/// Which video tokens are aggregated against the shared centers.
enum class TabVariant {
  None,         // no alignment branch; global matching only
  Base,         // input frames
  Temporal,     // frame outputs of the main temporal encoder
  Transformer,  // frames + one transformer layer over the half-rate frames
  Tdb,          // frames + shared temporal encoder and one layer over the half-rate frames
};

std::string_view to_string(TabVariant v);
TabVariant parse_tab_variant(std::string_view name);

/// K centers C scoring assignments and K adaption anchors C~ subtracted from
/// the tokens. One instance serves both modalities.
struct SharedCenters {
  ad::Parameter centers;   // K x d
  ad::Parameter adaption;  // K x d

  static SharedCenters random(Eigen::Index k, Eigen::Index dim, Rng& rng);
  Eigen::Index count() const { return centers.value.rows(); }
  std::vector<ad::Parameter*> parameters() { return {&centers, &adaption}; }
};

struct TabParams {
  SharedCenters shared;
  EncoderLayer correlate;  // the extra layer over half-rate temporal tokens
  /// Feed the difference tokens of the half-rate pass through the correlate layer
  /// too (frame positions are still the only ones aggregated).
  bool keep_difference_tokens = false;

  static TabParams random(Eigen::Index k, Eigen::Index dim, int heads, Rng& rng);
  std::vector<ad::Parameter*> parameters();
};

struct Alignment {
  ad::Var center_embeddings;  // K x d, rows unit norm (or zero under the guard)
  ad::Var aligned;            // 1 x d, mean over centers
  const SharedCenters* shared = nullptr;
};

/// Soft assignment of tokens to centers: softmax_j(token_i . c_j), eta x K.
ad::Var center_confidence(ad::Var tokens, ad::Var centers);

/// v_j = normalize(sum_i w_ij (token_i - c~_j)), K x d.
ad::Var aggregate(ad::Var tokens, ad::Var weights, ad::Var adaption);

/// Scores tokens against the centers, aggregates and pools over centers. The
/// result is bit-identical under any permutation of the token rows.
Alignment align_tokens(ad::Tape& tape, ad::Var tokens, SharedCenters& shared);

/// Every second frame starting at 0; ceil(m/2) rows. Requires m >= 3.
ad::Var resample_large_rate(ad::Var frames);

/// Video alignment. `main` is the main-path temporal output for `frames`
/// (read by TabVariant::Temporal only).
Alignment tab_video(ad::Tape& tape, ad::Var frames, const TdbOutput& main, TdbParams& tdb, TdbVariant tdb_variant,
                    TabParams& tab, TabVariant variant);

/// Text alignment over rows [0, valid_len) of the token matrix.
Alignment tab_text(ad::Tape& tape, ad::Var tokens, Eigen::Index valid_len, TabParams& tab);

}  // namespace tvr
