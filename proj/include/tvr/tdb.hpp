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
#include "tvr/transformer.hpp"

namespace tvr {

/// Video temporal encoders. Tdb is the full difference-token pipeline, the
/// others are its ablations.
enum class TdbVariant {
  Tdb,                  // 2*sigmoid(delta(diff + P)) - 1 between frames, pool frame outputs
  Sub,                  // raw frame differences inserted, no delta / sigmoid
  Mlp,                  // delta replaced by a two-layer MLP
  All,                  // pool every output token, difference tokens included
  MeanPool,             // mean of the input frames, no transformer
  TemporalTransformer,  // frames only through the temporal transformer
};

std::string_view to_string(TdbVariant v);
TdbVariant parse_tdb_variant(std::string_view name);

struct TdbParams {
  EncoderLayer delta;                  // difference-level attention, one layer
  std::vector<EncoderLayer> temporal;  // L_t layers
  Mlp difference_mlp;                  // used by TdbVariant::Mlp only
  PositionalTypeEmbeddings embeddings;

  static TdbParams random(Eigen::Index dim, int heads, int temporal_layers, Eigen::Index max_len, Rng& rng);
  std::vector<ad::Parameter*> parameters();
};

struct TdbOutput {
  ad::Var frame_outputs;  // F_v, m x d
  ad::Var global;         // f_v^g, 1 x d
  ad::Var interleaved;    // F_te before embeddings; unset for MeanPool / TemporalTransformer
  ad::Var encoded;        // every transformer output token; unset for MeanPool
};

struct Interleaved {
  ad::Var tokens;             // (2m-1) x d
  std::vector<int> type_ids;  // 0,1,0,...,0
};

/// Difference-enhanced tokens, (m-1) x d. Row i is built from frame[i+1] - frame[i].
ad::Var difference_tokens(ad::Tape& tape, ad::Var frames, TdbParams& params, TdbVariant variant = TdbVariant::Tdb);

/// {f0, d1, f1, d2, ..., d_{m-1}, f_{m-1}}. No embeddings are added here.
Interleaved interleave(ad::Var frames, ad::Var differences);

/// Even row indices 0, 2, ..., 2(m-1) of a (2m-1)-row interleaved sequence.
std::vector<Eigen::Index> frame_token_rows(Eigen::Index frames);

TdbOutput tdb_forward(ad::Tape& tape, ad::Var frames, TdbParams& params, TdbVariant variant = TdbVariant::Tdb);

}  // namespace tvr
