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

#include "tvr/tdb.hpp"

#include <cmath>
#include <stdexcept>

namespace tvr {

using ad::Var;

std::string_view to_string(TdbVariant v) {
  switch (v) {
    case TdbVariant::Tdb: return "tdb";
    case TdbVariant::Sub: return "tdb-sub";
    case TdbVariant::Mlp: return "tdb-mlp";
    case TdbVariant::All: return "tdb-all";
    case TdbVariant::MeanPool: return "meanpool";
    case TdbVariant::TemporalTransformer: return "temporal-transformer";
  }
  throw std::invalid_argument("unknown TDB variant");
}

TdbVariant parse_tdb_variant(std::string_view name) {
  for (TdbVariant v : {TdbVariant::Tdb, TdbVariant::Sub, TdbVariant::Mlp, TdbVariant::All, TdbVariant::MeanPool,
                       TdbVariant::TemporalTransformer}) {
    if (to_string(v) == name) return v;
  }
  throw std::invalid_argument("unknown TDB variant '" + std::string(name) + "'");
}

TdbParams TdbParams::random(Eigen::Index dim, int heads, int temporal_layers, Eigen::Index max_len, Rng& rng) {
  TdbParams p;
  const double residual_scale = 1.0 / std::sqrt(2.0 * std::max(1, temporal_layers));
  p.delta = EncoderLayer::random("tdb.delta", dim, heads, rng, 0.02, 1.0 / std::sqrt(2.0));
  for (int l = 0; l < temporal_layers; ++l) {
    p.temporal.push_back(
        EncoderLayer::random("tdb.temporal." + std::to_string(l), dim, heads, rng, 0.02, residual_scale));
  }
  p.difference_mlp = Mlp::random("tdb.difference_mlp", dim, rng);
  p.embeddings = PositionalTypeEmbeddings::random(max_len, dim, rng);
  return p;
}

std::vector<ad::Parameter*> TdbParams::parameters() {
  std::vector<ad::Parameter*> out = delta.parameters();
  for (EncoderLayer& l : temporal) {
    auto ps = l.parameters();
    out.insert(out.end(), ps.begin(), ps.end());
  }
  auto mlp = difference_mlp.parameters();
  out.insert(out.end(), mlp.begin(), mlp.end());
  auto emb = embeddings.parameters();
  out.insert(out.end(), emb.begin(), emb.end());
  return out;
}

Var difference_tokens(ad::Tape& tape, Var frames, TdbParams& params, TdbVariant variant) {
  const Eigen::Index m = frames.rows();
  if (m < 2) throw std::invalid_argument("sequence too short for differences (" + std::to_string(m) + " frames)");
  Var diff = ad::sub(ad::slice_rows(frames, 1, m - 1), ad::slice_rows(frames, 0, m - 1));
  if (variant == TdbVariant::Sub) return diff;
  Var with_pos = add_positional(tape, diff, params.embeddings);
  Var mixed = variant == TdbVariant::Mlp ? mlp_forward(tape, with_pos, params.difference_mlp)
                                         : encoder_layer_forward(tape, with_pos, params.delta);
  return ad::add_scalar(ad::scale(ad::sigmoid(mixed), 2.0), -1.0);
}

Interleaved interleave(Var frames, Var differences) {
  const Eigen::Index m = frames.rows();
  if (differences.rows() != m - 1 || differences.cols() != frames.cols()) {
    throw ShapeError("interleave", frames.value(), differences.value());
  }
  Var stacked = ad::concat_rows({frames, differences});
  std::vector<Eigen::Index> order;
  Interleaved out;
  for (Eigen::Index i = 0; i < m; ++i) {
    order.push_back(i);
    out.type_ids.push_back(0);
    if (i + 1 < m) {
      order.push_back(m + i);
      out.type_ids.push_back(1);
    }
  }
  out.tokens = ad::gather_rows(stacked, order);
  return out;
}

std::vector<Eigen::Index> frame_token_rows(Eigen::Index frames) {
  std::vector<Eigen::Index> rows;
  for (Eigen::Index i = 0; i < frames; ++i) rows.push_back(2 * i);
  return rows;
}

TdbOutput tdb_forward(ad::Tape& tape, Var frames, TdbParams& params, TdbVariant variant) {
  const Eigen::Index m = frames.rows();
  TdbOutput out;
  switch (variant) {
    case TdbVariant::MeanPool:
      if (m < 1) throw std::invalid_argument("tdb_forward: empty frame sequence");
      out.frame_outputs = frames;
      out.global = ad::mean_rows(frames);
      return out;
    case TdbVariant::TemporalTransformer: {
      if (m < 1) throw std::invalid_argument("tdb_forward: empty frame sequence");
      std::vector<int> types(static_cast<std::size_t>(m), 0);
      Var x = add_positional_type(tape, frames, params.embeddings, types);
      out.encoded = encoder_forward(tape, x, params.temporal);
      out.frame_outputs = out.encoded;
      out.global = ad::mean_rows(out.frame_outputs);
      return out;
    }
    case TdbVariant::Tdb:
    case TdbVariant::Sub:
    case TdbVariant::Mlp:
    case TdbVariant::All: {
      Var diffs = difference_tokens(tape, frames, params, variant);
      Interleaved seq = interleave(frames, diffs);
      out.interleaved = seq.tokens;
      Var x = add_positional_type(tape, seq.tokens, params.embeddings, seq.type_ids);
      out.encoded = encoder_forward(tape, x, params.temporal);
      out.frame_outputs = ad::gather_rows(out.encoded, frame_token_rows(m));
      out.global = ad::mean_rows(variant == TdbVariant::All ? out.encoded : out.frame_outputs);
      return out;
    }
  }
  throw std::invalid_argument("tdb_forward: unknown variant");
}

}  // namespace tvr
