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

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "tvr/autodiff.hpp"
#include "tvr/random.hpp"

namespace tvr {

/// One pre-norm transformer encoder layer:
///   Y = X + MSA(LN(X));  out = Y + MLP(LN(Y)),  MLP = d -> 4d -> d with GELU.
struct EncoderLayer {
  int heads = 1;
  ad::Parameter ln1_gain, ln1_bias;
  ad::Parameter wq, wk, wv, wo;
  ad::Parameter bq, bk, bv, bo;
  ad::Parameter ln2_gain, ln2_bias;
  ad::Parameter w1, b1, w2, b2;

  Eigen::Index dim() const { return wq.value.rows(); }

  /// Projections N(0, stddev); output projections (wo, w2) N(0, stddev * residual_scale).
  static EncoderLayer random(const std::string& name, Eigen::Index dim, int heads, Rng& rng, double stddev = 0.02,
                             double residual_scale = 1.0);
  /// Every weight and bias zero, LayerNorm gains one.
  static EncoderLayer zeros(const std::string& name, Eigen::Index dim, int heads);

  std::vector<ad::Parameter*> parameters();
};

/// Two-layer perceptron d -> 4d -> d with GELU.
struct Mlp {
  ad::Parameter w1, b1, w2, b2;

  static Mlp random(const std::string& name, Eigen::Index dim, Rng& rng, double stddev = 0.02);
  std::vector<ad::Parameter*> parameters();
};

/// Learned positional table P (max_len x d) and type table T (2 x d).
/// Type 0 marks a frame token, type 1 a difference token.
struct PositionalTypeEmbeddings {
  ad::Parameter positional;
  ad::Parameter type;

  static PositionalTypeEmbeddings random(Eigen::Index max_len, Eigen::Index dim, Rng& rng, double stddev = 0.01);
  static PositionalTypeEmbeddings zeros(Eigen::Index max_len, Eigen::Index dim);
  Eigen::Index max_len() const { return positional.value.rows(); }
  std::vector<ad::Parameter*> parameters() { return {&positional, &type}; }
};

/// Sequence longer than the positional table.
class PositionOverflow : public std::length_error {
 public:
  PositionOverflow(Eigen::Index length, Eigen::Index capacity);
};

/// Multi-head self-attention block only (no residual, no LayerNorm).
ad::Var self_attention(ad::Tape& tape, ad::Var x, EncoderLayer& layer);

ad::Var encoder_layer_forward(ad::Tape& tape, ad::Var x, EncoderLayer& layer);

/// Runs the layers in order over an n x d token sequence.
ad::Var encoder_forward(ad::Tape& tape, ad::Var x, std::span<EncoderLayer> layers);

ad::Var mlp_forward(ad::Tape& tape, ad::Var x, Mlp& mlp);

/// X[i] + P[i] + T[type_ids[i]].
ad::Var add_positional_type(ad::Tape& tape, ad::Var x, PositionalTypeEmbeddings& emb, std::span<const int> type_ids);

/// X[i] + P[i]; the type table is not touched.
ad::Var add_positional(ad::Tape& tape, ad::Var x, PositionalTypeEmbeddings& emb);

}  // namespace tvr
