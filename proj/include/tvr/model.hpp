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

#include <cstdint>
#include <vector>

#include "tvr/autodiff.hpp"
#include "tvr/dataset.hpp"
#include "tvr/retrieval.hpp"
#include "tvr/tab.hpp"
#include "tvr/tdb.hpp"

namespace tvr {

struct ModelConfig {
  Eigen::Index dim = 512;
  int heads = 8;
  int temporal_layers = 4;
  int frames = 12;  // longest frame sequence; sizes the positional table
  int centers = 5;
  TdbVariant tdb_variant = TdbVariant::Tdb;
  TabVariant tab_variant = TabVariant::Tdb;
  bool keep_difference_tokens = false;
  bool literal_eq7 = false;  // pin the logit scale to 1

  Eigen::Index positional_rows() const { return 2 * static_cast<Eigen::Index>(frames) - 1; }
};

/// All trainable state: the temporal encoder, the alignment block and the
/// log logit scale.
struct Model {
  ModelConfig config;
  TdbParams tdb;
  TabParams tab;
  ad::Parameter log_logit_scale;

  static Model init(const ModelConfig& config, std::uint64_t seed);

  std::vector<ad::Parameter*> parameters();
  void zero_grad();

  bool uses_alignment(double w) const { return config.tab_variant != TabVariant::None && w < 1.0; }
  /// exp(log_logit_scale), or a constant 1 under literal_eq7.
  ad::Var logit_scale(ad::Tape& tape);
  double logit_scale_value() const;
  /// Caps the scale at kMaxLogitScale after an optimizer step.
  void clamp_logit_scale();

  struct Encoded {
    ad::Var global;   // 1 x d
    ad::Var aligned;  // 1 x d, unset when alignment is off
  };
  Encoded encode_video(ad::Tape& tape, ad::Var frames, bool with_alignment);
  /// The global text vector is the [CLS] row as given; only alignment is learned.
  Encoded encode_text(ad::Tape& tape, const Eigen::MatrixXd& tokens, Eigen::Index valid_len, bool with_alignment);
};

Encodings encode_videos(Model& model, const Dataset& data, const std::vector<std::size_t>& videos, double w);
Encodings encode_texts(Model& model, const Dataset& data, const std::vector<std::size_t>& texts, double w);

/// Fused similarity matrix (texts x videos) of an evaluation subset.
Eigen::MatrixXd build_similarity_matrix(Model& model, const Dataset& data, const EvalSubset& subset, double w);

}  // namespace tvr
