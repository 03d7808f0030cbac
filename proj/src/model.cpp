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

#include "tvr/model.hpp"

#include <cmath>

#include "tvr/objective.hpp"
#include "tvr/random.hpp"

namespace tvr {

using ad::Var;

Model Model::init(const ModelConfig& config, std::uint64_t seed) {
  Rng rng(seed);
  Model m;
  m.config = config;
  m.tdb = TdbParams::random(config.dim, config.heads, config.temporal_layers, config.positional_rows(), rng);
  m.tab = TabParams::random(config.centers, config.dim, config.heads, rng);
  m.tab.keep_difference_tokens = config.keep_difference_tokens;
  m.log_logit_scale = ad::Parameter("logit_scale.log", Matrix::Constant(1, 1, std::log(1.0 / 0.07)));
  return m;
}

std::vector<ad::Parameter*> Model::parameters() {
  std::vector<ad::Parameter*> out = tdb.parameters();
  auto t = tab.parameters();
  out.insert(out.end(), t.begin(), t.end());
  out.push_back(&log_logit_scale);
  return out;
}

void Model::zero_grad() {
  for (ad::Parameter* p : parameters()) p->zero_grad();
}

Var Model::logit_scale(ad::Tape& tape) {
  if (config.literal_eq7) return tape.constant(Matrix::Ones(1, 1));
  return ad::exp(tape.param(log_logit_scale));
}

double Model::logit_scale_value() const {
  return config.literal_eq7 ? 1.0 : std::exp(log_logit_scale.value(0, 0));
}

void Model::clamp_logit_scale() {
  log_logit_scale.value(0, 0) = std::min(log_logit_scale.value(0, 0), std::log(kMaxLogitScale));
}

Model::Encoded Model::encode_video(ad::Tape& tape, Var frames, bool with_alignment) {
  Encoded e;
  TdbOutput main = tdb_forward(tape, frames, tdb, config.tdb_variant);
  e.global = main.global;
  if (with_alignment) {
    e.aligned = tab_video(tape, frames, main, tdb, config.tdb_variant, tab, config.tab_variant).aligned;
  }
  return e;
}

Model::Encoded Model::encode_text(ad::Tape& tape, const Eigen::MatrixXd& tokens, Eigen::Index valid_len,
                                  bool with_alignment) {
  Encoded e;
  Var all = tape.constant(tokens);
  e.global = ad::slice_rows(all, 0, 1);
  if (with_alignment) e.aligned = tab_text(tape, all, valid_len, tab).aligned;
  return e;
}

Encodings encode_videos(Model& model, const Dataset& data, const std::vector<std::size_t>& videos, double w) {
  const bool align = model.uses_alignment(w);
  const Eigen::Index d = model.config.dim;
  Encodings out{Eigen::MatrixXd(static_cast<Eigen::Index>(videos.size()), d),
                Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(videos.size()), d)};
  for (std::size_t i = 0; i < videos.size(); ++i) {
    const VideoItem& v = data.videos.at(videos[i]);
    if (v.frames.cols() != d) throw ShapeError("encode_videos", v.frames, out.global);
    ad::Tape tape;
    Model::Encoded e = model.encode_video(tape, tape.constant(v.frames), align);
    out.global.row(static_cast<Eigen::Index>(i)) = e.global.value();
    if (align) out.aligned.row(static_cast<Eigen::Index>(i)) = e.aligned.value();
  }
  return out;
}

Encodings encode_texts(Model& model, const Dataset& data, const std::vector<std::size_t>& texts, double w) {
  const bool align = model.uses_alignment(w);
  const Eigen::Index d = model.config.dim;
  Encodings out{Eigen::MatrixXd(static_cast<Eigen::Index>(texts.size()), d),
                Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(texts.size()), d)};
  for (std::size_t i = 0; i < texts.size(); ++i) {
    const TextItem& t = data.texts.at(texts[i]);
    if (t.tokens.cols() != d) throw ShapeError("encode_texts", t.tokens, out.global);
    ad::Tape tape;
    Model::Encoded e = model.encode_text(tape, t.tokens, t.valid_len, align);
    out.global.row(static_cast<Eigen::Index>(i)) = e.global.value();
    if (align) out.aligned.row(static_cast<Eigen::Index>(i)) = e.aligned.value();
  }
  return out;
}

Eigen::MatrixXd build_similarity_matrix(Model& model, const Dataset& data, const EvalSubset& subset, double w) {
  check_fusion_weight(w);
  const double effective_w = model.uses_alignment(w) ? w : 1.0;
  return build_similarity_matrix(encode_texts(model, data, subset.texts, w),
                                 encode_videos(model, data, subset.videos, w), effective_w);
}

}  // namespace tvr
