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

#include "tvr/objective.hpp"

namespace tvr {

using ad::Var;

Var cosine_matrix(Var a, Var b) {
  if (a.cols() != b.cols()) throw ShapeError("cosine_matrix", a.value(), b.value());
  return ad::matmul(ad::l2_normalize_rows(a, kCosineEps), ad::transpose(ad::l2_normalize_rows(b, kCosineEps)));
}

Var directional_loss(Var logits) {
  const auto b = static_cast<double>(logits.rows());
  return ad::scale(ad::sum(ad::diagonal(ad::log_softmax_rows(logits))), -1.0 / b);
}

Var symmetric_loss(Var similarities, Var logit_scale) {
  if (similarities.rows() != similarities.cols() || similarities.rows() < 1) {
    throw ShapeError("symmetric_loss", "similarity matrix must be square and non-empty, got " +
                                           shape_string(similarities.rows(), similarities.cols()));
  }
  if (!(logit_scale.value()(0, 0) > 0.0)) throw std::invalid_argument("symmetric_loss: logit scale must be positive");
  Var logits = ad::scale(similarities, logit_scale);
  Var t2v = directional_loss(logits);
  Var v2t = directional_loss(ad::transpose(logits));
  return ad::scale(ad::add(t2v, v2t), 0.5);
}

Var symmetric_loss(Var similarities, double logit_scale) {
  return symmetric_loss(similarities, similarities.tape()->constant(Matrix::Constant(1, 1, logit_scale)));
}

Var combined_loss(Var global, Var aligned, Var logit_scale, double w) {
  check_fusion_weight(w);
  if (w == 1.0) return symmetric_loss(global, logit_scale);
  if (w == 0.0) return symmetric_loss(aligned, logit_scale);
  return ad::add(ad::scale(symmetric_loss(global, logit_scale), w),
                 ad::scale(symmetric_loss(aligned, logit_scale), 1.0 - w));
}

Var combined_loss(Var global, Var aligned, double w, double logit_scale) {
  return combined_loss(global, aligned, global.tape()->constant(Matrix::Constant(1, 1, logit_scale)), w);
}

}  // namespace tvr
