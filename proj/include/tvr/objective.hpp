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

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "tvr/autodiff.hpp"

namespace tvr {

inline constexpr double kCosineEps = 1e-12;
inline constexpr double kDefaultFusionWeight = 0.5;
inline constexpr double kMaxLogitScale = 100.0;

/// Cosine similarity with the norm product floored at kCosineEps. Sets
/// *guarded when either vector is (numerically) zero.
template <typename A, typename B>
double cosine(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b, bool* guarded = nullptr) {
  if (a.size() != b.size()) throw ShapeError("cosine", shape_string(a.rows(), a.cols()) + " vs " + shape_string(b.rows(), b.cols()));
  const double na = a.norm();
  const double nb = b.norm();
  const bool degenerate = na <= kCosineEps || nb <= kCosineEps;
  if (guarded != nullptr) *guarded = degenerate;
  return a.reshaped().dot(b.reshaped()) / (std::max(na, kCosineEps) * std::max(nb, kCosineEps));
}

inline void check_fusion_weight(double w) {
  if (!(w >= 0.0 && w <= 1.0)) throw std::invalid_argument("fusion weight must lie in [0, 1], got " + std::to_string(w));
}

/// w * cos(text_global, video_global) + (1 - w) * cos(text_aligned, video_aligned).
template <typename T1, typename V1, typename T2, typename V2>
double fused_similarity(const Eigen::MatrixBase<T1>& text_global, const Eigen::MatrixBase<V1>& video_global,
                        const Eigen::MatrixBase<T2>& text_aligned, const Eigen::MatrixBase<V2>& video_aligned,
                        double w = kDefaultFusionWeight, bool* guarded = nullptr) {
  check_fusion_weight(w);
  bool g1 = false, g2 = false;
  const double global = cosine(text_global, video_global, &g1);
  const double aligned = w == 1.0 ? 0.0 : cosine(text_aligned, video_aligned, &g2);
  if (guarded != nullptr) *guarded = g1 || g2;
  return w * global + (1.0 - w) * aligned;
}

/// Row-normalized A times row-normalized B transposed: S[i][j] = cos(a_i, b_j).
ad::Var cosine_matrix(ad::Var a, ad::Var b);

/// One direction of the contrastive loss: -(1/B) sum_i log softmax_row_i(logits)[i].
ad::Var directional_loss(ad::Var logits);

/// Symmetric cross entropy over a square similarity matrix S (rows text,
/// columns video): 0.5 * (L_t2v + L_v2t) on logit_scale * S.
ad::Var symmetric_loss(ad::Var similarities, ad::Var logit_scale);
ad::Var symmetric_loss(ad::Var similarities, double logit_scale = 1.0);

/// w * L(S_global) + (1 - w) * L(S_aligned).
ad::Var combined_loss(ad::Var global, ad::Var aligned, ad::Var logit_scale, double w = kDefaultFusionWeight);
ad::Var combined_loss(ad::Var global, ad::Var aligned, double w = kDefaultFusionWeight, double logit_scale = 1.0);

}  // namespace tvr
