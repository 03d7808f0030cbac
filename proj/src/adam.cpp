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

#include "tvr/adam.hpp"

#include <stdexcept>

namespace tvr {

Adam::Adam(std::span<ad::Parameter* const> params, AdamOptions options) : options_(options) {
  for (const ad::Parameter* p : params) {
    m_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
    v_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
  }
}

void Adam::step(std::span<ad::Parameter* const> params) {
  if (params.size() != m_.size()) {
    throw std::invalid_argument("Adam::step: " + std::to_string(params.size()) + " parameters, state holds " +
                                std::to_string(m_.size()));
  }
  ++step_;
  for (std::size_t i = 0; i < params.size(); ++i) {
    adam_update(params[i]->value, params[i]->grad, m_[i], v_[i], step_, options_);
  }
}

}  // namespace tvr
