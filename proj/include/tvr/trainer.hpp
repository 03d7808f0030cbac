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

#include <iosfwd>
#include <stdexcept>
#include <vector>

#include "tvr/adam.hpp"
#include "tvr/config.hpp"
#include "tvr/dataset.hpp"
#include "tvr/model.hpp"
#include "tvr/random.hpp"

namespace tvr {

/// Loss became NaN or infinite; the message names the batch.
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct StepLoss {
  double total = 0.0;
  double global = 0.0;
  double aligned = 0.0;  // NaN when the alignment branch is off
};

struct EpochLog {
  int epoch = 0;
  long step = 0;
  StepLoss loss;      // mean over the epoch's batches
  double val_r1 = 0;  // t2v R@1 on the val split (test if no val); NaN if neither
};

struct TrainResult {
  std::vector<EpochLog> epochs;
  std::vector<double> step_losses;
};

class Trainer {
 public:
  /// Initializes the model from cfg.seed.
  Trainer(TrainConfig cfg, const Dataset& data);
  /// Continues from existing state.
  Trainer(TrainConfig cfg, const Dataset& data, Model model, Adam optimizer);

  /// Loss of one batch of pair indices, without an update.
  StepLoss evaluate_loss(const std::vector<std::size_t>& pairs);
  /// Forward, backward and one Adam update.
  StepLoss train_step(const std::vector<std::size_t>& pairs);

  /// Epoch loop over the train split; stops early at cfg.max_steps.
  TrainResult run(std::ostream* log = nullptr);

  Model& model() { return model_; }
  Adam& optimizer() { return adam_; }
  const TrainConfig& config() const { return cfg_; }

 private:
  struct Forward {
    ad::Var total, global, aligned;
  };
  Forward forward(ad::Tape& tape, const std::vector<std::size_t>& pairs);

  TrainConfig cfg_;
  const Dataset& data_;
  Model model_;
  Adam adam_;
  Rng shuffle_rng_;
};

}  // namespace tvr
