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

#include "tvr/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>

#include "tvr/objective.hpp"

namespace tvr {
namespace {

constexpr std::uint64_t kShuffleStream = 0x9E3779B97F4A7C15ULL;

}  // namespace

Trainer::Trainer(TrainConfig cfg, const Dataset& data)
    : Trainer(cfg, data, Model::init(cfg.model, cfg.seed), Adam{}) {
  adam_ = Adam(model_.parameters(), cfg_.adam);
}

Trainer::Trainer(TrainConfig cfg, const Dataset& data, Model model, Adam optimizer)
    : cfg_(std::move(cfg)),
      data_(data),
      model_(std::move(model)),
      adam_(std::move(optimizer)),
      shuffle_rng_(cfg_.seed ^ kShuffleStream) {
  cfg_.validate();
  if (data_.dim() != 0 && data_.dim() != cfg_.model.dim) {
    throw std::invalid_argument("trainer: data dim " + std::to_string(data_.dim()) + " differs from model dim " +
                                std::to_string(cfg_.model.dim));
  }
}

Trainer::Forward Trainer::forward(ad::Tape& tape, const std::vector<std::size_t>& pairs) {
  const bool align = model_.uses_alignment(cfg_.w);
  std::vector<ad::Var> text_g, text_a, video_g, video_a;
  for (std::size_t p : pairs) {
    const PairRef& ref = data_.pairs.at(p);
    const TextItem& t = data_.texts[ref.text];
    const VideoItem& v = data_.videos[ref.video];
    Model::Encoded te = model_.encode_text(tape, t.tokens, t.valid_len, align);
    Model::Encoded ve = model_.encode_video(tape, tape.constant(v.frames), align);
    text_g.push_back(te.global);
    video_g.push_back(ve.global);
    if (align) {
      text_a.push_back(te.aligned);
      video_a.push_back(ve.aligned);
    }
  }
  Forward f;
  ad::Var scale = model_.logit_scale(tape);
  f.global = symmetric_loss(cosine_matrix(ad::concat_rows(text_g), ad::concat_rows(video_g)), scale);
  if (!align) {
    f.total = f.global;
    return f;
  }
  f.aligned = symmetric_loss(cosine_matrix(ad::concat_rows(text_a), ad::concat_rows(video_a)), scale);
  f.total = cfg_.w == 0.0 ? f.aligned : ad::add(ad::scale(f.global, cfg_.w), ad::scale(f.aligned, 1.0 - cfg_.w));
  return f;
}

StepLoss Trainer::evaluate_loss(const std::vector<std::size_t>& pairs) {
  ad::Tape tape;
  Forward f = forward(tape, pairs);
  return {f.total.value()(0, 0), f.global.value()(0, 0),
          f.aligned.valid() ? f.aligned.value()(0, 0) : std::numeric_limits<double>::quiet_NaN()};
}

StepLoss Trainer::train_step(const std::vector<std::size_t>& pairs) {
  ad::Tape tape;
  Forward f = forward(tape, pairs);
  StepLoss loss{f.total.value()(0, 0), f.global.value()(0, 0),
                f.aligned.valid() ? f.aligned.value()(0, 0) : std::numeric_limits<double>::quiet_NaN()};
  if (!std::isfinite(loss.total)) {
    std::string ids;
    for (std::size_t p : pairs) ids += (ids.empty() ? "" : ",") + data_.texts[data_.pairs[p].text].id;
    throw TrainingError("non-finite loss at step " + std::to_string(adam_.steps() + 1) + " on batch [" + ids + "]");
  }
  model_.zero_grad();
  tape.backward(f.total);
  const auto params = model_.parameters();
  adam_.step(params);
  model_.clamp_logit_scale();
  return loss;
}

TrainResult Trainer::run(std::ostream* log) {
  TrainResult result;
  std::vector<std::size_t> train = data_.pairs_in(Split::Train);
  if (train.empty() && cfg_.epochs > 0) throw std::invalid_argument("trainer: no training pairs");
  const Split val_split = data_.has_split(Split::Val) ? Split::Val : Split::Test;
  const bool has_val = data_.has_split(val_split);
  const auto batch = static_cast<std::size_t>(cfg_.batch_size);

  for (int epoch = 1; epoch <= cfg_.epochs; ++epoch) {
    if (cfg_.max_steps > 0 && adam_.steps() >= cfg_.max_steps) break;
    std::shuffle(train.begin(), train.end(), shuffle_rng_.engine());
    EpochLog entry;
    entry.epoch = epoch;
    double aligned_sum = 0.0;
    int batches = 0;
    for (std::size_t start = 0; start < train.size(); start += batch) {
      if (cfg_.max_steps > 0 && adam_.steps() >= cfg_.max_steps) break;
      const std::size_t end = std::min(train.size(), start + batch);
      if (end - start < 2 && train.size() >= 2) continue;
      std::vector<std::size_t> ids(train.begin() + static_cast<std::ptrdiff_t>(start),
                                   train.begin() + static_cast<std::ptrdiff_t>(end));
      StepLoss l = train_step(ids);
      result.step_losses.push_back(l.total);
      entry.loss.total += l.total;
      entry.loss.global += l.global;
      aligned_sum += l.aligned;
      ++batches;
    }
    if (batches > 0) {
      entry.loss.total /= batches;
      entry.loss.global /= batches;
      entry.loss.aligned = aligned_sum / batches;
    }
    entry.step = adam_.steps();
    entry.val_r1 = std::numeric_limits<double>::quiet_NaN();
    if (has_val) {
      EvalSubset subset = select_split(data_, val_split);
      entry.val_r1 = evaluate_t2v(build_similarity_matrix(model_, data_, subset, cfg_.w), subset.pairing).r1;
    }
    if (log != nullptr) {
      *log << "epoch " << entry.epoch << " step " << entry.step << std::setprecision(6) << " loss "
           << entry.loss.total << " loss_g " << entry.loss.global << " loss_a " << entry.loss.aligned << " val_r1 ";
      if (has_val) {
        *log << std::fixed << std::setprecision(1) << entry.val_r1 << std::defaultfloat;
      } else {
        *log << "-";
      }
      *log << "\n";
    }
    result.epochs.push_back(entry);
  }
  return result;
}

}  // namespace tvr
