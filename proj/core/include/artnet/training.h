// Copyright (c) 2026 The ARTNet-cpp Authors. All Rights Reserved.
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
#include <functional>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "artnet/architectures.h"
#include "artnet/data.h"
#include "artnet/error.h"

namespace artnet {

/// Thrown when the loss stops being finite.
class TrainingDiverged : public ContractError {
 public:
  using ContractError::ContractError;
};

struct TrainConfig {
  int batch_size = 16;
  double momentum = 0.9;
  double lr = 0.1;
  double lr_decay_factor = 10.0;
  /// Consecutive evaluations without a smoothed validation-loss improvement
  /// larger than `min_improvement` before the rate is divided.
  int decay_patience = 3;
  double min_improvement = 1e-3;
  int smoothing_window = 5;
  int max_iters = 2000;
  double dropout_p = 0.2;
  uint64_t seed = 0;
  /// 1 trains on plain clips; more uses segment sampling with average
  /// consensus.
  int segments = 1;
  /// Frames per segment sub-clip when segments > 1 (0: T / segments).
  int64_t segment_frames = 0;
  int eval_every = 200;
  int log_every = 10;
  /// Stop once the mean of the last `stop_window` batch losses drops below
  /// this value (0 disables).
  double stop_loss = 0.0;
  int stop_window = 20;
  data::AugmentConfig augment;
  /// Label permutation applied to horizontally flipped clips (empty:
  /// identity). Motion labels need data::HorizontalFlipLabelMap.
  std::vector<int> flip_label_map;

  void Validate() const;
};

struct EvalConfig {
  int clips_per_video = 5;
  int crops_per_clip = 10;  // 1 or 10
  data::Extent3 crop;       // zero fields mean "full extent"
  std::vector<double> mean;
  /// Label permutation for horizontally flipped crops (empty: identity).
  std::vector<int> flip_label_map;

  void Validate() const;
};

/// v <- momentum * v + grad; param <- param - lr * v.
void SgdStep(Tensor& param, const Tensor& grad, Tensor& velocity, double lr,
             double momentum);
/// Applies SgdStep to every parameter with a gradient. Velocities are
/// created on first use and must stay aligned with `params`.
void SgdStep(std::span<const NamedParameter> params, std::vector<Tensor>& velocities,
             double lr, double momentum);

struct LogRecord {
  int iter = 0;
  std::string split;  // "train" or "val"
  double loss = 0.0;
  double top1 = 0.0;
  double lr = 0.0;
};

/// "iter=10 split=train loss=1.386294 top1=0.2500 lr=0.1"
std::string FormatLogRecord(const LogRecord& r);

/// Resumable optimizer state.
struct TrainState {
  int iteration = 0;
  double lr = 0.0;  // 0: take TrainConfig::lr
  std::vector<Tensor> velocities;
  std::vector<double> val_history;
  double best_smoothed = 0.0;
  int evals_without_improvement = 0;
  int decays = 0;
};

struct TrainResult {
  std::vector<LogRecord> log;
  /// Loss of every training batch, in order.
  std::vector<double> batch_losses;
  TrainState state;
};

/// Splits [0, frames) into `segments` equal spans and draws one start per
/// span for a sub-clip of `length` frames that stays inside its span.
std::vector<int64_t> SampleSegmentStarts(int64_t frames, int segments,
                                         int64_t length, std::mt19937_64& rng);

/// Average of pre-softmax scores over segments.
Var Consensus(std::span<const Var> segment_scores);
/// Runs `net` on each segment ([N, C, T, H, W] each) and averages the
/// logits.
Var TsnForward(Network& net, std::span<const Var> segments, const ForwardContext& ctx);

using LogSink = std::function<void(const LogRecord&)>;

/// Mini-batch SGD with momentum and plateau decay. `val` may be empty, in
/// which case the rate never decays. Deterministic given cfg.seed.
TrainResult Train(Network& net, const std::vector<data::VideoSample>& train,
                  const std::vector<data::VideoSample>& val, const TrainConfig& cfg,
                  const LogSink& sink = nullptr, TrainState state = {});

struct EvalResult {
  double top1 = 0.0;
  double top5 = 0.0;
  double avg = 0.0;
  int64_t videos = 0;
  int64_t volumes = 0;  // network inputs consumed
  double loss = 0.0;    // mean -log of the averaged probability of the label
};

/// Multi-clip, multi-crop evaluation in eval mode: per-video scores are the
/// mean softmax over clips x crops.
EvalResult Evaluate(Network& net, const std::vector<data::VideoSample>& videos,
                    const EvalConfig& cfg);

/// Single centre-clip loss and accuracy, used for validation during training.
EvalResult QuickEvaluate(Network& net, const std::vector<data::VideoSample>& videos,
                         const data::AugmentConfig& augment, int batch_size);

}  // namespace artnet
