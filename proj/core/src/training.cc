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

#include "artnet/training.h"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "artnet/ops.h"

namespace artnet {

void TrainConfig::Validate() const {
  auto fail = [](const std::string& m) { throw ConfigError("train config: " + m); };
  if (batch_size < 1) fail("batch_size must be positive");
  if (momentum < 0.0 || momentum >= 1.0) fail("momentum must be in [0, 1)");
  if (!(lr > 0.0)) fail("lr must be positive");
  if (!(lr_decay_factor >= 1.0)) fail("lr_decay_factor must be >= 1");
  if (decay_patience < 1) fail("decay_patience must be positive");
  if (smoothing_window < 1) fail("smoothing_window must be positive");
  if (max_iters < 0) fail("max_iters must be non-negative");
  if (dropout_p < 0.0 || dropout_p >= 1.0) fail("dropout_p must be in [0, 1)");
  if (segments < 1) fail("segments must be >= 1");
  if (segment_frames < 0) fail("segment_frames must be non-negative");
  if (eval_every < 1 || log_every < 1) fail("eval_every and log_every must be positive");
  if (stop_loss < 0.0 || stop_window < 1) fail("stop_loss must be >= 0 and stop_window positive");
  if (augment.flip_prob < 0.0 || augment.flip_prob > 1.0) fail("flip_prob must be in [0, 1]");
}

void EvalConfig::Validate() const {
  if (clips_per_video < 1) throw ConfigError("eval config: clips must be >= 1");
  if (crops_per_clip != 1 && crops_per_clip != 10) {
    throw ConfigError("eval config: crops must be 1 or 10");
  }
}

// Optimizer ----------------------------------------------------------------

void SgdStep(Tensor& param, const Tensor& grad, Tensor& velocity, double lr,
             double momentum) {
  if (grad.shape() != param.shape() || velocity.shape() != param.shape()) {
    throw ContractError("sgd step: parameter " + ShapeToString(param.shape()) +
                        ", gradient " + ShapeToString(grad.shape()) + ", velocity " +
                        ShapeToString(velocity.shape()));
  }
  double* p = param.data().data();
  double* v = velocity.data().data();
  const double* g = grad.data().data();
  for (int64_t i = 0; i < param.size(); ++i) {
    v[i] = momentum * v[i] + g[i];
    p[i] -= lr * v[i];
  }
}

void SgdStep(std::span<const NamedParameter> params, std::vector<Tensor>& velocities,
             double lr, double momentum) {
  if (velocities.empty()) {
    for (const auto& p : params) velocities.push_back(Tensor::ZerosLike(p.var->value()));
  }
  if (velocities.size() != params.size()) {
    throw ContractError("sgd step: " + std::to_string(velocities.size()) +
                        " velocities for " + std::to_string(params.size()) +
                        " parameters");
  }
  for (size_t i = 0; i < params.size(); ++i) {
    Var& var = *params[i].var;
    const Tensor* g = var.grad();
    if (g) {
      SgdStep(var.mutable_value(), *g, velocities[i], lr, momentum);
    } else {
      // No gradient this step: zero-gradient update.
      SgdStep(var.mutable_value(), Tensor::ZerosLike(var.value()), velocities[i], lr,
              momentum);
    }
  }
}

std::string FormatLogRecord(const LogRecord& r) {
  std::ostringstream os;
  os.precision(6);
  os << "iter=" << r.iter << " split=" << r.split << " loss=" << std::fixed << r.loss
     << " top1=" << std::setprecision(4) << r.top1 << std::defaultfloat
     << " lr=" << r.lr;
  return os.str();
}

// TSN ----------------------------------------------------------------------

std::vector<int64_t> SampleSegmentStarts(int64_t frames, int segments, int64_t length,
                                         std::mt19937_64& rng) {
  if (segments < 1) throw ContractError("segment sampling needs >= 1 segment");
  const int64_t span = frames / segments;
  if (length < 1 || length > span) {
    throw ConfigError("segment length " + std::to_string(length) +
                      " does not fit spans of " + std::to_string(span) + " frames");
  }
  std::vector<int64_t> starts;
  for (int s = 0; s < segments; ++s) {
    std::uniform_int_distribution<int64_t> d(0, span - length);
    starts.push_back(s * span + d(rng));
  }
  return starts;
}

Var Consensus(std::span<const Var> segment_scores) {
  if (segment_scores.empty()) throw ContractError("consensus over zero segments");
  if (segment_scores.size() == 1) return segment_scores[0];
  return MeanOf(segment_scores);
}

Var TsnForward(Network& net, std::span<const Var> segments, const ForwardContext& ctx) {
  if (segments.empty()) throw ContractError("TSN forward needs at least one segment");
  std::vector<Var> scores;
  for (const Var& s : segments) {
    if (s.shape() != segments[0].shape()) {
      throw ContractError("TSN segments must share one shape");
    }
    scores.push_back(net.Forward(s, ctx));
  }
  return Consensus(scores);
}

// Training -----------------------------------------------------------------

namespace {

std::mt19937_64 IterationRng(uint64_t seed, int iter) {
  std::seed_seq seq{static_cast<uint32_t>(seed), static_cast<uint32_t>(seed >> 32),
                    static_cast<uint32_t>(iter), 0x7261696eu};
  return std::mt19937_64(seq);
}

double Top1(const Tensor& logits, std::span<const int> labels) {
  const int64_t n = logits.shape()[0], k = logits.shape()[1];
  int correct = 0;
  for (int64_t r = 0; r < n; ++r) {
    const double* row = logits.data().data() + r * k;
    if (std::max_element(row, row + k) - row == labels[r]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(n);
}

int MapLabel(const std::vector<int>& map, int label) {
  return map.empty() ? label : map[static_cast<size_t>(label)];
}

}  // namespace

TrainResult Train(Network& net, const std::vector<data::VideoSample>& train,
                  const std::vector<data::VideoSample>& val, const TrainConfig& cfg,
                  const LogSink& sink, TrainState state) {
  cfg.Validate();
  if (train.empty()) throw ConfigError("training set is empty");
  for (const auto& s : train) {
    if (s.label < 0 || s.label >= net.spec().head.classes) {
      throw ConfigError("label " + std::to_string(s.label) + " outside the network's " +
                        std::to_string(net.spec().head.classes) + " classes");
    }
  }
  if (!net.materialized()) net.Materialize(cfg.seed);
  net.SetDropout(cfg.dropout_p);

  TrainResult result;
  if (state.lr <= 0.0) state.lr = cfg.lr;
  std::vector<NamedParameter> params = net.Parameters();
  auto emit = [&](const LogRecord& r) {
    result.log.push_back(r);
    if (sink) sink(r);
  };

  const int64_t n = static_cast<int64_t>(train.size());
  const int batch = cfg.batch_size;
  for (int iter = state.iteration; iter < cfg.max_iters; ++iter) {
    std::mt19937_64 rng = IterationRng(cfg.seed, iter);

    // Distinct indices within a batch when the set is large enough.
    std::vector<int64_t> order(static_cast<size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::vector<int64_t> picks;
    if (batch <= n) {
      for (int b = 0; b < batch; ++b) {
        std::uniform_int_distribution<int64_t> d(b, n - 1);
        std::swap(order[b], order[d(rng)]);
        picks.push_back(order[b]);
      }
    } else {
      std::uniform_int_distribution<int64_t> d(0, n - 1);
      for (int b = 0; b < batch; ++b) picks.push_back(d(rng));
    }

    std::vector<Tensor> clips;
    std::vector<int> labels;
    for (int64_t idx : picks) {
      data::AugmentedClip a = data::Augment(train[idx].volume, true, cfg.augment, rng);
      clips.push_back(std::move(a.clip));
      labels.push_back(a.flipped ? MapLabel(cfg.flip_label_map, train[idx].label)
                                 : train[idx].label);
    }
    Tensor batch_clip = data::StackClips(clips);

    net.SetMode(Mode::kTrain);
    ForwardContext ctx{Mode::kTrain, &rng};
    Var logits;
    if (cfg.segments == 1) {
      logits = net.Forward(Var(std::move(batch_clip)), ctx);
    } else {
      const int64_t frames = batch_clip.shape()[2];
      const int64_t length =
          cfg.segment_frames > 0 ? cfg.segment_frames : frames / cfg.segments;
      // One draw per clip and segment; segment s of the batch stacks them.
      std::vector<std::vector<Tensor>> seg_clips(static_cast<size_t>(cfg.segments));
      for (size_t b = 0; b < clips.size(); ++b) {
        auto starts = SampleSegmentStarts(frames, cfg.segments, length, rng);
        for (int s = 0; s < cfg.segments; ++s) {
          seg_clips[s].push_back(data::CropVolume(
              clips[b], starts[s], 0, 0,
              {length, clips[b].shape()[2], clips[b].shape()[3]}));
        }
      }
      std::vector<Var> segs;
      for (auto& sc : seg_clips) segs.emplace_back(data::StackClips(sc));
      logits = TsnForward(net, segs, ctx);
    }
    Var loss = SoftmaxCrossEntropy(logits, labels);
    const double loss_value = loss.value().item();
    if (!std::isfinite(loss_value)) {
      throw TrainingDiverged("loss became " + std::to_string(loss_value) +
                             " at iteration " + std::to_string(iter) + " (lr " +
                             std::to_string(state.lr) + ")");
    }
    Backward(loss);
    SgdStep(params, state.velocities, state.lr, cfg.momentum);
    for (auto& p : params) p.var->ZeroGrad();
    result.batch_losses.push_back(loss_value);
    state.iteration = iter + 1;

    bool stop = false;
    if (cfg.stop_loss > 0.0 &&
        result.batch_losses.size() >= static_cast<size_t>(cfg.stop_window)) {
      const double recent =
          std::accumulate(result.batch_losses.end() - cfg.stop_window,
                          result.batch_losses.end(), 0.0) /
          cfg.stop_window;
      stop = recent < cfg.stop_loss;
    }
    if (state.iteration % cfg.log_every == 0 || state.iteration == cfg.max_iters || stop) {
      emit({state.iteration, "train", loss_value, Top1(logits.value(), labels), state.lr});
    }
    if (!val.empty() &&
        (state.iteration % cfg.eval_every == 0 || state.iteration == cfg.max_iters)) {
      EvalResult v = QuickEvaluate(net, val, cfg.augment, batch);
      emit({state.iteration, "val", v.loss, v.top1, state.lr});
      state.val_history.push_back(v.loss);
      const size_t w = std::min<size_t>(cfg.smoothing_window, state.val_history.size());
      const double smoothed =
          std::accumulate(state.val_history.end() - w, state.val_history.end(), 0.0) /
          static_cast<double>(w);
      if (state.val_history.size() == 1 || smoothed < state.best_smoothed - cfg.min_improvement) {
        state.best_smoothed = smoothed;
        state.evals_without_improvement = 0;
      } else if (++state.evals_without_improvement >= cfg.decay_patience) {
        state.lr /= cfg.lr_decay_factor;
        state.evals_without_improvement = 0;
        ++state.decays;
      }
    }
    if (stop) break;
  }
  net.SetMode(Mode::kEval);
  result.state = std::move(state);
  return result;
}

// Evaluation ---------------------------------------------------------------

namespace {

struct Ranking {
  bool top1;
  bool top5;
};

Ranking Rank(const std::vector<double>& scores, int label) {
  const int k = std::min<int>(5, static_cast<int>(scores.size()));
  int above = 0;
  for (double s : scores) above += s > scores[label];
  // Ties resolve towards the lower class index, like argmax.
  int tied_before = 0;
  for (int c = 0; c < label; ++c) tied_before += scores[c] == scores[label];
  const int rank = above + tied_before;
  return {rank == 0, rank < k};
}

}  // namespace

EvalResult Evaluate(Network& net, const std::vector<data::VideoSample>& videos,
                    const EvalConfig& cfg) {
  cfg.Validate();
  if (videos.empty()) throw ConfigError("evaluation set is empty");
  net.SetMode(Mode::kEval);
  const int64_t classes = net.spec().head.classes;
  std::mt19937_64 unused(0);  // eval-mode augmentation draws nothing
  EvalResult r;
  double hits1 = 0, hits5 = 0, nll = 0;
  for (const auto& v : videos) {
    const Tensor& vol = v.volume;
    const int64_t frames = vol.shape()[1];
    const int64_t t = cfg.crop.t ? cfg.crop.t : frames;
    const int64_t h = cfg.crop.h ? cfg.crop.h : vol.shape()[2];
    const int64_t w = cfg.crop.w ? cfg.crop.w : vol.shape()[3];
    if (t > frames) {
      throw ConfigError("clip of " + std::to_string(t) + " frames is longer than the " +
                        std::to_string(frames) + "-frame video");
    }
    std::vector<Tensor> inputs;
    std::vector<bool> flipped;
    for (int c = 0; c < cfg.clips_per_video; ++c) {
      const int64_t start =
          cfg.clips_per_video == 1
              ? (frames - t) / 2
              : static_cast<int64_t>(std::llround(static_cast<double>(c) *
                                                  static_cast<double>(frames - t) /
                                                  (cfg.clips_per_video - 1)));
      Tensor clip = data::CropVolume(vol, start, 0, 0, {t, vol.shape()[2], vol.shape()[3]});
      if (cfg.crops_per_clip == 1) {
        data::AugmentConfig centre;
        centre.crop = {t, h, w};
        inputs.push_back(data::Augment(clip, false, centre, unused).clip);
        flipped.push_back(false);
      } else {
        auto crops = data::TenCrop(clip, h, w);
        for (size_t i = 0; i < crops.size(); ++i) {
          inputs.push_back(std::move(crops[i]));
          flipped.push_back(i >= 5);
        }
      }
    }
    for (Tensor& in : inputs) in = data::SubtractMean(in, cfg.mean);
    Tensor logits = net.Forward(Var(data::StackClips(inputs)), {Mode::kEval, nullptr}).value();
    Tensor probs = Softmax(logits);
    std::vector<double> scores(static_cast<size_t>(classes), 0.0);
    for (size_t i = 0; i < inputs.size(); ++i) {
      for (int64_t c = 0; c < classes; ++c) {
        // Score of class c on the original orientation.
        const int64_t src = flipped[i] ? MapLabel(cfg.flip_label_map, static_cast<int>(c)) : c;
        scores[c] += probs[static_cast<int64_t>(i) * classes + src];
      }
    }
    for (double& s : scores) s /= static_cast<double>(inputs.size());
    const Ranking rk = Rank(scores, v.label);
    hits1 += rk.top1;
    hits5 += rk.top5;
    nll += -std::log(std::max(scores[v.label], 1e-300));
    r.volumes += static_cast<int64_t>(inputs.size());
  }
  r.videos = static_cast<int64_t>(videos.size());
  r.top1 = hits1 / static_cast<double>(r.videos);
  r.top5 = hits5 / static_cast<double>(r.videos);
  r.avg = 0.5 * (r.top1 + r.top5);
  r.loss = nll / static_cast<double>(r.videos);
  return r;
}

EvalResult QuickEvaluate(Network& net, const std::vector<data::VideoSample>& videos,
                         const data::AugmentConfig& augment, int batch_size) {
  if (videos.empty()) throw ConfigError("evaluation set is empty");
  net.SetMode(Mode::kEval);
  std::mt19937_64 unused(0);
  EvalResult r;
  double loss_sum = 0.0, correct = 0.0, correct5 = 0.0;
  for (size_t begin = 0; begin < videos.size(); begin += static_cast<size_t>(batch_size)) {
    const size_t end = std::min(videos.size(), begin + static_cast<size_t>(batch_size));
    std::vector<Tensor> clips;
    std::vector<int> labels;
    for (size_t i = begin; i < end; ++i) {
      clips.push_back(data::Augment(videos[i].volume, false, augment, unused).clip);
      labels.push_back(videos[i].label);
    }
    Var logits = net.Forward(Var(data::StackClips(clips)), {Mode::kEval, nullptr});
    const double count = static_cast<double>(end - begin);
    loss_sum += SoftmaxCrossEntropy(logits, labels).value().item() * count;
    const int64_t k = logits.shape()[1];
    for (size_t i = 0; i < labels.size(); ++i) {
      const double* row = logits.value().data().data() + static_cast<int64_t>(i) * k;
      const Ranking rk = Rank(std::vector<double>(row, row + k), labels[i]);
      correct += rk.top1;
      correct5 += rk.top5;
    }
    r.volumes += static_cast<int64_t>(end - begin);
  }
  r.videos = static_cast<int64_t>(videos.size());
  r.loss = loss_sum / static_cast<double>(r.videos);
  r.top1 = correct / static_cast<double>(r.videos);
  r.top5 = correct5 / static_cast<double>(r.videos);
  r.avg = 0.5 * (r.top1 + r.top5);
  return r;
}

}  // namespace artnet
