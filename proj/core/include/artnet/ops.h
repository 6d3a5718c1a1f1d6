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
#include <random>
#include <span>
#include <vector>

#include "artnet/autodiff.h"
#include "artnet/tensor.h"

namespace artnet {

/// Geometry of a k x k x t convolution producing `out_channels` maps.
struct ConvSpec {
  int kernel = 1;           // spatial k
  int temporal_kernel = 1;  // t; 1 means a per-frame 2D convolution
  int spatial_stride = 1;
  int temporal_stride = 1;
  int64_t out_channels = 1;
  int spatial_pad = 0;
  int temporal_pad = 0;

  bool is_2d() const { return temporal_kernel == 1; }
  /// Throws ShapeError on non-positive fields.
  void Validate() const;
  /// [N, C, T, H, W] -> [N, out_channels, T', H', W'].
  Shape OutputShape(const Shape& input) const;
  /// Weight tensor shape for `in_channels` inputs.
  Shape WeightShape(int64_t in_channels) const;
  /// Multiply-accumulates per output element.
  int64_t MacsPerOutput(int64_t in_channels) const;
};

/// floor((in + 2 pad - kernel) / stride) + 1; throws when the kernel does not
/// fit the padded input.
int64_t ConvOutputExtent(int64_t in, int pad, int kernel, int stride);

// Tensor-level kernels (no graph). --------------------------------------

Tensor Conv3dForward(const Tensor& input, const Tensor& weights,
                     const Tensor* bias, const ConvSpec& spec);

/// out[:, g] = weight * sum of the `group_size` consecutive channels of group g.
Tensor CrossChannelPoolForward(const Tensor& u, int group_size, double weight);

/// Row-wise softmax of a [N, K] tensor.
Tensor Softmax(const Tensor& logits);

// Differentiable ops. ---------------------------------------------------

Var Add(const Var& a, const Var& b);
Var Sub(const Var& a, const Var& b);
Var Mul(const Var& a, const Var& b);
Var Scale(const Var& a, double s);
Var Square(const Var& a);
Var Relu(const Var& a);
/// Sum over every element, shape {1}.
Var Sum(const Var& a);
Var Mean(const Var& a);
/// Elementwise mean of equally shaped inputs.
Var MeanOf(std::span<const Var> inputs);
Var ConcatChannels(const Var& a, const Var& b);
Var Reshape(const Var& a, Shape shape);

/// Cross-correlation over (T, H, W). `bias` may be undefined.
Var Conv3d(const Var& input, const Var& weights, const Var& bias,
           const ConvSpec& spec);
/// Conv3d restricted to temporal kernel 1: every frame convolved on its own.
Var Conv2dFrames(const Var& input, const Var& weights, const Var& bias,
                 const ConvSpec& spec);

/// Fixed-weight grouping of consecutive channels; nothing is learned.
Var CrossChannelPool(const Var& u, int group_size, double weight);

enum class Mode { kTrain, kEval };

struct BatchNormState {
  Var gamma;  // learnable, length C
  Var beta;   // learnable, length C
  Tensor running_mean;
  Tensor running_var;
  double epsilon = 1e-5;
  /// running <- momentum * running + (1 - momentum) * batch
  double momentum = 0.9;
  Mode mode = Mode::kTrain;

  static BatchNormState Create(int64_t channels);
  int64_t channels() const { return gamma.value().size(); }
};

/// Per-channel normalization over every non-channel axis.
Var BatchNorm(const Var& x, BatchNormState& state);

/// Inverted dropout; identity in eval mode or when p == 0.
Var Dropout(const Var& x, double p, Mode mode, std::mt19937_64& rng);

/// [N, C, ...] -> [N, C]
Var GlobalAvgPool(const Var& x);

/// x [N, I], weights [K, I], bias [K] (bias may be undefined) -> [N, K].
Var FullyConnected(const Var& x, const Var& weights, const Var& bias);

/// Mean over the batch of -log softmax(logits)[label].
Var SoftmaxCrossEntropy(const Var& logits, std::span<const int> labels);

}  // namespace artnet
