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
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "artnet/blocks.h"

namespace artnet {

struct StemSpec {
  UnitKind kind = UnitKind::kConv3d;
  int64_t channels = 64;
  int kernel = 7;
  int temporal_kernel = 3;
  int spatial_stride = 2;
  int temporal_stride = 2;
  int spatial_pad = 3;
  int temporal_pad = 1;

  ConvSpec Conv() const;
};

struct StageSpec {
  std::string name;  // "conv2_x" ...
  UnitKind first = UnitKind::kConv3d;
  UnitKind second = UnitKind::kConv3d;
  int64_t channels = 64;
  int repeats = 2;
  bool downsample = false;  // on the stage's first block only
  int temporal_kernel = 3;
};

struct HeadSpec {
  double dropout = 0.2;
  int64_t classes = 400;
};

/// Declarative network description: stem, residual stages, pooled head.
struct ArchSpec {
  std::string name;
  StemSpec stem;
  std::vector<StageSpec> stages;
  HeadSpec head;
  Shape input_shape{1, 3, 16, 112, 112};

  void Validate() const;
};

/// Width/depth knobs for desk-scale variants of the named networks.
struct ArchOptions {
  int64_t base_width = 64;  // stem and first-stage channels
  int num_stages = 4;       // 1..4, stage i has base_width * 2^i channels
  int64_t in_channels = 3;
};

const std::vector<std::string>& ArchitectureNames();

/// ResNet18-family spec for one of ArchitectureNames(); throws ConfigError
/// (listing the valid names) otherwise.
ArchSpec MakeArchSpec(const std::string& name, int64_t classes,
                      const ArchOptions& options = {});

struct UnitCounts {
  int conv3d = 0;
  int conv2d = 0;
  int smart = 0;
  int relation = 0;
};

/// Stem + residual stages + average pool, dropout and fully connected head.
class Network {
 public:
  explicit Network(ArchSpec spec);
  Network(Network&&) = default;
  Network& operator=(Network&&) = default;

  const ArchSpec& spec() const { return spec_; }

  /// Logits [N, classes].
  Var Forward(const Var& x, const ForwardContext& ctx);

  /// Allocates He-initialized weights from `seed`.
  void Materialize(uint64_t seed);
  bool materialized() const { return fc_weight_.defined(); }
  /// Dropout probability applied before the classifier in train mode.
  void SetDropout(double p);

  std::vector<NamedParameter> Parameters();
  std::vector<NamedBuffer> Buffers();
  void SetMode(Mode mode);

  /// Per-layer records for one sample of shape `input` (N forced to 1).
  std::vector<LayerRecord> Describe(const Shape& input) const;
  /// Units playing the role of a single convolution (shortcuts excluded).
  UnitCounts CountUnits() const;

  Module& stem() { return *stem_; }
  const Module& stem() const { return *stem_; }
  std::vector<std::unique_ptr<ResidualBlock>>& blocks() { return blocks_; }
  const std::vector<std::unique_ptr<ResidualBlock>>& blocks() const {
    return blocks_;
  }
  /// Block index one past the end of each stage.
  const std::vector<size_t>& stage_ends() const { return stage_end_; }

 private:
  ArchSpec spec_;
  std::unique_ptr<Module> stem_;
  std::vector<std::unique_ptr<ResidualBlock>> blocks_;
  std::vector<size_t> stage_end_;  // block index one past each stage
  Var fc_weight_;
  Var fc_bias_;
};

/// Build by name (unmaterialized).
Network Build(const std::string& name, int64_t classes,
              const ArchOptions& options = {});

struct ShapeTraceEntry {
  std::string layer;  // "conv1", "conv2_x", ..., "pool"
  Shape output_shape;
};

/// Output shape after the stem, each stage and the global pool.
std::vector<ShapeTraceEntry> InferShapes(const Network& net, const Shape& input);

/// "56 x 56 x 8" (W x H x T, the table's ordering) for an [N, C, T, H, W] shape.
std::string FormatOutputSize(const Shape& shape);

enum class FlopConvention { kMacsAsOne, kMultsAndAdds };
enum class BiasConvention { kWithBias, kNoBiasBeforeBn };

struct CountingConventions {
  FlopConvention flops = FlopConvention::kMacsAsOne;
  BiasConvention bias = BiasConvention::kNoBiasBeforeBn;
  bool count_bn = true;

  std::string ToString() const;
  bool operator==(const CountingConventions&) const = default;
};

/// Parses "macs_as_one,no_bias_before_bn,bn" style strings (any order; "nobn"
/// disables BN counting). Missing parts keep the pinned default.
CountingConventions ParseConventions(const std::string& text);

/// Convention selected by the calibration sweep against the reference table.
CountingConventions PinnedConventions();

struct LayerStats {
  std::string name;
  int64_t params = 0;
  double flops = 0.0;
  Shape output_shape;
};

struct ModelStats {
  double params_millions = 0.0;
  double flops_giga = 0.0;
  int64_t params = 0;
  double flops = 0.0;
  std::vector<LayerStats> per_layer;
  CountingConventions conventions;
};

/// Counts parameters and FLOPs (convolutions and fc only) per sample.
ModelStats Analyze(const Network& net, const CountingConventions& conventions,
                   std::optional<Shape> input = std::nullopt);

struct ReferenceStats {
  std::string arch;
  double params_millions;
  double flops_giga;
};

/// Published totals for the 112 x 112 x 16 input, 400 classes.
const std::vector<ReferenceStats>& ReferenceTable();
std::optional<ReferenceStats> FindReference(const std::string& arch);

struct CalibrationResult {
  CountingConventions conventions;
  double score = 0.0;  // summed |relative deviation| over params and FLOPs
};

/// Sweeps every convention combination and ranks them by deviation from
/// ReferenceTable(); best first.
std::vector<CalibrationResult> CalibrateConventions();

}  // namespace artnet
