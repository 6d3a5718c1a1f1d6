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
#include <random>
#include <string>
#include <vector>

#include "artnet/autodiff.h"
#include "artnet/ops.h"
#include "artnet/tensor.h"

namespace artnet {

struct ForwardContext {
  Mode mode = Mode::kTrain;
  std::mt19937_64* rng = nullptr;  // required for dropout in train mode
};

struct NamedParameter {
  std::string name;
  Var* var;
};

struct NamedBuffer {
  std::string name;
  Tensor* tensor;
};

/// One weighted layer as seen by the analyzer. Counts are per sample.
struct LayerRecord {
  std::string name;
  std::string kind;  // "conv3d", "conv2d", "pool", "bn", "fc", ...
  Shape output_shape;
  int64_t weight_params = 0;
  int64_t bias_params = 0;
  int64_t bn_params = 0;
  int64_t macs = 0;
  /// Bias belongs to a conv whose output goes straight into batch norm.
  bool bias_before_bn = false;
};

/// Building block with lazily allocated weights. Until Materialize() only
/// the shapes exist, which is enough for shape inference and analysis.
class Module {
 public:
  virtual ~Module() = default;

  virtual Var Forward(const Var& x, const ForwardContext& ctx) = 0;
  virtual Shape OutputShape(const Shape& input) const = 0;
  /// Appends this module's weighted layers for an input of `input` shape.
  virtual void Describe(const std::string& name, const Shape& input,
                        std::vector<LayerRecord>& out) const = 0;
  /// He-normal weights, zero biases.
  virtual void Materialize(std::mt19937_64& rng) = 0;
  virtual void CollectParameters(const std::string& prefix,
                                 std::vector<NamedParameter>& out) = 0;
  virtual void CollectBuffers(const std::string& prefix,
                              std::vector<NamedBuffer>& out) = 0;
  virtual void SetMode(Mode mode) = 0;
  virtual int64_t in_channels() const = 0;
  virtual int64_t out_channels() const = 0;
};

// Layers -----------------------------------------------------------------

/// Convolution with optional bias; per-frame when the spec's temporal kernel
/// is 1.
class ConvLayer {
 public:
  ConvLayer() = default;
  ConvLayer(int64_t in_channels, ConvSpec spec, bool bias = true);

  Var Forward(const Var& x) const;
  Shape OutputShape(const Shape& input) const { return spec_.OutputShape(input); }
  LayerRecord Describe(const std::string& name, const Shape& input,
                       bool followed_by_bn) const;
  void Materialize(std::mt19937_64& rng);
  void CollectParameters(const std::string& prefix,
                         std::vector<NamedParameter>& out);

  const ConvSpec& spec() const { return spec_; }
  int64_t in_channels() const { return in_channels_; }
  Var& weight() { return weight_; }
  Var& bias() { return bias_; }

 private:
  int64_t in_channels_ = 0;
  ConvSpec spec_;
  bool has_bias_ = true;
  Var weight_;
  Var bias_;
};

class BatchNormLayer {
 public:
  BatchNormLayer() = default;
  explicit BatchNormLayer(int64_t channels);

  Var Forward(const Var& x) { return BatchNorm(x, state_); }
  LayerRecord Describe(const std::string& name, const Shape& input) const;
  void CollectParameters(const std::string& prefix,
                         std::vector<NamedParameter>& out);
  void CollectBuffers(const std::string& prefix, std::vector<NamedBuffer>& out);
  void SetMode(Mode mode) { state_.mode = mode; }
  BatchNormState& state() { return state_; }
  int64_t channels() const { return channels_; }

 private:
  int64_t channels_ = 0;
  BatchNormState state_;
};

// Units ------------------------------------------------------------------

/// conv -> BN, optionally followed by ReLU. The plain 3D (or 2D) unit.
class ConvBnUnit : public Module {
 public:
  ConvBnUnit(int64_t in_channels, ConvSpec spec, bool relu);

  Var Forward(const Var& x, const ForwardContext& ctx) override;
  Shape OutputShape(const Shape& input) const override;
  void Describe(const std::string& name, const Shape& input,
                std::vector<LayerRecord>& out) const override;
  void Materialize(std::mt19937_64& rng) override;
  void CollectParameters(const std::string& prefix,
                         std::vector<NamedParameter>& out) override;
  void CollectBuffers(const std::string& prefix,
                      std::vector<NamedBuffer>& out) override;
  void SetMode(Mode mode) override { bn_.SetMode(mode); }
  int64_t in_channels() const override { return conv_.in_channels(); }
  int64_t out_channels() const override { return conv_.spec().out_channels; }

  ConvLayer& conv() { return conv_; }
  BatchNormLayer& bn() { return bn_; }

 private:
  ConvLayer conv_;
  BatchNormLayer bn_;
  bool relu_;
};

/// Square-pooling relation detector:
///   3D conv (C_t maps) -> BN -> square -> cross-channel pool -> BN -> ReLU.
struct RelationBranchConfig {
  int64_t in_channels = 1;
  ConvSpec conv;  // conv.out_channels is the hidden count C_t
  int pool_group = 2;
  double pool_weight = 0.5;

  int64_t hidden() const { return conv.out_channels; }
  int64_t codes() const { return conv.out_channels / pool_group; }
  void Validate() const;
};

class RelationBranch : public Module {
 public:
  explicit RelationBranch(RelationBranchConfig cfg);

  Var Forward(const Var& x, const ForwardContext& ctx) override;
  Shape OutputShape(const Shape& input) const override;
  void Describe(const std::string& name, const Shape& input,
                std::vector<LayerRecord>& out) const override;
  void Materialize(std::mt19937_64& rng) override;
  void CollectParameters(const std::string& prefix,
                         std::vector<NamedParameter>& out) override;
  void CollectBuffers(const std::string& prefix,
                      std::vector<NamedBuffer>& out) override;
  void SetMode(Mode mode) override;
  int64_t in_channels() const override { return cfg_.in_channels; }
  int64_t out_channels() const override { return cfg_.codes(); }

  const RelationBranchConfig& config() const { return cfg_; }
  ConvLayer& conv() { return conv_; }
  BatchNormLayer& hidden_bn() { return hidden_bn_; }
  BatchNormLayer& code_bn() { return code_bn_; }

 private:
  RelationBranchConfig cfg_;
  ConvLayer conv_;
  BatchNormLayer hidden_bn_;
  BatchNormLayer code_bn_;
};

/// Design parameters of a SMART block. The defaults derive everything from
/// a single ConvSpec, the same knobs a plain 3D convolution has.
struct SmartBlockConfig {
  ConvSpec conv;  // shared k, t, strides and pads; conv.out_channels = C_s
  int64_t in_channels = 1;
  int64_t appearance_out = 1;   // C_s
  int64_t relation_hidden = 1;  // C_t
  int64_t relation_codes = 1;   // C'_t
  int64_t fused_out = 1;        // C_f
  int pool_group = 2;
  double pool_weight = 0.5;

  /// C_s = C_t = c, C'_t = c / 2, C_f = c, pooling group 2 with weight 0.5.
  static SmartBlockConfig Default(int64_t in_channels, ConvSpec conv);
  /// Throws ConfigError when a design invariant is violated.
  void Validate() const;
  ConvSpec AppearanceSpec() const;
  RelationBranchConfig Relation() const;
};

/// Two-branch block: per-frame appearance conv and relation branch, fused by
/// channel concatenation and a 1x1x1 reduction -> BN -> ReLU.
class SmartBlock : public Module {
 public:
  explicit SmartBlock(SmartBlockConfig cfg);

  Var Forward(const Var& x, const ForwardContext& ctx) override;
  Shape OutputShape(const Shape& input) const override;
  void Describe(const std::string& name, const Shape& input,
                std::vector<LayerRecord>& out) const override;
  void Materialize(std::mt19937_64& rng) override;
  void CollectParameters(const std::string& prefix,
                         std::vector<NamedParameter>& out) override;
  void CollectBuffers(const std::string& prefix,
                      std::vector<NamedBuffer>& out) override;
  void SetMode(Mode mode) override;
  int64_t in_channels() const override { return cfg_.in_channels; }
  int64_t out_channels() const override { return cfg_.fused_out; }

  /// Appearance output F after BN and ReLU.
  Var AppearanceForward(const Var& x);
  const SmartBlockConfig& config() const { return cfg_; }
  ConvLayer& appearance_conv() { return appearance_conv_; }
  BatchNormLayer& appearance_bn() { return appearance_bn_; }
  RelationBranch& relation() { return relation_; }
  ConvLayer& reduce_conv() { return reduce_conv_; }
  BatchNormLayer& reduce_bn() { return reduce_bn_; }

 private:
  SmartBlockConfig cfg_;
  ConvLayer appearance_conv_;
  BatchNormLayer appearance_bn_;
  RelationBranch relation_;
  ConvLayer reduce_conv_;
  BatchNormLayer reduce_bn_;
};

// Residual blocks ----------------------------------------------------------

enum class UnitKind { kConv3d, kConv2d, kSmart, kRelation };

const char* UnitKindName(UnitKind kind);

/// Builds the unit that plays the role of one k x k x t convolution with
/// `out_channels` outputs. Conv units end at BN (no ReLU) unless
/// `conv_relu`; SMART and relation units always end with their own ReLU.
/// A relation unit uses 2 * out_channels hidden maps so its code count
/// matches out_channels.
std::unique_ptr<Module> MakeUnit(UnitKind kind, int64_t in_channels,
                                 ConvSpec spec, bool conv_relu);

struct ResidualBlockSpec {
  UnitKind first = UnitKind::kConv3d;
  UnitKind second = UnitKind::kConv3d;
  int64_t in_channels = 64;
  int64_t channels = 64;
  bool downsample = false;  // 2x2x2 stride on the first unit
  int kernel = 3;
  /// 3 for spatiotemporal units, 1 for per-frame ones.
  int temporal_kernel = 3;
};

/// Post-activation basic block: ReLU(unit2(ReLU(unit1(x))) + shortcut(x)),
/// shortcut = identity or 1x1x1 conv (stride of the block) -> BN.
class ResidualBlock : public Module {
 public:
  explicit ResidualBlock(ResidualBlockSpec spec);

  Var Forward(const Var& x, const ForwardContext& ctx) override;
  Shape OutputShape(const Shape& input) const override;
  void Describe(const std::string& name, const Shape& input,
                std::vector<LayerRecord>& out) const override;
  void Materialize(std::mt19937_64& rng) override;
  void CollectParameters(const std::string& prefix,
                         std::vector<NamedParameter>& out) override;
  void CollectBuffers(const std::string& prefix,
                      std::vector<NamedBuffer>& out) override;
  void SetMode(Mode mode) override;
  int64_t in_channels() const override { return spec_.in_channels; }
  int64_t out_channels() const override { return spec_.channels; }

  const ResidualBlockSpec& spec() const { return spec_; }
  Module& first() { return *first_; }
  Module& second() { return *second_; }
  bool has_projection() const { return projection_ != nullptr; }

 private:
  ResidualBlockSpec spec_;
  std::unique_ptr<Module> first_;
  std::unique_ptr<Module> second_;
  std::unique_ptr<ConvBnUnit> projection_;
};

/// He-normal initialization, std = sqrt(2 / fan_in).
Tensor HeNormal(const Shape& shape, int64_t fan_in, std::mt19937_64& rng);

}  // namespace artnet
