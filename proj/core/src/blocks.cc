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

#include "artnet/blocks.h"

#include <cmath>
#include <string>

#include "artnet/error.h"

namespace artnet {

Tensor HeNormal(const Shape& shape, int64_t fan_in, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(
      0.0, std::sqrt(2.0 / static_cast<double>(fan_in)));
  Tensor t(shape);
  for (double& v : t.data()) v = dist(rng);
  return t;
}

// ConvLayer --------------------------------------------------------------

ConvLayer::ConvLayer(int64_t in_channels, ConvSpec spec, bool bias)
    : in_channels_(in_channels), spec_(spec), has_bias_(bias) {
  spec_.Validate();
  if (in_channels_ < 1) throw ShapeError("convolution needs input channels");
}

Var ConvLayer::Forward(const Var& x) const {
  if (!weight_.defined()) {
    throw ContractError("convolution weights not materialized");
  }
  if (x.shape().size() != 5 || x.shape()[1] != in_channels_) {
    throw ShapeError("convolution expects " + std::to_string(in_channels_) +
                     " input channels, got " + ShapeToString(x.shape()));
  }
  return spec_.is_2d() ? Conv2dFrames(x, weight_, bias_, spec_)
                       : Conv3d(x, weight_, bias_, spec_);
}

LayerRecord ConvLayer::Describe(const std::string& name, const Shape& input,
                                bool followed_by_bn) const {
  LayerRecord r;
  r.name = name;
  r.kind = spec_.is_2d() ? "conv2d" : "conv3d";
  r.output_shape = spec_.OutputShape(input);
  r.weight_params = NumElements(spec_.WeightShape(in_channels_));
  r.bias_params = has_bias_ ? spec_.out_channels : 0;
  r.bias_before_bn = followed_by_bn;
  const int64_t per_sample =
      r.output_shape[1] * r.output_shape[2] * r.output_shape[3] *
      r.output_shape[4];
  r.macs = per_sample * spec_.MacsPerOutput(in_channels_);
  return r;
}

void ConvLayer::Materialize(std::mt19937_64& rng) {
  weight_ = Var(HeNormal(spec_.WeightShape(in_channels_),
                         spec_.MacsPerOutput(in_channels_), rng),
                true);
  if (has_bias_) bias_ = Var(Tensor::Zeros({spec_.out_channels}), true);
}

void ConvLayer::CollectParameters(const std::string& prefix,
                                  std::vector<NamedParameter>& out) {
  out.push_back({prefix + ".weight", &weight_});
  if (has_bias_) out.push_back({prefix + ".bias", &bias_});
}

// BatchNormLayer ---------------------------------------------------------

BatchNormLayer::BatchNormLayer(int64_t channels)
    : channels_(channels), state_(BatchNormState::Create(channels)) {}

LayerRecord BatchNormLayer::Describe(const std::string& name,
                                     const Shape& input) const {
  LayerRecord r;
  r.name = name;
  r.kind = "bn";
  r.output_shape = input;
  r.bn_params = 2 * channels_;
  return r;
}

void BatchNormLayer::CollectParameters(const std::string& prefix,
                                       std::vector<NamedParameter>& out) {
  out.push_back({prefix + ".gamma", &state_.gamma});
  out.push_back({prefix + ".beta", &state_.beta});
}

void BatchNormLayer::CollectBuffers(const std::string& prefix,
                                    std::vector<NamedBuffer>& out) {
  out.push_back({prefix + ".running_mean", &state_.running_mean});
  out.push_back({prefix + ".running_var", &state_.running_var});
}

// ConvBnUnit -------------------------------------------------------------

ConvBnUnit::ConvBnUnit(int64_t in_channels, ConvSpec spec, bool relu)
    : conv_(in_channels, spec), bn_(spec.out_channels), relu_(relu) {}

Var ConvBnUnit::Forward(const Var& x, const ForwardContext&) {
  Var y = bn_.Forward(conv_.Forward(x));
  return relu_ ? Relu(y) : y;
}

Shape ConvBnUnit::OutputShape(const Shape& input) const {
  return conv_.OutputShape(input);
}

void ConvBnUnit::Describe(const std::string& name, const Shape& input,
                          std::vector<LayerRecord>& out) const {
  out.push_back(conv_.Describe(name + ".conv", input, true));
  out.push_back(bn_.Describe(name + ".bn", out.back().output_shape));
}

void ConvBnUnit::Materialize(std::mt19937_64& rng) { conv_.Materialize(rng); }

void ConvBnUnit::CollectParameters(const std::string& prefix,
                                   std::vector<NamedParameter>& out) {
  conv_.CollectParameters(prefix + ".conv", out);
  bn_.CollectParameters(prefix + ".bn", out);
}

void ConvBnUnit::CollectBuffers(const std::string& prefix,
                                std::vector<NamedBuffer>& out) {
  bn_.CollectBuffers(prefix + ".bn", out);
}

// RelationBranch ---------------------------------------------------------

void RelationBranchConfig::Validate() const {
  conv.Validate();
  if (in_channels < 1) throw ConfigError("relation branch needs input channels");
  if (pool_group < 1 || conv.out_channels % pool_group != 0) {
    throw ConfigError("relation branch: pooling group " +
                      std::to_string(pool_group) + " does not divide " +
                      std::to_string(conv.out_channels) + " hidden maps");
  }
}

RelationBranch::RelationBranch(RelationBranchConfig cfg)
    : cfg_((cfg.Validate(), cfg)),
      conv_(cfg_.in_channels, cfg_.conv),
      hidden_bn_(cfg_.hidden()),
      code_bn_(cfg_.codes()) {}

Var RelationBranch::Forward(const Var& x, const ForwardContext&) {
  Var u = Square(hidden_bn_.Forward(conv_.Forward(x)));
  Var z = CrossChannelPool(u, cfg_.pool_group, cfg_.pool_weight);
  return Relu(code_bn_.Forward(z));
}

Shape RelationBranch::OutputShape(const Shape& input) const {
  Shape s = conv_.OutputShape(input);
  s[1] = cfg_.codes();
  return s;
}

void RelationBranch::Describe(const std::string& name, const Shape& input,
                              std::vector<LayerRecord>& out) const {
  out.push_back(conv_.Describe(name + ".conv", input, true));
  const Shape hidden = out.back().output_shape;
  out.push_back(hidden_bn_.Describe(name + ".hidden_bn", hidden));
  LayerRecord pool;
  pool.name = name + ".pool";
  pool.kind = "cross_channel_pool";
  pool.output_shape = OutputShape(input);
  out.push_back(pool);
  out.push_back(code_bn_.Describe(name + ".code_bn", pool.output_shape));
}

void RelationBranch::Materialize(std::mt19937_64& rng) { conv_.Materialize(rng); }

void RelationBranch::CollectParameters(const std::string& prefix,
                                       std::vector<NamedParameter>& out) {
  conv_.CollectParameters(prefix + ".conv", out);
  hidden_bn_.CollectParameters(prefix + ".hidden_bn", out);
  code_bn_.CollectParameters(prefix + ".code_bn", out);
}

void RelationBranch::CollectBuffers(const std::string& prefix,
                                    std::vector<NamedBuffer>& out) {
  hidden_bn_.CollectBuffers(prefix + ".hidden_bn", out);
  code_bn_.CollectBuffers(prefix + ".code_bn", out);
}

void RelationBranch::SetMode(Mode mode) {
  hidden_bn_.SetMode(mode);
  code_bn_.SetMode(mode);
}

// SmartBlock -------------------------------------------------------------

SmartBlockConfig SmartBlockConfig::Default(int64_t in_channels, ConvSpec conv) {
  SmartBlockConfig cfg;
  cfg.conv = conv;
  cfg.in_channels = in_channels;
  cfg.appearance_out = conv.out_channels;
  cfg.relation_hidden = conv.out_channels;
  cfg.relation_codes = conv.out_channels / 2;
  cfg.fused_out = conv.out_channels;
  return cfg;
}

void SmartBlockConfig::Validate() const {
  conv.Validate();
  auto fail = [](const std::string& msg) {
    throw ConfigError("SMART block: " + msg);
  };
  if (in_channels < 1) fail("input channels must be positive");
  if (appearance_out != relation_hidden) fail("C_s must equal C_t");
  if (relation_hidden != 2 * relation_codes) fail("C_t must equal 2 C'_t");
  if (pool_group != 2 || pool_weight != 0.5) {
    fail("cross-channel pooling uses group 2 with weight 0.5");
  }
  if (fused_out != appearance_out) fail("C_f must equal C_s");
  if (conv.out_channels != appearance_out) fail("conv.out_channels must equal C_s");
  // The per-frame branch keeps every frame, so the relation branch must too:
  // floor((T + 2p - t) / s) == floor((T - 1) / s) for all T iff 2p == t - 1.
  if (2 * conv.temporal_pad != conv.temporal_kernel - 1) {
    fail("temporal pad must be (t - 1) / 2 so both branches keep T'");
  }
}

ConvSpec SmartBlockConfig::AppearanceSpec() const {
  ConvSpec s = conv;
  s.temporal_kernel = 1;
  s.temporal_pad = 0;
  s.out_channels = appearance_out;
  return s;
}

RelationBranchConfig SmartBlockConfig::Relation() const {
  RelationBranchConfig r;
  r.in_channels = in_channels;
  r.conv = conv;
  r.conv.out_channels = relation_hidden;
  r.pool_group = pool_group;
  r.pool_weight = pool_weight;
  return r;
}

namespace {

ConvSpec Pointwise(int64_t out_channels) {
  ConvSpec s;
  s.out_channels = out_channels;
  return s;
}

}  // namespace

SmartBlock::SmartBlock(SmartBlockConfig cfg)
    : cfg_((cfg.Validate(), cfg)),
      appearance_conv_(cfg_.in_channels, cfg_.AppearanceSpec()),
      appearance_bn_(cfg_.appearance_out),
      relation_(cfg_.Relation()),
      reduce_conv_(cfg_.appearance_out + cfg_.relation_codes,
                   Pointwise(cfg_.fused_out)),
      reduce_bn_(cfg_.fused_out) {}

Var SmartBlock::AppearanceForward(const Var& x) {
  return Relu(appearance_bn_.Forward(appearance_conv_.Forward(x)));
}

Var SmartBlock::Forward(const Var& x, const ForwardContext& ctx) {
  Var f = AppearanceForward(x);
  Var z = relation_.Forward(x, ctx);
  for (int axis = 2; axis < 5; ++axis) {
    if (f.shape()[axis] != z.shape()[axis]) {
      throw ContractError("SMART branches disagree: " + ShapeToString(f.shape()) +
                          " vs " + ShapeToString(z.shape()));
    }
  }
  Var fused = ConcatChannels(f, z);
  return Relu(reduce_bn_.Forward(reduce_conv_.Forward(fused)));
}

Shape SmartBlock::OutputShape(const Shape& input) const {
  Shape s = appearance_conv_.OutputShape(input);
  s[1] = cfg_.fused_out;
  return s;
}

void SmartBlock::Describe(const std::string& name, const Shape& input,
                          std::vector<LayerRecord>& out) const {
  out.push_back(
      appearance_conv_.Describe(name + ".appearance.conv", input, true));
  const Shape f_shape = out.back().output_shape;
  out.push_back(appearance_bn_.Describe(name + ".appearance.bn", f_shape));
  relation_.Describe(name + ".relation", input, out);
  Shape cat = f_shape;
  cat[1] = cfg_.appearance_out + cfg_.relation_codes;
  out.push_back(reduce_conv_.Describe(name + ".reduce.conv", cat, true));
  out.push_back(reduce_bn_.Describe(name + ".reduce.bn", out.back().output_shape));
}

void SmartBlock::Materialize(std::mt19937_64& rng) {
  appearance_conv_.Materialize(rng);
  relation_.Materialize(rng);
  reduce_conv_.Materialize(rng);
}

void SmartBlock::CollectParameters(const std::string& prefix,
                                   std::vector<NamedParameter>& out) {
  appearance_conv_.CollectParameters(prefix + ".appearance.conv", out);
  appearance_bn_.CollectParameters(prefix + ".appearance.bn", out);
  relation_.CollectParameters(prefix + ".relation", out);
  reduce_conv_.CollectParameters(prefix + ".reduce.conv", out);
  reduce_bn_.CollectParameters(prefix + ".reduce.bn", out);
}

void SmartBlock::CollectBuffers(const std::string& prefix,
                                std::vector<NamedBuffer>& out) {
  appearance_bn_.CollectBuffers(prefix + ".appearance.bn", out);
  relation_.CollectBuffers(prefix + ".relation", out);
  reduce_bn_.CollectBuffers(prefix + ".reduce.bn", out);
}

void SmartBlock::SetMode(Mode mode) {
  appearance_bn_.SetMode(mode);
  relation_.SetMode(mode);
  reduce_bn_.SetMode(mode);
}

// Units and residual blocks ----------------------------------------------

const char* UnitKindName(UnitKind kind) {
  switch (kind) {
    case UnitKind::kConv3d: return "conv3d";
    case UnitKind::kConv2d: return "conv2d";
    case UnitKind::kSmart: return "smart";
    case UnitKind::kRelation: return "relation";
  }
  return "?";
}

std::unique_ptr<Module> MakeUnit(UnitKind kind, int64_t in_channels,
                                 ConvSpec spec, bool conv_relu) {
  switch (kind) {
    case UnitKind::kConv3d:
      return std::make_unique<ConvBnUnit>(in_channels, spec, conv_relu);
    case UnitKind::kConv2d:
      spec.temporal_kernel = 1;
      spec.temporal_pad = 0;
      return std::make_unique<ConvBnUnit>(in_channels, spec, conv_relu);
    case UnitKind::kSmart:
      return std::make_unique<SmartBlock>(
          SmartBlockConfig::Default(in_channels, spec));
    case UnitKind::kRelation: {
      RelationBranchConfig cfg;
      cfg.in_channels = in_channels;
      cfg.conv = spec;
      cfg.conv.out_channels = 2 * spec.out_channels;
      return std::make_unique<RelationBranch>(cfg);
    }
  }
  throw ConfigError("unknown unit kind");
}

ResidualBlock::ResidualBlock(ResidualBlockSpec spec) : spec_(spec) {
  const int stride = spec_.downsample ? 2 : 1;
  ConvSpec first;
  first.kernel = spec_.kernel;
  first.temporal_kernel = spec_.temporal_kernel;
  first.spatial_stride = stride;
  first.temporal_stride = stride;
  first.out_channels = spec_.channels;
  first.spatial_pad = spec_.kernel / 2;
  first.temporal_pad = spec_.temporal_kernel / 2;
  first_ = MakeUnit(spec_.first, spec_.in_channels, first, true);

  ConvSpec second = first;
  second.spatial_stride = 1;
  second.temporal_stride = 1;
  second_ = MakeUnit(spec_.second, spec_.channels, second, false);

  if (spec_.downsample || spec_.in_channels != spec_.channels) {
    ConvSpec proj;
    proj.out_channels = spec_.channels;
    proj.spatial_stride = stride;
    proj.temporal_stride = stride;
    projection_ = std::make_unique<ConvBnUnit>(spec_.in_channels, proj, false);
  }
}

Var ResidualBlock::Forward(const Var& x, const ForwardContext& ctx) {
  Var path = second_->Forward(first_->Forward(x, ctx), ctx);
  Var shortcut = projection_ ? projection_->Forward(x, ctx) : x;
  if (path.shape() != shortcut.shape()) {
    throw ShapeError("residual path " + ShapeToString(path.shape()) +
                     " does not match shortcut " +
                     ShapeToString(shortcut.shape()));
  }
  return Relu(Add(path, shortcut));
}

Shape ResidualBlock::OutputShape(const Shape& input) const {
  return second_->OutputShape(first_->OutputShape(input));
}

void ResidualBlock::Describe(const std::string& name, const Shape& input,
                             std::vector<LayerRecord>& out) const {
  first_->Describe(name + ".unit1", input, out);
  const Shape mid = first_->OutputShape(input);
  second_->Describe(name + ".unit2", mid, out);
  if (projection_) projection_->Describe(name + ".shortcut", input, out);
}

void ResidualBlock::Materialize(std::mt19937_64& rng) {
  first_->Materialize(rng);
  second_->Materialize(rng);
  if (projection_) projection_->Materialize(rng);
}

void ResidualBlock::CollectParameters(const std::string& prefix,
                                      std::vector<NamedParameter>& out) {
  first_->CollectParameters(prefix + ".unit1", out);
  second_->CollectParameters(prefix + ".unit2", out);
  if (projection_) projection_->CollectParameters(prefix + ".shortcut", out);
}

void ResidualBlock::CollectBuffers(const std::string& prefix,
                                   std::vector<NamedBuffer>& out) {
  first_->CollectBuffers(prefix + ".unit1", out);
  second_->CollectBuffers(prefix + ".unit2", out);
  if (projection_) projection_->CollectBuffers(prefix + ".shortcut", out);
}

void ResidualBlock::SetMode(Mode mode) {
  first_->SetMode(mode);
  second_->SetMode(mode);
  if (projection_) projection_->SetMode(mode);
}

}  // namespace artnet
