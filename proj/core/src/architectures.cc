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

#include "artnet/architectures.h"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "artnet/error.h"

namespace artnet {

ConvSpec StemSpec::Conv() const {
  ConvSpec s;
  s.kernel = kernel;
  s.temporal_kernel = temporal_kernel;
  s.spatial_stride = spatial_stride;
  s.temporal_stride = temporal_stride;
  s.out_channels = channels;
  s.spatial_pad = spatial_pad;
  s.temporal_pad = temporal_pad;
  return s;
}

void ArchSpec::Validate() const {
  if (stages.empty()) throw ConfigError(name + ": at least one stage required");
  if (head.classes < 2) throw ConfigError(name + ": need at least 2 classes");
  if (head.dropout < 0.0 || head.dropout >= 1.0) {
    throw ConfigError(name + ": dropout must be in [0, 1)");
  }
  if (input_shape.size() != 5) {
    throw ConfigError(name + ": input shape must be [N, C, T, H, W]");
  }
  for (const StageSpec& s : stages) {
    if (s.repeats < 1 || s.channels < 1) {
      throw ConfigError(name + ": stage " + s.name + " is empty");
    }
  }
}

const std::vector<std::string>& ArchitectureNames() {
  static const std::vector<std::string> names = {
      "c2d_r18",        "c3d_r18",        "relation_r18_s",
      "relation_r18_d", "artnet_r18_s",   "artnet_r18_d"};
  return names;
}

ArchSpec MakeArchSpec(const std::string& name, int64_t classes,
                      const ArchOptions& options) {
  const auto& names = ArchitectureNames();
  if (std::find(names.begin(), names.end(), name) == names.end()) {
    std::string valid;
    for (const auto& n : names) valid += (valid.empty() ? "" : ", ") + n;
    throw ConfigError("unknown architecture '" + name + "'; valid names: " +
                      valid);
  }
  if (options.num_stages < 1 || options.num_stages > 4 ||
      options.base_width < 2 || options.base_width % 2 != 0) {
    throw ConfigError("architecture options: 1..4 stages and an even width");
  }

  const bool per_frame = name == "c2d_r18";
  const bool deep = name.ends_with("_d");
  UnitKind special = UnitKind::kConv3d;
  if (name.starts_with("artnet")) special = UnitKind::kSmart;
  if (name.starts_with("relation")) special = UnitKind::kRelation;

  ArchSpec spec;
  spec.name = name;
  spec.head.classes = classes;
  spec.input_shape = {1, options.in_channels, 16, 112, 112};
  spec.stem.channels = options.base_width;
  spec.stem.kind = per_frame ? UnitKind::kConv2d : special;
  if (per_frame) {
    spec.stem.temporal_kernel = 1;
    spec.stem.temporal_pad = 0;
  }

  static const char* kStageNames[] = {"conv2_x", "conv3_x", "conv4_x",
                                      "conv5_x"};
  for (int i = 0; i < options.num_stages; ++i) {
    StageSpec st;
    st.name = kStageNames[i];
    st.channels = options.base_width << i;
    st.downsample = i > 0;
    st.temporal_kernel = per_frame ? 1 : 3;
    st.first = per_frame ? UnitKind::kConv2d : UnitKind::kConv3d;
    st.second = st.first;
    // The deep variants swap the second unit of each pair in conv2_x to
    // conv4_x; conv5_x stays 3D.
    if (deep && i < 3) st.second = special;
    spec.stages.push_back(st);
  }
  spec.Validate();
  return spec;
}

// Network ----------------------------------------------------------------

Network::Network(ArchSpec spec) : spec_(std::move(spec)) {
  spec_.Validate();
  stem_ = MakeUnit(spec_.stem.kind, spec_.input_shape[1], spec_.stem.Conv(),
                   true);
  int64_t in = spec_.stem.channels;
  for (const StageSpec& st : spec_.stages) {
    for (int r = 0; r < st.repeats; ++r) {
      ResidualBlockSpec b;
      b.first = st.first;
      b.second = st.second;
      b.in_channels = in;
      b.channels = st.channels;
      b.downsample = st.downsample && r == 0;
      b.temporal_kernel = st.temporal_kernel;
      blocks_.push_back(std::make_unique<ResidualBlock>(b));
      in = st.channels;
    }
    stage_end_.push_back(blocks_.size());
  }
}

void Network::Materialize(uint64_t seed) {
  std::mt19937_64 rng(seed);
  stem_->Materialize(rng);
  for (auto& b : blocks_) b->Materialize(rng);
  const int64_t features = spec_.stages.back().channels;
  fc_weight_ = Var(HeNormal({spec_.head.classes, features}, features, rng), true);
  fc_bias_ = Var(Tensor::Zeros({spec_.head.classes}), true);
}

void Network::SetDropout(double p) {
  if (p < 0.0 || p >= 1.0) throw ConfigError("dropout must be in [0, 1)");
  spec_.head.dropout = p;
}

Var Network::Forward(const Var& x, const ForwardContext& ctx) {
  if (!materialized()) throw ContractError(spec_.name + " is not materialized");
  Var h = stem_->Forward(x, ctx);
  for (auto& b : blocks_) h = b->Forward(h, ctx);
  h = GlobalAvgPool(h);
  if (ctx.mode == Mode::kTrain && spec_.head.dropout > 0.0) {
    if (!ctx.rng) throw ContractError("train-mode dropout needs an rng");
    h = Dropout(h, spec_.head.dropout, ctx.mode, *ctx.rng);
  }
  return FullyConnected(h, fc_weight_, fc_bias_);
}

std::vector<NamedParameter> Network::Parameters() {
  std::vector<NamedParameter> out;
  stem_->CollectParameters("stem", out);
  for (size_t i = 0; i < blocks_.size(); ++i) {
    blocks_[i]->CollectParameters("block" + std::to_string(i), out);
  }
  out.push_back({"fc.weight", &fc_weight_});
  out.push_back({"fc.bias", &fc_bias_});
  return out;
}

std::vector<NamedBuffer> Network::Buffers() {
  std::vector<NamedBuffer> out;
  stem_->CollectBuffers("stem", out);
  for (size_t i = 0; i < blocks_.size(); ++i) {
    blocks_[i]->CollectBuffers("block" + std::to_string(i), out);
  }
  return out;
}

void Network::SetMode(Mode mode) {
  stem_->SetMode(mode);
  for (auto& b : blocks_) b->SetMode(mode);
}

std::vector<LayerRecord> Network::Describe(const Shape& input) const {
  Shape s = input;
  s[0] = 1;
  std::vector<LayerRecord> out;
  stem_->Describe("conv1", s, out);
  s = stem_->OutputShape(s);
  size_t block = 0;
  for (size_t st = 0; st < spec_.stages.size(); ++st) {
    for (int r = 0; block < stage_end_[st]; ++block, ++r) {
      const std::string name =
          spec_.stages[st].name.substr(0, 5) + "_" + std::to_string(r + 1);
      blocks_[block]->Describe(name, s, out);
      s = blocks_[block]->OutputShape(s);
    }
  }
  LayerRecord fc;
  fc.name = "fc";
  fc.kind = "fc";
  fc.output_shape = {1, spec_.head.classes};
  fc.weight_params = s[1] * spec_.head.classes;
  fc.bias_params = spec_.head.classes;
  fc.macs = fc.weight_params;
  out.push_back(fc);
  return out;
}

UnitCounts Network::CountUnits() const {
  UnitCounts c;
  auto tally = [&c](UnitKind k) {
    switch (k) {
      case UnitKind::kConv3d: ++c.conv3d; break;
      case UnitKind::kConv2d: ++c.conv2d; break;
      case UnitKind::kSmart: ++c.smart; break;
      case UnitKind::kRelation: ++c.relation; break;
    }
  };
  tally(spec_.stem.kind);
  for (const auto& b : blocks_) {
    tally(b->spec().first);
    tally(b->spec().second);
  }
  return c;
}

Network Build(const std::string& name, int64_t classes,
              const ArchOptions& options) {
  return Network(MakeArchSpec(name, classes, options));
}

std::vector<ShapeTraceEntry> InferShapes(const Network& net, const Shape& input) {
  if (input.size() != 5) {
    throw ShapeError("shape inference needs a rank-5 input, got " +
                     ShapeToString(input));
  }
  if (input[1] != net.spec().input_shape[1]) {
    throw ShapeError(net.spec().name + " expects " +
                     std::to_string(net.spec().input_shape[1]) +
                     " input channels");
  }
  std::vector<ShapeTraceEntry> trace;
  Shape s = net.stem().OutputShape(input);
  trace.push_back({"conv1", s});
  size_t block = 0;
  for (size_t st = 0; st < net.spec().stages.size(); ++st) {
    for (; block < net.stage_ends()[st]; ++block) {
      s = net.blocks()[block]->OutputShape(s);
    }
    trace.push_back({net.spec().stages[st].name, s});
  }
  trace.push_back({"pool", {s[0], s[1], 1, 1, 1}});
  return trace;
}

std::string FormatOutputSize(const Shape& shape) {
  std::ostringstream os;
  os << shape[4] << " x " << shape[3] << " x " << shape[2];
  return os.str();
}

// Analysis ---------------------------------------------------------------

std::string CountingConventions::ToString() const {
  std::string s = flops == FlopConvention::kMacsAsOne ? "macs_as_one"
                                                      : "mults_and_adds";
  s += bias == BiasConvention::kWithBias ? ",with_bias" : ",no_bias_before_bn";
  s += count_bn ? ",bn" : ",nobn";
  return s;
}

CountingConventions ParseConventions(const std::string& text) {
  CountingConventions c = PinnedConventions();
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    if (part.empty()) continue;
    if (part == "macs_as_one") {
      c.flops = FlopConvention::kMacsAsOne;
    } else if (part == "mults_and_adds") {
      c.flops = FlopConvention::kMultsAndAdds;
    } else if (part == "with_bias") {
      c.bias = BiasConvention::kWithBias;
    } else if (part == "no_bias_before_bn") {
      c.bias = BiasConvention::kNoBiasBeforeBn;
    } else if (part == "bn") {
      c.count_bn = true;
    } else if (part == "nobn") {
      c.count_bn = false;
    } else {
      throw ConfigError("unknown counting convention '" + part +
                        "' (macs_as_one, mults_and_adds, with_bias, "
                        "no_bias_before_bn, bn, nobn)");
    }
  }
  return c;
}

CountingConventions PinnedConventions() {
  return {FlopConvention::kMacsAsOne, BiasConvention::kNoBiasBeforeBn, true};
}

ModelStats Analyze(const Network& net, const CountingConventions& conventions,
                   std::optional<Shape> input) {
  const Shape in = input.value_or(net.spec().input_shape);
  ModelStats stats;
  stats.conventions = conventions;
  const double flop_factor =
      conventions.flops == FlopConvention::kMacsAsOne ? 1.0 : 2.0;
  for (const LayerRecord& r : net.Describe(in)) {
    LayerStats ls;
    ls.name = r.name;
    ls.output_shape = r.output_shape;
    ls.params = r.weight_params;
    if (conventions.bias == BiasConvention::kWithBias || !r.bias_before_bn) {
      ls.params += r.bias_params;
    }
    if (conventions.count_bn) ls.params += r.bn_params;
    ls.flops = flop_factor * static_cast<double>(r.macs);
    stats.params += ls.params;
    stats.flops += ls.flops;
    stats.per_layer.push_back(std::move(ls));
  }
  stats.params_millions = static_cast<double>(stats.params) / 1e6;
  stats.flops_giga = stats.flops / 1e9;
  return stats;
}

const std::vector<ReferenceStats>& ReferenceTable() {
  static const std::vector<ReferenceStats> table = {
      {"c3d_r18", 33.37, 19.58},
      {"artnet_r18_s", 33.39, 19.97},
      {"artnet_r18_d", 35.20, 23.70},
  };
  return table;
}

std::optional<ReferenceStats> FindReference(const std::string& arch) {
  for (const auto& r : ReferenceTable()) {
    if (r.arch == arch) return r;
  }
  return std::nullopt;
}

std::vector<CalibrationResult> CalibrateConventions() {
  std::vector<Network> nets;
  for (const auto& ref : ReferenceTable()) nets.push_back(Build(ref.arch, 400));

  std::vector<CalibrationResult> results;
  for (FlopConvention f :
       {FlopConvention::kMacsAsOne, FlopConvention::kMultsAndAdds}) {
    for (BiasConvention b :
         {BiasConvention::kWithBias, BiasConvention::kNoBiasBeforeBn}) {
      for (bool bn : {true, false}) {
        CalibrationResult r{{f, b, bn}, 0.0};
        for (size_t i = 0; i < nets.size(); ++i) {
          const ModelStats s = Analyze(nets[i], r.conventions);
          const ReferenceStats& ref = ReferenceTable()[i];
          r.score += std::abs(s.params_millions / ref.params_millions - 1.0);
          r.score += std::abs(s.flops_giga / ref.flops_giga - 1.0);
        }
        results.push_back(r);
      }
    }
  }
  std::stable_sort(results.begin(), results.end(),
                   [](const CalibrationResult& a, const CalibrationResult& b) {
                     return a.score < b.score;
                   });
  return results;
}

}  // namespace artnet
