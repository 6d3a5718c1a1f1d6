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

#include "artnet_cli/verify.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <sstream>

#include "artnet/architectures.h"
#include "artnet/autodiff.h"
#include "artnet/blocks.h"
#include "artnet/ops.h"
#include "artnet/relation_math.h"

namespace artnet::cli {

namespace {

using relation::FactoredWeights;
using relation::Matrix;
using relation::PatchPair;
using relation::Vector;

Vector RandomVector(int64_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  Vector v(static_cast<size_t>(n));
  for (double& x : v) x = d(rng);
  return v;
}

Matrix RandomMatrix(int64_t r, int64_t c, std::mt19937_64& rng) {
  Matrix m(r, c);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  for (double& x : m.data) x = d(rng);
  return m;
}

struct Trial {
  PatchPair pair;
  FactoredWeights fw;
};

// |x| = |y| <= 8, F <= 6, K <= 4.
Trial RandomTrial(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> patch(1, 8), factors(1, 6), codes(1, 4);
  const int64_t n = patch(rng), f = factors(rng), k = codes(rng);
  Trial t;
  t.pair = {RandomVector(n, rng), RandomVector(n, rng)};
  t.fw = {RandomMatrix(f, n, rng), RandomMatrix(f, n, rng), RandomMatrix(k, f, rng)};
  return t;
}

CheckResult FactoredIdentity(int trials) {
  std::mt19937_64 rng(101);
  CheckResult r{"identity.factored_eq_mapping_unit", true, 0.0, 1e-12, ""};
  for (int i = 0; i < trials; ++i) {
    const Trial t = RandomTrial(rng);
    const Vector a = relation::FactoredCode(t.pair, t.fw);
    const Vector b = relation::MappingUnitCode(t.pair, t.fw.Expand());
    for (size_t k = 0; k < a.size(); ++k) r.max_error = std::max(r.max_error, std::abs(a[k] - b[k]));
  }
  r.passed = r.max_error <= r.tolerance;
  r.detail = "trials=" + std::to_string(trials);
  return r;
}

CheckResult EnergyIdentity(int trials, bool inject_fault) {
  std::mt19937_64 rng(102);
  CheckResult r{"identity.energy_eq_2factored_plus_quadratic", true, 0.0, 1e-12, ""};
  for (int i = 0; i < trials; ++i) {
    const Trial t = RandomTrial(rng);
    Vector e = relation::EnergyCode(t.pair, t.fw);
    if (inject_fault) e[0] += 1e-6;
    const Vector f = relation::FactoredCode(t.pair, t.fw);
    const Vector q = relation::QuadraticTerms(t.pair, t.fw);
    for (size_t k = 0; k < e.size(); ++k) {
      r.max_error = std::max(r.max_error, std::abs(e[k] - (2.0 * f[k] + q[k])));
    }
  }
  r.passed = r.max_error <= r.tolerance;
  r.detail = "trials=" + std::to_string(trials) + (inject_fault ? " fault=injected" : "");
  return r;
}

CheckResult PhaseResponse() {
  CheckResult r{"identity.phase_response_alpha_squared", true, 0.0, 1e-12, ""};
  const FactoredWeights q = relation::QuadratureWeights(0.125, 16);
  std::vector<double> shifts;
  for (int i = 0; i < 32; ++i) shifts.push_back(-4.0 + 8.0 * i / 32);
  const auto base = relation::PhaseResponseCurve(0.125, 1.0, shifts, q);
  const auto argmax = std::max_element(base.begin(), base.end()) - base.begin();
  for (double alpha : {0.5, 2.0, 3.0, 7.5}) {
    const auto scaled = relation::PhaseResponseCurve(0.125, alpha, shifts, q);
    for (size_t i = 0; i < base.size(); ++i) {
      const double rel = std::abs(scaled[i] - alpha * alpha * base[i]) /
                         std::max(1.0, std::abs(scaled[i]));
      r.max_error = std::max(r.max_error, rel);
    }
    if (std::max_element(scaled.begin(), scaled.end()) - scaled.begin() != argmax) {
      r.passed = false;
      r.detail = "argmax moved at alpha=" + std::to_string(alpha);
    }
  }
  r.passed = r.passed && r.max_error <= r.tolerance;
  return r;
}

ConvSpec Spec(int k, int t, int stride, int64_t c, int sp, int tp) {
  ConvSpec s;
  s.kernel = k;
  s.temporal_kernel = t;
  s.spatial_stride = stride;
  s.temporal_stride = stride;
  s.out_channels = c;
  s.spatial_pad = sp;
  s.temporal_pad = tp;
  return s;
}

CheckResult FromGrad(const GradCheckReport& g, const GradCheckOptions& o) {
  return {"grad." + g.op_name, g.passed, g.max_rel_error, o.rel_threshold,
          "max_abs_error=" + std::to_string(g.max_abs_error)};
}

void GradChecks(uint64_t seed, std::vector<CheckResult>& out) {
  const GradCheckOptions o;
  auto add = [&](const GradCheckReport& g) { out.push_back(FromGrad(g, o)); };

  const ConvSpec c3 = Spec(3, 3, 2, 3, 1, 1);
  add(GradCheck("conv3d",
                [c3](std::span<const Var> in) { return Conv3d(in[0], in[1], in[2], c3); },
                {{1, 2, 4, 5, 5}, c3.WeightShape(2), {3}}, seed));
  const ConvSpec c2 = Spec(3, 1, 1, 2, 1, 0);
  add(GradCheck("conv2d_frames",
                [c2](std::span<const Var> in) { return Conv2dFrames(in[0], in[1], in[2], c2); },
                {{2, 2, 3, 4, 4}, c2.WeightShape(2), {2}}, seed + 1));
  add(GradCheck("square", [](std::span<const Var> in) { return Square(in[0]); }, {{2, 3}},
                seed + 2));
  add(GradCheck("mul_add",
                [](std::span<const Var> in) { return Add(Mul(in[0], in[1]), in[1]); },
                {{3, 4}, {3, 4}}, seed + 3));
  {
    // Inputs at least 0.1 away from the kink.
    std::mt19937_64 rng(seed + 4);
    std::uniform_real_distribution<double> mag(0.1, 1.0);
    std::bernoulli_distribution sign(0.5);
    Tensor x({4, 5});
    for (double& v : x.data()) v = sign(rng) ? mag(rng) : -mag(rng);
    add(GradCheck("relu", [](std::span<const Var> in) { return Relu(in[0]); }, {{4, 5}},
                  seed + 4, o, {x}));
  }
  add(GradCheck("cross_channel_pool",
                [](std::span<const Var> in) { return CrossChannelPool(in[0], 2, 0.5); },
                {{2, 4, 2, 2, 2}}, seed + 5));
  add(GradCheck("concat_channels",
                [](std::span<const Var> in) { return ConcatChannels(in[0], in[1]); },
                {{2, 2, 3}, {2, 1, 3}}, seed + 6));
  add(GradCheck("batch_norm",
                [](std::span<const Var> in) {
                  BatchNormState st = BatchNormState::Create(3);
                  st.gamma = in[1];
                  st.beta = in[2];
                  return BatchNorm(in[0], st);
                },
                {{2, 3, 2, 2, 2}, {3}, {3}}, seed + 7));
  add(GradCheck("global_avg_pool",
                [](std::span<const Var> in) { return GlobalAvgPool(in[0]); },
                {{2, 3, 2, 2, 2}}, seed + 8));
  add(GradCheck("fully_connected",
                [](std::span<const Var> in) { return FullyConnected(in[0], in[1], in[2]); },
                {{3, 4}, {5, 4}, {5}}, seed + 9));
  const std::vector<int> labels{1, 0, 4};
  add(GradCheck("softmax_cross_entropy",
                [&labels](std::span<const Var> in) { return SoftmaxCrossEntropy(in[0], labels); },
                {{3, 5}}, seed + 10));
  add(GradCheck("dropout",
                [](std::span<const Var> in) {
                  std::mt19937_64 rng(7);
                  return Dropout(in[0], 0.2, Mode::kTrain, rng);
                },
                {{4, 6}}, seed + 11));
  add(GradCheck("mean_of",
                [](std::span<const Var> in) { return MeanOf(in); }, {{2, 3}, {2, 3}},
                seed + 12));

  SmartBlock block(SmartBlockConfig::Default(2, Spec(3, 3, 1, 4, 1, 1)));
  std::mt19937_64 rng(seed + 13);
  block.Materialize(rng);
  const Shape w_app = block.appearance_conv().weight().shape();
  const Shape w_rel = block.relation().conv().weight().shape();
  add(GradCheck("smart_block",
                [&block](std::span<const Var> in) {
                  block.appearance_conv().weight() = in[1];
                  block.relation().conv().weight() = in[2];
                  return block.Forward(in[0], {});
                },
                {{1, 2, 3, 5, 5}, w_app, w_rel}, seed + 13));
}

void Neutralize(BatchNormLayer& bn) {
  BatchNormState& st = bn.state();
  st.mode = Mode::kEval;
  st.epsilon = 0.0;
  st.running_mean.Fill(0.0);
  st.running_var.Fill(1.0);
  st.gamma.mutable_value().Fill(1.0);
  st.beta.mutable_value().Fill(0.0);
}

// A two-frame kernel covering a k x k volume is one receptive field; with BN
// neutralized the branch output is the energy code with wz = [0.5, 0.5].
CheckResult RelationBranchOracle(int trials) {
  CheckResult r{"relation_branch.energy_code", true, 0.0, 1e-10, ""};
  std::mt19937_64 rng(103);
  for (int k : {2, 3}) {
    const int64_t n = k * k;
    RelationBranchConfig cfg;
    cfg.in_channels = 1;
    cfg.conv = Spec(k, 2, 1, 2, 0, 0);
    RelationBranch branch(cfg);
    branch.Materialize(rng);
    Neutralize(branch.hidden_bn());
    Neutralize(branch.code_bn());
    branch.conv().bias().mutable_value().Fill(0.0);
    FactoredWeights fw = relation::QuadratureWeights(1.0 / static_cast<double>(n), n);
    fw.wz = Matrix(1, 2, 0.5);
    Tensor& w = branch.conv().weight().mutable_value();
    for (int64_t f = 0; f < 2; ++f)
      for (int64_t i = 0; i < n; ++i) {
        w.at({f, 0, 0, i / k, i % k}) = fw.wx(f, i);
        w.at({f, 0, 1, i / k, i % k}) = fw.wy(f, i);
      }
    for (int t = 0; t < trials; ++t) {
      PatchPair pair{RandomVector(n, rng), RandomVector(n, rng)};
      Tensor vol({1, 1, 2, k, k});
      for (int64_t i = 0; i < n; ++i) {
        vol.at({0, 0, 0, i / k, i % k}) = pair.x[i];
        vol.at({0, 0, 1, i / k, i % k}) = pair.y[i];
      }
      const double got = branch.Forward(Var(vol), {}).value().item();
      r.max_error = std::max(r.max_error, std::abs(got - relation::EnergyCode(pair, fw)[0]));
    }
  }
  r.passed = r.max_error <= r.tolerance;
  return r;
}

void ShapeChecks(std::vector<CheckResult>& out) {
  static const std::vector<std::string> kColumn = {"56 x 56 x 8", "56 x 56 x 8",
                                                   "28 x 28 x 4", "14 x 14 x 2",
                                                   "7 x 7 x 1",   "1 x 1 x 1"};
  for (const auto& name : ArchitectureNames()) {
    CheckResult r{"shapes." + name, true, 0.0, 0.0, ""};
    const auto trace = InferShapes(Build(name, 400), {1, 3, 16, 112, 112});
    int mismatches = 0;
    for (size_t i = 0; i < kColumn.size(); ++i) {
      const std::string got = i < trace.size() ? FormatOutputSize(trace[i].output_shape) : "";
      if (got != kColumn[i]) ++mismatches;
    }
    r.max_error = mismatches;
    r.passed = mismatches == 0 && trace.size() == kColumn.size();
    r.detail = "layers=" + std::to_string(trace.size());
    out.push_back(r);
  }
}

void CountChecks(std::vector<CheckResult>& out) {
  const CountingConventions pinned = PinnedConventions();
  for (const auto& ref : ReferenceTable()) {
    const ModelStats s = Analyze(Build(ref.arch, 400), pinned);
    const double dp = std::abs(s.params_millions / ref.params_millions - 1.0);
    const double df = std::abs(s.flops_giga / ref.flops_giga - 1.0);
    std::ostringstream d;
    d.precision(4);
    d << "params_m=" << s.params_millions << " flops_g=" << s.flops_giga
      << " conventions=" << pinned.ToString();
    out.push_back({"params." + ref.arch, dp <= 0.02, dp, 0.02, d.str()});
    out.push_back({"flops." + ref.arch, df <= 0.05, df, 0.05, d.str()});
  }
}

}  // namespace

std::vector<CheckResult> RunVerifySuite(const VerifyOptions& options) {
  const int trials = options.strict ? 1000 : 100;
  std::vector<CheckResult> out;
  out.push_back(FactoredIdentity(trials));
  out.push_back(EnergyIdentity(trials, options.inject_fault));
  out.push_back(PhaseResponse());
  GradChecks(200, out);
  if (options.strict) {
    GradChecks(300, out);
    GradChecks(400, out);
  }
  out.push_back(RelationBranchOracle(options.strict ? 50 : 10));
  ShapeChecks(out);
  CountChecks(out);
  return out;
}

bool PrintVerifyReport(const std::vector<CheckResult>& results, std::ostream& out) {
  int failed = 0;
  for (const auto& r : results) {
    failed += !r.passed;
    out << "check=" << r.name << " status=" << (r.passed ? "pass" : "FAIL")
        << " max_error=" << r.max_error << " tolerance=" << r.tolerance;
    if (!r.detail.empty()) out << " " << r.detail;
    out << "\n";
  }
  out << "checks=" << results.size() << " passed=" << results.size() - failed
      << " failed=" << failed << "\n";
  return failed == 0;
}

}  // namespace artnet::cli
