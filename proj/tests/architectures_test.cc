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

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "artnet/error.h"
#include "test_util.h"

namespace artnet {
namespace {

const Shape kInput{1, 3, 16, 112, 112};

TEST(ArchitecturesTest, OutputSizeColumn) {
  const std::vector<std::pair<std::string, std::string>> expected = {
      {"conv1", "56 x 56 x 8"},  {"conv2_x", "56 x 56 x 8"},
      {"conv3_x", "28 x 28 x 4"}, {"conv4_x", "14 x 14 x 2"},
      {"conv5_x", "7 x 7 x 1"},   {"pool", "1 x 1 x 1"}};
  const std::vector<int64_t> channels = {64, 64, 128, 256, 512, 512};
  for (const std::string& name : ArchitectureNames()) {
    Network net = Build(name, 400);
    auto trace = InferShapes(net, kInput);
    ASSERT_EQ(trace.size(), expected.size()) << name;
    for (size_t i = 0; i < trace.size(); ++i) {
      EXPECT_EQ(trace[i].layer, expected[i].first);
      EXPECT_EQ(FormatOutputSize(trace[i].output_shape), expected[i].second)
          << name << " " << trace[i].layer;
      EXPECT_EQ(trace[i].output_shape[1], channels[i]) << name;
    }
  }
}

TEST(ArchitecturesTest, HalvedInputHalvesExtents) {
  Network net = Build("c3d_r18", 400);
  auto full = InferShapes(net, kInput);
  auto half = InferShapes(net, {1, 3, 8, 56, 56});
  for (size_t i = 0; i + 1 < full.size(); ++i) {
    for (int axis = 2; axis < 5; ++axis) {
      const int64_t f = full[i].output_shape[axis];
      // ceil(f / 2) from the stride-2 extent formula.
      EXPECT_EQ(half[i].output_shape[axis], (f + 1) / 2)
          << full[i].layer << " axis " << axis;
    }
  }
}

TEST(ArchitecturesTest, C2dTraceEqualsC3dTrace) {
  auto a = InferShapes(Build("c2d_r18", 400), kInput);
  auto b = InferShapes(Build("c3d_r18", 400), kInput);
  ASSERT_EQ(a.size(), b.size());
  for (size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].output_shape, b[i].output_shape);
}

TEST(ArchitecturesTest, UnitCounts) {
  struct Row {
    std::string name;
    int conv3d, conv2d, smart, relation;
  };
  // 17 convolution roles: stem + 4 stages x 2 blocks x 2 units.
  const std::vector<Row> rows = {
      {"c2d_r18", 0, 17, 0, 0},      {"c3d_r18", 17, 0, 0, 0},
      {"artnet_r18_s", 16, 0, 1, 0}, {"artnet_r18_d", 10, 0, 7, 0},
      {"relation_r18_s", 16, 0, 0, 1}, {"relation_r18_d", 10, 0, 0, 7}};
  for (const Row& r : rows) {
    UnitCounts c = Build(r.name, 400).CountUnits();
    EXPECT_EQ(c.conv3d, r.conv3d) << r.name;
    EXPECT_EQ(c.conv2d, r.conv2d) << r.name;
    EXPECT_EQ(c.smart, r.smart) << r.name;
    EXPECT_EQ(c.relation, r.relation) << r.name;
  }
  // conv5_x stays 3D in the deep variant.
  Network d = Build("artnet_r18_d", 400);
  for (size_t b = d.stage_ends()[2]; b < d.blocks().size(); ++b) {
    EXPECT_EQ(d.blocks()[b]->spec().second, UnitKind::kConv3d);
  }
}

TEST(ArchitecturesTest, StemAndHead) {
  ArchSpec c3d = MakeArchSpec("c3d_r18", 400);
  EXPECT_EQ(c3d.stem.kind, UnitKind::kConv3d);
  EXPECT_EQ(c3d.stem.kernel, 7);
  EXPECT_EQ(c3d.stem.temporal_kernel, 3);
  EXPECT_EQ(c3d.stem.spatial_stride, 2);
  EXPECT_EQ(c3d.stem.temporal_stride, 2);
  EXPECT_EQ(c3d.head.classes, 400);
  EXPECT_EQ(MakeArchSpec("artnet_r18_s", 400).stem.kind, UnitKind::kSmart);
  EXPECT_EQ(MakeArchSpec("c2d_r18", 400).stem.temporal_kernel, 1);
  auto layers = Build("c3d_r18", 400).Describe(kInput);
  EXPECT_EQ(layers.back().name, "fc");
  EXPECT_EQ(layers.back().output_shape, (Shape{1, 400}));
}

TEST(ArchitecturesTest, BadNamesAndOptions) {
  try {
    Build("resnet50", 400);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("artnet_r18_d"), std::string::npos);
  }
  EXPECT_THROW(Build("c3d_r18", 1), ConfigError);
  ArchOptions bad;
  bad.num_stages = 5;
  EXPECT_THROW(Build("c3d_r18", 4, bad), ConfigError);
}

// Independent hand counts for one layer group, pinned convention: conv
// biases feeding BN are not counted, BN counts gamma and beta.
struct Count {
  int64_t params = 0;
  double flops = 0;
};

Count SumPrefix(const ModelStats& s, const std::string& prefix) {
  Count c;
  for (const auto& l : s.per_layer) {
    if (l.name.rfind(prefix, 0) == 0) {
      c.params += l.params;
      c.flops += l.flops;
    }
  }
  return c;
}

int64_t ConvW(int64_t k, int64_t t, int64_t cin, int64_t cout) {
  return k * k * t * cin * cout;
}

TEST(AnalyzeTest, HandCountOracle) {
  const CountingConventions pinned = PinnedConventions();
  const double p1 = 8.0 * 56 * 56;  // positions after the stem and in conv2_x
  const double p3 = 4.0 * 28 * 28;

  ModelStats c3d = Analyze(Build("c3d_r18", 400), pinned);
  Count stem = SumPrefix(c3d, "conv1.");
  EXPECT_EQ(stem.params, ConvW(7, 3, 3, 64) + 2 * 64);
  EXPECT_DOUBLE_EQ(stem.flops, p1 * ConvW(7, 3, 3, 64));

  Count b21 = SumPrefix(c3d, "conv2_1.");
  EXPECT_EQ(b21.params, 2 * (ConvW(3, 3, 64, 64) + 128));
  EXPECT_DOUBLE_EQ(b21.flops, 2 * p1 * ConvW(3, 3, 64, 64));

  Count b31 = SumPrefix(c3d, "conv3_1.");
  EXPECT_EQ(b31.params, ConvW(3, 3, 64, 128) + ConvW(3, 3, 128, 128) +
                            ConvW(1, 1, 64, 128) + 3 * 256);
  EXPECT_DOUBLE_EQ(b31.flops, p3 * (ConvW(3, 3, 64, 128) + ConvW(3, 3, 128, 128) +
                                    ConvW(1, 1, 64, 128)));

  Count fc = SumPrefix(c3d, "fc");
  EXPECT_EQ(fc.params, 512 * 400 + 400);
  EXPECT_DOUBLE_EQ(fc.flops, 512.0 * 400);

  // SMART stem: appearance 7x7x1, relation 7x7x3 with hidden + code BN,
  // reduction 1x1x1 over 64 + 32 channels (its bias feeds BN).
  ModelStats art = Analyze(Build("artnet_r18_s", 400), pinned);
  Count smart = SumPrefix(art, "conv1.");
  EXPECT_EQ(smart.params, ConvW(7, 1, 3, 64) + 128 + ConvW(7, 3, 3, 64) + 128 + 64 +
                              ConvW(1, 1, 96, 64) + 128);
  EXPECT_DOUBLE_EQ(smart.flops, p1 * (ConvW(7, 1, 3, 64) + ConvW(7, 3, 3, 64) +
                                      ConvW(1, 1, 96, 64)));

  // Relation unit as the second unit of conv2_1: 128 hidden maps -> 64 codes.
  ModelStats rel = Analyze(Build("relation_r18_d", 400), pinned);
  Count r21 = SumPrefix(rel, "conv2_1.unit2.");
  EXPECT_EQ(r21.params, ConvW(3, 3, 64, 128) + 256 + 128);
  EXPECT_DOUBLE_EQ(r21.flops, p1 * ConvW(3, 3, 64, 128));

  // 2D unit in c2d.
  ModelStats c2d = Analyze(Build("c2d_r18", 400), pinned);
  Count u = SumPrefix(c2d, "conv2_1.unit1.");
  EXPECT_EQ(u.params, ConvW(3, 1, 64, 64) + 128);
  EXPECT_DOUBLE_EQ(u.flops, p1 * ConvW(3, 1, 64, 64));

  // Per-layer entries sum to the totals.
  Count all = SumPrefix(art, "");
  EXPECT_EQ(all.params, art.params);
  EXPECT_DOUBLE_EQ(all.flops, art.flops);
}

TEST(AnalyzeTest, ConventionsChangeCounts) {
  Network net = Build("c3d_r18", 400);
  ModelStats pinned = Analyze(net, PinnedConventions());
  ModelStats doubled = Analyze(net, ParseConventions("mults_and_adds"));
  EXPECT_DOUBLE_EQ(doubled.flops, 2 * pinned.flops);
  ModelStats with_bias = Analyze(net, ParseConventions("with_bias"));
  EXPECT_GT(with_bias.params, pinned.params);
  ModelStats nobn = Analyze(net, ParseConventions("nobn"));
  EXPECT_LT(nobn.params, pinned.params);
  EXPECT_THROW(ParseConventions("macs"), ConfigError);
  EXPECT_EQ(ParseConventions(PinnedConventions().ToString()), PinnedConventions());
}

TEST(AnalyzeTest, CalibrationPicksPinnedConvention) {
  auto ranked = CalibrateConventions();
  ASSERT_EQ(ranked.size(), 8u);
  EXPECT_EQ(ranked.front().conventions, PinnedConventions())
      << ranked.front().conventions.ToString();
}

TEST(AnalyzeTest, MatchesPublishedTotals) {
  for (const ReferenceStats& ref : ReferenceTable()) {
    ModelStats s = Analyze(Build(ref.arch, 400), PinnedConventions());
    EXPECT_LE(std::abs(s.params_millions / ref.params_millions - 1.0), 0.02)
        << ref.arch << " params " << s.params_millions;
    EXPECT_LE(std::abs(s.flops_giga / ref.flops_giga - 1.0), 0.05)
        << ref.arch << " flops " << s.flops_giga;
  }
}

TEST(AnalyzeTest, Monotonicity) {
  auto params = [](const std::string& n) {
    return Analyze(Build(n, 400), PinnedConventions()).params;
  };
  EXPECT_GT(params("artnet_r18_d"), params("artnet_r18_s"));
  EXPECT_GT(params("artnet_r18_s"), params("c3d_r18"));
  EXPECT_GT(params("c3d_r18"), params("c2d_r18"));
}

TEST(NetworkTest, TinyForwardMatchesInferredShapes) {
  ArchOptions opt;
  opt.base_width = 4;
  opt.num_stages = 2;
  opt.in_channels = 1;
  const Shape in{2, 1, 8, 24, 24};
  std::mt19937_64 rng(1);
  for (const std::string& name : ArchitectureNames()) {
    Network net = Build(name, 5, opt);
    net.Materialize(7);
    Var x(testing::RandomTensor(in, rng, 0.0, 1.0));
    ForwardContext ctx{Mode::kTrain, &rng};
    auto trace = InferShapes(net, in);
    Var h = net.stem().Forward(x, ctx);
    EXPECT_EQ(h.shape(), trace[0].output_shape) << name;
    size_t b = 0;
    for (size_t st = 0; st < net.stage_ends().size(); ++st) {
      for (; b < net.stage_ends()[st]; ++b) h = net.blocks()[b]->Forward(h, ctx);
      EXPECT_EQ(h.shape(), trace[st + 1].output_shape) << name;
    }
    Var logits = net.Forward(x, ctx);
    EXPECT_EQ(logits.shape(), (Shape{2, 5})) << name;
  }
}

TEST(NetworkTest, MaterializeIsSeeded) {
  ArchOptions opt;
  opt.base_width = 4;
  opt.num_stages = 1;
  Network a = Build("artnet_r18_d", 3, opt), b = Build("artnet_r18_d", 3, opt);
  a.Materialize(11);
  b.Materialize(11);
  auto pa = a.Parameters(), pb = b.Parameters();
  ASSERT_EQ(pa.size(), pb.size());
  for (size_t i = 0; i < pa.size(); ++i) {
    EXPECT_EQ(pa[i].name, pb[i].name);
    EXPECT_EQ(pa[i].var->value().vec(), pb[i].var->value().vec());
  }
  EXPECT_FALSE(Build("c3d_r18", 3, opt).materialized());
}

}  // namespace
}  // namespace artnet
