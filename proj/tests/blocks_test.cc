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

#include <gtest/gtest.h>

#include <random>

#include "artnet/error.h"
#include "artnet/relation_math.h"
#include "test_util.h"

namespace artnet {
namespace {

using testing::RandomTensor;

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

void Neutralize(BatchNormLayer& bn) {
  BatchNormState& st = bn.state();
  st.mode = Mode::kEval;
  st.epsilon = 0.0;
  st.running_mean.Fill(0.0);
  st.running_var.Fill(1.0);
  st.gamma.mutable_value().Fill(1.0);
  st.beta.mutable_value().Fill(0.0);
}

TEST(SmartBlockTest, StemShape) {
  SmartBlockConfig cfg = SmartBlockConfig::Default(3, Spec(7, 3, 2, 64, 3, 1));
  SmartBlock block(cfg);
  EXPECT_EQ(block.OutputShape({1, 3, 16, 112, 112}), (Shape{1, 64, 8, 56, 56}));
  std::mt19937_64 rng(1);
  block.Materialize(rng);
  block.SetMode(Mode::kEval);
  Var h = block.Forward(Var(RandomTensor({1, 3, 16, 112, 112}, rng)), {});
  EXPECT_EQ(h.shape(), (Shape{1, 64, 8, 56, 56}));
}

TEST(SmartBlockTest, DefaultConfig) {
  SmartBlockConfig cfg = SmartBlockConfig::Default(64, Spec(3, 3, 1, 128, 1, 1));
  EXPECT_EQ(cfg.appearance_out, 128);
  EXPECT_EQ(cfg.relation_hidden, 128);
  EXPECT_EQ(cfg.relation_codes, 64);
  EXPECT_EQ(cfg.fused_out, 128);
  EXPECT_NO_THROW(cfg.Validate());
  EXPECT_EQ(cfg.AppearanceSpec().temporal_kernel, 1);
  EXPECT_EQ(cfg.Relation().codes(), 64);
}

TEST(SmartBlockTest, InvalidConfigsRejected) {
  const SmartBlockConfig good = SmartBlockConfig::Default(4, Spec(3, 3, 1, 8, 1, 1));
  SmartBlockConfig c = good;
  c.relation_hidden = 6;
  EXPECT_THROW(c.Validate(), ConfigError);
  c = good;
  c.relation_codes = 3;
  EXPECT_THROW(c.Validate(), ConfigError);
  c = good;
  c.fused_out = 4;
  EXPECT_THROW(c.Validate(), ConfigError);
  c = good;
  c.pool_weight = 1.0;
  EXPECT_THROW(c.Validate(), ConfigError);
  c = good;
  c.conv.temporal_pad = 0;
  EXPECT_THROW(SmartBlock{c}, ConfigError);
}

TEST(SmartBlockTest, RandomizedShapeContract) {
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<int> odd(0, 2), stride(1, 2), ch(1, 3), ext(0, 4);
  for (int trial = 0; trial < 25; ++trial) {
    const int k = 2 * odd(rng) + 1, t = 2 * odd(rng) + 1;
    std::uniform_int_distribution<int> pad(0, k / 2);
    ConvSpec s = Spec(k, t, stride(rng), 2 * ch(rng), pad(rng), (t - 1) / 2);
    const int64_t c_in = ch(rng);
    SmartBlock block(SmartBlockConfig::Default(c_in, s));
    Shape in{1 + trial % 2, c_in, 1 + ext(rng), k + ext(rng), k + ext(rng)};
    block.Materialize(rng);
    Var h = block.Forward(Var(RandomTensor(in, rng)), {});
    EXPECT_EQ(h.shape(), block.OutputShape(in)) << "trial " << trial;
    for (double v : h.value().data()) EXPECT_GE(v, 0.0);
  }
}

TEST(SmartBlockTest, ZeroRelationColumnsLeavesAppearancePipeline) {
  std::mt19937_64 rng(3);
  SmartBlock block(SmartBlockConfig::Default(2, Spec(3, 3, 1, 4, 1, 1)));
  block.Materialize(rng);
  // Non-trivial reduction bias and BN affine so the check has teeth.
  block.reduce_conv().bias().mutable_value() = RandomTensor({4}, rng);
  BatchNormState& rbn = block.reduce_bn().state();
  rbn.gamma.mutable_value() = RandomTensor({4}, rng, 0.5, 1.5);
  rbn.beta.mutable_value() = RandomTensor({4}, rng);
  Tensor& w = block.reduce_conv().weight().mutable_value();  // [4, 4 + 2, 1, 1, 1]
  for (int64_t o = 0; o < 4; ++o)
    for (int64_t c = 4; c < 6; ++c) w.at({o, c, 0, 0, 0}) = 0.0;

  Tensor x = RandomTensor({2, 2, 3, 5, 5}, rng);
  BatchNormState bn_copy = rbn;
  Var h = block.Forward(Var(x), {});

  Tensor f = block.AppearanceForward(Var(x)).value();
  Tensor w_app = SliceChannels(w, 0, 4);
  Tensor b = block.reduce_conv().bias().value();
  ConvSpec pw = Spec(1, 1, 1, 4, 0, 0);
  Tensor expected =
      Relu(BatchNorm(Var(Conv3dForward(f, w_app, &b, pw)), bn_copy)).value();
  EXPECT_LE(MaxAbsDiff(h.value(), expected), 1e-12);
}

TEST(SmartBlockTest, GradCheckThroughBlock) {
  SmartBlock block(SmartBlockConfig::Default(2, Spec(3, 3, 1, 4, 1, 1)));
  std::mt19937_64 rng(4);
  block.Materialize(rng);
  const Shape w_app = block.appearance_conv().weight().shape();
  const Shape w_rel = block.relation().conv().weight().shape();
  auto fn = [&block](std::span<const Var> in) {
    block.appearance_conv().weight() = in[1];
    block.relation().conv().weight() = in[2];
    return block.Forward(in[0], {});
  };
  GradCheckReport r = GradCheck("smart_block", fn, {{1, 2, 3, 5, 5}, w_app, w_rel}, 5);
  EXPECT_TRUE(r.passed) << r.max_rel_error << " " << r.max_abs_error;
}

TEST(RelationBranchTest, Shapes) {
  RelationBranchConfig cfg;
  cfg.in_channels = 64;
  cfg.conv = Spec(3, 3, 1, 128, 1, 1);
  RelationBranch branch(cfg);
  EXPECT_EQ(branch.out_channels(), 64);
  EXPECT_EQ(branch.OutputShape({2, 64, 8, 28, 28}), (Shape{2, 64, 8, 28, 28}));

  RelationBranchConfig small = cfg;
  small.in_channels = 4;
  small.conv.out_channels = 6;
  RelationBranch b2(small);
  std::mt19937_64 rng(6);
  b2.Materialize(rng);
  EXPECT_EQ(b2.Forward(Var(RandomTensor({2, 4, 4, 6, 6}, rng)), {}).shape(),
            (Shape{2, 3, 4, 6, 6}));
  small.conv.out_channels = 5;
  EXPECT_THROW(RelationBranch{small}, ConfigError);
}

TEST(RelationBranchTest, ZeroInputGivesZero) {
  RelationBranchConfig cfg;
  cfg.in_channels = 3;
  cfg.conv = Spec(3, 3, 1, 4, 1, 1);
  RelationBranch branch(cfg);
  std::mt19937_64 rng(7);
  branch.Materialize(rng);
  Var z = branch.Forward(Var(Tensor::Zeros({2, 3, 4, 5, 5})), {});
  for (double v : z.value().data()) EXPECT_EQ(v, 0.0);
}

TEST(RelationBranchTest, ReproducesEnergyCodeAtOneLocation) {
  // Two 1-channel frames of k x k pixels; a 2-frame kernel sees the whole
  // volume, so the single output is one receptive field. Hidden map f is
  // wx_f . x + wy_f . y (frame 0 is x, frame 1 is y); pooling sums pairs
  // with weight 0.5, i.e. wz = [0.5, 0.5].
  std::mt19937_64 rng(8);
  for (int k : {1, 2, 3, 4}) {
    const int64_t n = k * k;
    RelationBranchConfig cfg;
    cfg.in_channels = 1;
    cfg.conv = Spec(k, 2, 1, 2, 0, 0);
    RelationBranch branch(cfg);
    branch.Materialize(rng);
    Neutralize(branch.hidden_bn());
    Neutralize(branch.code_bn());
    branch.conv().bias().mutable_value().Fill(0.0);

    relation::FactoredWeights fw{relation::Matrix(2, n), relation::Matrix(2, n),
                                 relation::Matrix(1, 2, 0.5)};
    if (k >= 2) {
      // Frozen quadrature-style rows along the flattened patch.
      relation::FactoredWeights q = relation::QuadratureWeights(1.0 / n, n);
      fw.wx = q.wx;
      fw.wy = q.wy;
    } else {
      fw.wx.data = {0.7, -1.3};
      fw.wy.data = {0.4, 2.1};
    }
    Tensor& w = branch.conv().weight().mutable_value();  // [2, 1, 2, k, k]
    for (int64_t f = 0; f < 2; ++f)
      for (int64_t i = 0; i < n; ++i) {
        w.at({f, 0, 0, i / k, i % k}) = fw.wx(f, i);
        w.at({f, 0, 1, i / k, i % k}) = fw.wy(f, i);
      }

    for (int trial = 0; trial < 10; ++trial) {
      relation::PatchPair pair{relation::Vector(n), relation::Vector(n)};
      std::uniform_real_distribution<double> d(-1, 1);
      for (double& v : pair.x) v = d(rng);
      if (trial % 2 == 0) {
        for (int64_t i = 0; i < n; ++i) pair.y[i] = pair.x[(i + n - 1) % n];
      } else {
        for (double& v : pair.y) v = d(rng);
      }
      Tensor vol({1, 1, 2, k, k});
      for (int64_t i = 0; i < n; ++i) {
        vol.at({0, 0, 0, i / k, i % k}) = pair.x[i];
        vol.at({0, 0, 1, i / k, i % k}) = pair.y[i];
      }
      Var z = branch.Forward(Var(vol), {});
      ASSERT_EQ(z.shape(), (Shape{1, 1, 1, 1, 1}));
      EXPECT_NEAR(z.value().item(), relation::EnergyCode(pair, fw)[0], 1e-10);
    }
  }
}

TEST(ResidualBlockTest, ZeroPathGivesRelu) {
  ResidualBlockSpec spec;
  spec.in_channels = 3;
  spec.channels = 3;
  ResidualBlock block(spec);
  EXPECT_FALSE(block.has_projection());
  std::mt19937_64 rng(9);
  block.Materialize(rng);
  auto& unit2 = dynamic_cast<ConvBnUnit&>(block.second());
  unit2.conv().weight().mutable_value().Fill(0.0);
  unit2.conv().bias().mutable_value().Fill(0.0);
  Tensor x = RandomTensor({2, 3, 4, 5, 5}, rng);
  Var y = block.Forward(Var(x), {});
  Tensor expected = x;
  for (double& v : expected.data()) v = v > 0 ? v : 0.0;
  EXPECT_EQ(y.value().vec(), expected.vec());
}

TEST(ResidualBlockTest, DownsampleShapes) {
  ResidualBlockSpec spec;
  spec.in_channels = 64;
  spec.channels = 128;
  spec.downsample = true;
  ResidualBlock block(spec);
  EXPECT_TRUE(block.has_projection());
  EXPECT_EQ(block.OutputShape({1, 64, 8, 56, 56}), (Shape{1, 128, 4, 28, 28}));

  spec.second = UnitKind::kSmart;
  EXPECT_EQ(ResidualBlock(spec).OutputShape({1, 64, 8, 56, 56}),
            (Shape{1, 128, 4, 28, 28}));
  spec.first = spec.second = UnitKind::kConv2d;
  spec.temporal_kernel = 1;
  EXPECT_EQ(ResidualBlock(spec).OutputShape({1, 64, 8, 56, 56}),
            (Shape{1, 128, 4, 28, 28}));
}

TEST(ResidualBlockTest, UnitKinds) {
  ResidualBlockSpec spec;
  spec.in_channels = 4;
  spec.channels = 4;
  spec.second = UnitKind::kSmart;
  ResidualBlock smart(spec);
  EXPECT_NE(dynamic_cast<SmartBlock*>(&smart.second()), nullptr);
  EXPECT_NE(dynamic_cast<ConvBnUnit*>(&smart.first()), nullptr);
  spec.second = UnitKind::kRelation;
  ResidualBlock rel(spec);
  auto* branch = dynamic_cast<RelationBranch*>(&rel.second());
  ASSERT_NE(branch, nullptr);
  EXPECT_EQ(branch->config().hidden(), 8);
  EXPECT_EQ(branch->out_channels(), 4);
  EXPECT_STREQ(UnitKindName(UnitKind::kSmart), "smart");
}

TEST(ResidualBlockTest, ForwardNonNegativeAllKinds) {
  std::mt19937_64 rng(10);
  for (UnitKind kind :
       {UnitKind::kConv3d, UnitKind::kConv2d, UnitKind::kSmart, UnitKind::kRelation}) {
    ResidualBlockSpec spec;
    spec.in_channels = 2;
    spec.channels = 4;
    spec.downsample = true;
    spec.second = kind;
    if (kind == UnitKind::kConv2d) {
      spec.first = kind;
      spec.temporal_kernel = 1;
    }
    ResidualBlock block(spec);
    block.Materialize(rng);
    Shape in{2, 2, 4, 6, 6};
    Var y = block.Forward(Var(RandomTensor(in, rng)), {});
    EXPECT_EQ(y.shape(), block.OutputShape(in)) << UnitKindName(kind);
    for (double v : y.value().data()) EXPECT_GE(v, 0.0);
  }
}

TEST(ResidualBlockTest, GradCheckThroughBlock) {
  ResidualBlockSpec spec;
  spec.in_channels = 2;
  spec.channels = 4;
  spec.downsample = true;
  spec.second = UnitKind::kSmart;
  ResidualBlock block(spec);
  std::mt19937_64 rng(11);
  block.Materialize(rng);
  auto& unit1 = dynamic_cast<ConvBnUnit&>(block.first());
  const Shape w1 = unit1.conv().weight().shape();
  auto fn = [&block, &unit1](std::span<const Var> in) {
    unit1.conv().weight() = in[1];
    return block.Forward(in[0], {});
  };
  GradCheckReport r = GradCheck("residual_block", fn, {{2, 2, 4, 6, 6}, w1}, 12);
  EXPECT_TRUE(r.passed) << r.max_rel_error << " " << r.max_abs_error;
}

TEST(HeNormalTest, Statistics) {
  std::mt19937_64 rng(12);
  Tensor w = HeNormal({200, 50, 1, 3, 3}, 450, rng);
  const double mean = ReduceAll(ReduceOp::kMean, w);
  const double var = ReduceAll(ReduceOp::kMean, Square(w)) - mean * mean;
  EXPECT_NEAR(mean, 0.0, 0.003);
  EXPECT_NEAR(var, 2.0 / 450.0, 2.0 / 450.0 * 0.03);
}

}  // namespace
}  // namespace artnet
