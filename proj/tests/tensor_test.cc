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

#include "artnet/tensor.h"

#include <gtest/gtest.h>

#include <random>

#include "artnet/error.h"
#include "test_util.h"

namespace artnet {
namespace {

TEST(TensorTest, Zeros) {
  Tensor a = Tensor::Zeros({2, 3});
  EXPECT_EQ(a.size(), 6);
  for (double v : a.data()) EXPECT_EQ(v, 0.0);

  EXPECT_EQ(Tensor::Zeros({1, 1, 1, 1, 1}).size(), 1);
  EXPECT_EQ(Tensor::Zeros({1, 3, 16, 112, 112}).size(), 602112);
}

TEST(TensorTest, RejectsBadShapes) {
  EXPECT_THROW(Tensor::Zeros({0, 3}), ShapeError);
  EXPECT_THROW(Tensor::Zeros({2, -1}), ShapeError);
  EXPECT_THROW(Tensor::Zeros({1, 1, 1, 1, 1, 1}), ShapeError);
  EXPECT_THROW(Tensor(Shape{2, 2}, std::vector<double>{1, 2, 3}), ShapeError);
}

TEST(TensorTest, RowMajorStrides) {
  Tensor t = Tensor::Zeros({2, 3, 4});
  EXPECT_EQ(t.strides(), (std::vector<int64_t>{12, 4, 1}));
  t.at({1, 2, 3}) = 7.0;
  EXPECT_EQ(t[23], 7.0);
}

TEST(TensorTest, Elementwise) {
  Tensor a = Tensor::FromVector({-2, 3});
  EXPECT_EQ(Square(a).vec(), (std::vector<double>{4, 9}));
  EXPECT_EQ(Add(Tensor::FromVector({1, 2}), Tensor::FromVector({3, 4})).vec(),
            (std::vector<double>{4, 6}));
  EXPECT_EQ(Scale(Tensor::FromVector({1, 2}), 0.5).vec(),
            (std::vector<double>{0.5, 1.0}));
  Tensor b = Tensor::FromVector({1, 1});
  EXPECT_EQ(Elementwise(ElementwiseOp::kSub, a, &b).vec(),
            (std::vector<double>{-3, 2}));
  EXPECT_THROW(Add(a, Tensor::FromVector({1, 2, 3})), ShapeError);
  EXPECT_THROW(Elementwise(ElementwiseOp::kMul, a), ShapeError);
}

TEST(TensorTest, Reduce) {
  Tensor m(Shape{2, 2}, {1, 2, 3, 4});
  EXPECT_EQ(Reduce(ReduceOp::kSum, m, {1}).vec(), (std::vector<double>{3, 7}));
  EXPECT_EQ(Reduce(ReduceOp::kSum, m, {1}, true).shape(), (Shape{2, 1}));
  EXPECT_EQ(ReduceAll(ReduceOp::kMean, Tensor::FromVector({2, 4, 6})), 4.0);
  EXPECT_EQ(Reduce(ReduceOp::kMax, Tensor::FromVector({1, 9, 3}), {0}).item(), 9.0);
  EXPECT_EQ(Reduce(ReduceOp::kMax, m, {0}).vec(), (std::vector<double>{3, 4}));
  EXPECT_THROW(Reduce(ReduceOp::kSum, m, {2}), ShapeError);
}

TEST(TensorTest, ConcatChannels) {
  Tensor a = Tensor::Ones({1, 2, 1, 1, 1});
  Tensor b = Tensor::Zeros({1, 3, 1, 1, 1});
  Tensor c = ConcatChannels(a, b);
  EXPECT_EQ(c.shape(), (Shape{1, 5, 1, 1, 1}));
  EXPECT_EQ(c.vec(), (std::vector<double>{1, 1, 0, 0, 0}));
  EXPECT_EQ(ConcatChannels(Tensor::Zeros({2, 64, 8, 7, 7}),
                           Tensor::Zeros({2, 32, 8, 7, 7}))
                .shape()[1],
            96);
  EXPECT_THROW(ConcatChannels(a, Tensor::Zeros({1, 3, 2, 1, 1})), ShapeError);
}

TEST(TensorTest, PropertyRoundTrips) {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> ext(1, 4);
  for (int trial = 0; trial < 50; ++trial) {
    Shape s{ext(rng), ext(rng), ext(rng), ext(rng), ext(rng)};
    Tensor t = testing::RandomTensor(s, rng);

    Tensor flat = t.Reshape({t.size()});
    EXPECT_EQ(flat.Reshape(s).vec(), t.vec());

    EXPECT_EQ(Square(t).vec(), Mul(t, t).vec());

    Shape s2 = s;
    s2[1] = ext(rng);
    Tensor u = testing::RandomTensor(s2, rng);
    Tensor cat = ConcatChannels(t, u);
    EXPECT_EQ(SliceChannels(cat, 0, s[1]).vec(), t.vec());
    EXPECT_EQ(SliceChannels(cat, s[1], s2[1]).vec(), u.vec());
  }
}

TEST(TensorTest, AffinePerChannel) {
  Tensor x = Tensor::Ones({2, 2, 3});
  Tensor y = AffinePerChannel(x, Tensor::FromVector({2, 3}),
                              Tensor::FromVector({1, -1}));
  EXPECT_EQ(y.at({1, 0, 2}), 3.0);
  EXPECT_EQ(y.at({0, 1, 0}), 2.0);
  EXPECT_THROW(AffinePerChannel(x, Tensor::FromVector({1, 2, 3}), Tensor()),
               ShapeError);
}

}  // namespace
}  // namespace artnet
