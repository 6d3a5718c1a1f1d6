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
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace artnet {

using Shape = std::vector<int64_t>;

/// Number of elements described by `shape` (1 for rank 0).
int64_t NumElements(const Shape& shape);

/// "[1, 3, 16, 112, 112]"
std::string ShapeToString(const Shape& shape);

/// Dense row-major array of doubles, rank 0..5.
///
/// Video tensors use the layout [N, C, T, H, W]; the channel axis is axis 1
/// for every rank >= 2. Elementwise arithmetic only broadcasts scalars and,
/// through the *PerChannel helpers, per-channel vectors.
class Tensor {
 public:
  static constexpr int kMaxRank = 5;

  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  static Tensor Zeros(Shape shape) { return Tensor(std::move(shape), 0.0); }
  static Tensor Ones(Shape shape) { return Tensor(std::move(shape), 1.0); }
  static Tensor Full(Shape shape, double v) { return Tensor(std::move(shape), v); }
  static Tensor ZerosLike(const Tensor& t) { return Tensor(t.shape(), 0.0); }
  /// 1-D tensor holding `values`.
  static Tensor FromVector(std::vector<double> values);

  const Shape& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  int64_t dim(int axis) const;
  int64_t size() const { return static_cast<int64_t>(data_.size()); }
  bool empty() const { return shape_.empty() && data_.empty(); }
  std::vector<int64_t> strides() const;

  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }
  const std::vector<double>& vec() const { return data_; }

  double operator[](int64_t i) const { return data_[static_cast<size_t>(i)]; }
  double& operator[](int64_t i) { return data_[static_cast<size_t>(i)]; }

  /// Multi-index access; the index count must equal rank().
  double at(std::initializer_list<int64_t> index) const;
  double& at(std::initializer_list<int64_t> index);

  /// Value of a tensor with exactly one element.
  double item() const;

  Tensor Reshape(Shape new_shape) const;

  void Fill(double v);
  /// this += other (same shape).
  void AddInPlace(const Tensor& other);
  void ScaleInPlace(double s);

  bool SameShape(const Tensor& other) const { return shape_ == other.shape_; }

 private:
  int64_t Offset(std::initializer_list<int64_t> index) const;

  Shape shape_;
  std::vector<double> data_;
};

void ValidateShape(const Shape& shape);

enum class ElementwiseOp { kAdd, kSub, kMul, kScale, kSquare };
enum class ReduceOp { kSum, kMean, kMax };

Tensor Add(const Tensor& a, const Tensor& b);
Tensor Sub(const Tensor& a, const Tensor& b);
Tensor Mul(const Tensor& a, const Tensor& b);
Tensor Scale(const Tensor& a, double s);
Tensor Square(const Tensor& a);
Tensor AddScalar(const Tensor& a, double s);

/// Generic entry point mirroring the named helpers above. For kScale the
/// scalar is used and `b` is ignored; for kSquare both are ignored.
Tensor Elementwise(ElementwiseOp op, const Tensor& a, const Tensor* b = nullptr,
                   double scalar = 0.0);

/// Reduces over `axes`. With keep_dims the reduced axes stay as extent 1,
/// otherwise they are removed (reducing every axis yields shape {1}).
Tensor Reduce(ReduceOp op, const Tensor& t, std::vector<int> axes,
              bool keep_dims = false);
/// Reduction over every element.
double ReduceAll(ReduceOp op, const Tensor& t);

/// Channel-axis concatenation; a's channels come first.
Tensor ConcatChannels(const Tensor& a, const Tensor& b);
/// Channels [begin, begin + count) of t.
Tensor SliceChannels(const Tensor& t, int64_t begin, int64_t count);

/// out[:, c, ...] = t[:, c, ...] * scale[c] + shift[c]; scale/shift are 1-D of
/// length C. Pass empty tensors to skip either term.
Tensor AffinePerChannel(const Tensor& t, const Tensor& scale,
                        const Tensor& shift);

/// Max absolute elementwise difference (shapes must match).
double MaxAbsDiff(const Tensor& a, const Tensor& b);

}  // namespace artnet
