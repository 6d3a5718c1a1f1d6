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

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "artnet/error.h"

namespace artnet {

int64_t NumElements(const Shape& shape) {
  int64_t n = 1;
  for (int64_t e : shape) n *= e;
  return n;
}

std::string ShapeToString(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  os << ']';
  return os.str();
}

void ValidateShape(const Shape& shape) {
  if (shape.empty() || shape.size() > Tensor::kMaxRank) {
    throw ShapeError("tensor rank must be 1.." +
                     std::to_string(Tensor::kMaxRank) + ", got " +
                     std::to_string(shape.size()));
  }
  for (int64_t e : shape) {
    if (e < 1) throw ShapeError("non-positive extent in " + ShapeToString(shape));
  }
}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)) {
  ValidateShape(shape_);
  data_.assign(static_cast<size_t>(NumElements(shape_)), fill);
}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  ValidateShape(shape_);
  if (static_cast<int64_t>(data_.size()) != NumElements(shape_)) {
    throw ShapeError("data length " + std::to_string(data_.size()) +
                     " does not match shape " + ShapeToString(shape_));
  }
}

Tensor Tensor::FromVector(std::vector<double> values) {
  Shape s{static_cast<int64_t>(values.size())};
  return Tensor(std::move(s), std::move(values));
}

int64_t Tensor::dim(int axis) const {
  if (axis < 0) axis += rank();
  if (axis < 0 || axis >= rank()) {
    throw ShapeError("axis " + std::to_string(axis) + " out of range for " +
                     ShapeToString(shape_));
  }
  return shape_[static_cast<size_t>(axis)];
}

std::vector<int64_t> Tensor::strides() const {
  std::vector<int64_t> s(shape_.size(), 1);
  for (int i = rank() - 2; i >= 0; --i) s[i] = s[i + 1] * shape_[i + 1];
  return s;
}

int64_t Tensor::Offset(std::initializer_list<int64_t> index) const {
  if (static_cast<int>(index.size()) != rank()) {
    throw ShapeError("index rank mismatch for " + ShapeToString(shape_));
  }
  int64_t off = 0;
  size_t axis = 0;
  for (int64_t i : index) {
    if (i < 0 || i >= shape_[axis]) {
      throw ShapeError("index out of range for " + ShapeToString(shape_));
    }
    off = off * shape_[axis] + i;
    ++axis;
  }
  return off;
}

double Tensor::at(std::initializer_list<int64_t> index) const {
  return data_[static_cast<size_t>(Offset(index))];
}

double& Tensor::at(std::initializer_list<int64_t> index) {
  return data_[static_cast<size_t>(Offset(index))];
}

double Tensor::item() const {
  if (data_.size() != 1) {
    throw ShapeError("item() on tensor of shape " + ShapeToString(shape_));
  }
  return data_[0];
}

Tensor Tensor::Reshape(Shape new_shape) const {
  ValidateShape(new_shape);
  if (NumElements(new_shape) != size()) {
    throw ShapeError("cannot reshape " + ShapeToString(shape_) + " to " +
                     ShapeToString(new_shape));
  }
  return Tensor(std::move(new_shape), data_);
}

void Tensor::Fill(double v) { std::fill(data_.begin(), data_.end(), v); }

void Tensor::AddInPlace(const Tensor& other) {
  if (shape_ != other.shape_) {
    throw ShapeError("AddInPlace shape mismatch " + ShapeToString(shape_) +
                     " vs " + ShapeToString(other.shape_));
  }
  for (size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
}

void Tensor::ScaleInPlace(double s) {
  for (double& v : data_) v *= s;
}

namespace {

void RequireSameShape(const Tensor& a, const Tensor& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(what) + ": shape mismatch " +
                     ShapeToString(a.shape()) + " vs " +
                     ShapeToString(b.shape()));
  }
}

template <typename F>
Tensor Map(const Tensor& a, F f) {
  Tensor out(a.shape());
  auto src = a.data();
  auto dst = out.data();
  for (size_t i = 0; i < src.size(); ++i) dst[i] = f(src[i]);
  return out;
}

template <typename F>
Tensor Zip(const Tensor& a, const Tensor& b, const char* what, F f) {
  RequireSameShape(a, b, what);
  Tensor out(a.shape());
  auto x = a.data();
  auto y = b.data();
  auto dst = out.data();
  for (size_t i = 0; i < x.size(); ++i) dst[i] = f(x[i], y[i]);
  return out;
}

int NormalizeAxis(int axis, int rank) {
  int a = axis < 0 ? axis + rank : axis;
  if (a < 0 || a >= rank) {
    throw ShapeError("invalid axis " + std::to_string(axis) + " for rank " +
                     std::to_string(rank));
  }
  return a;
}

// Splits a tensor into [outer, channels, inner] around axis 1.
struct ChannelView {
  int64_t outer, channels, inner;
};

ChannelView ChannelSplit(const Tensor& t) {
  if (t.rank() < 2) throw ShapeError("tensor has no channel axis");
  int64_t inner = 1;
  for (int i = 2; i < t.rank(); ++i) inner *= t.shape()[i];
  return {t.shape()[0], t.shape()[1], inner};
}

}  // namespace

Tensor Add(const Tensor& a, const Tensor& b) {
  return Zip(a, b, "add", [](double x, double y) { return x + y; });
}
Tensor Sub(const Tensor& a, const Tensor& b) {
  return Zip(a, b, "sub", [](double x, double y) { return x - y; });
}
Tensor Mul(const Tensor& a, const Tensor& b) {
  return Zip(a, b, "mul", [](double x, double y) { return x * y; });
}
Tensor Scale(const Tensor& a, double s) {
  return Map(a, [s](double x) { return x * s; });
}
Tensor Square(const Tensor& a) {
  return Map(a, [](double x) { return x * x; });
}
Tensor AddScalar(const Tensor& a, double s) {
  return Map(a, [s](double x) { return x + s; });
}

Tensor Elementwise(ElementwiseOp op, const Tensor& a, const Tensor* b,
                   double scalar) {
  auto need_b = [&]() -> const Tensor& {
    if (!b) throw ShapeError("binary elementwise op needs a second operand");
    return *b;
  };
  switch (op) {
    case ElementwiseOp::kAdd: return Add(a, need_b());
    case ElementwiseOp::kSub: return Sub(a, need_b());
    case ElementwiseOp::kMul: return Mul(a, need_b());
    case ElementwiseOp::kScale: return Scale(a, scalar);
    case ElementwiseOp::kSquare: return Square(a);
  }
  throw ShapeError("unknown elementwise op");
}

Tensor Reduce(ReduceOp op, const Tensor& t, std::vector<int> axes,
              bool keep_dims) {
  const int rank = t.rank();
  std::vector<bool> reduced(static_cast<size_t>(rank), false);
  for (int& a : axes) {
    a = NormalizeAxis(a, rank);
    reduced[static_cast<size_t>(a)] = true;
  }

  Shape kept_shape(t.shape());
  for (int i = 0; i < rank; ++i) {
    if (reduced[i]) kept_shape[i] = 1;
  }
  Tensor out(kept_shape, op == ReduceOp::kMax
                             ? -std::numeric_limits<double>::infinity()
                             : 0.0);
  const auto out_strides = out.strides();
  std::vector<int64_t> idx(static_cast<size_t>(rank), 0);
  auto src = t.data();
  auto dst = out.data();
  for (int64_t flat = 0; flat < t.size(); ++flat) {
    int64_t o = 0;
    for (int i = 0; i < rank; ++i) {
      if (!reduced[i]) o += idx[i] * out_strides[i];
    }
    const double v = src[flat];
    if (op == ReduceOp::kMax) {
      dst[o] = std::max(dst[o], v);
    } else {
      dst[o] += v;
    }
    for (int i = rank - 1; i >= 0; --i) {
      if (++idx[i] < t.shape()[i]) break;
      idx[i] = 0;
    }
  }
  if (op == ReduceOp::kMean) {
    out.ScaleInPlace(static_cast<double>(out.size()) /
                     static_cast<double>(t.size()));
  }
  if (keep_dims) return out;
  Shape squeezed;
  for (int i = 0; i < rank; ++i) {
    if (!reduced[i]) squeezed.push_back(t.shape()[i]);
  }
  if (squeezed.empty()) squeezed.push_back(1);
  return out.Reshape(std::move(squeezed));
}

double ReduceAll(ReduceOp op, const Tensor& t) {
  std::vector<int> axes(static_cast<size_t>(t.rank()));
  for (int i = 0; i < t.rank(); ++i) axes[i] = i;
  return Reduce(op, t, axes).item();
}

Tensor ConcatChannels(const Tensor& a, const Tensor& b) {
  if (a.rank() != b.rank() || a.rank() < 2) {
    throw ShapeError("concat_channels rank mismatch " + ShapeToString(a.shape()) +
                     " vs " + ShapeToString(b.shape()));
  }
  for (int i = 0; i < a.rank(); ++i) {
    if (i != 1 && a.shape()[i] != b.shape()[i]) {
      throw ShapeError("concat_channels extent mismatch " +
                       ShapeToString(a.shape()) + " vs " +
                       ShapeToString(b.shape()));
    }
  }
  const ChannelView va = ChannelSplit(a);
  const ChannelView vb = ChannelSplit(b);
  Shape s = a.shape();
  s[1] = va.channels + vb.channels;
  Tensor out(s);
  auto dst = out.data().begin();
  for (int64_t n = 0; n < va.outer; ++n) {
    auto pa = a.data().begin() + n * va.channels * va.inner;
    auto pb = b.data().begin() + n * vb.channels * vb.inner;
    dst = std::copy(pa, pa + va.channels * va.inner, dst);
    dst = std::copy(pb, pb + vb.channels * vb.inner, dst);
  }
  return out;
}

Tensor SliceChannels(const Tensor& t, int64_t begin, int64_t count) {
  const ChannelView v = ChannelSplit(t);
  if (begin < 0 || count < 1 || begin + count > v.channels) {
    throw ShapeError("channel slice out of range for " + ShapeToString(t.shape()));
  }
  Shape s = t.shape();
  s[1] = count;
  Tensor out(s);
  auto dst = out.data().begin();
  for (int64_t n = 0; n < v.outer; ++n) {
    auto src = t.data().begin() + (n * v.channels + begin) * v.inner;
    dst = std::copy(src, src + count * v.inner, dst);
  }
  return out;
}

Tensor AffinePerChannel(const Tensor& t, const Tensor& scale,
                        const Tensor& shift) {
  const ChannelView v = ChannelSplit(t);
  if ((!scale.empty() && scale.size() != v.channels) ||
      (!shift.empty() && shift.size() != v.channels)) {
    throw ShapeError("per-channel vector length does not match channels of " +
                     ShapeToString(t.shape()));
  }
  Tensor out(t.shape());
  auto src = t.data();
  auto dst = out.data();
  for (int64_t n = 0; n < v.outer; ++n) {
    for (int64_t c = 0; c < v.channels; ++c) {
      const double g = scale.empty() ? 1.0 : scale[c];
      const double b = shift.empty() ? 0.0 : shift[c];
      const int64_t base = (n * v.channels + c) * v.inner;
      for (int64_t i = 0; i < v.inner; ++i) dst[base + i] = src[base + i] * g + b;
    }
  }
  return out;
}

double MaxAbsDiff(const Tensor& a, const Tensor& b) {
  RequireSameShape(a, b, "max_abs_diff");
  double m = 0.0;
  for (int64_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace artnet
