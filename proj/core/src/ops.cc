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

#include "artnet/ops.h"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <string>

#include "artnet/error.h"

namespace artnet {

using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMatrix>;
using ConstMatMap = Eigen::Map<const RowMatrix>;

// ConvSpec ---------------------------------------------------------------

void ConvSpec::Validate() const {
  if (kernel < 1 || temporal_kernel < 1 || spatial_stride < 1 ||
      temporal_stride < 1 || out_channels < 1 || spatial_pad < 0 ||
      temporal_pad < 0) {
    throw ShapeError("invalid convolution spec");
  }
}

int64_t ConvOutputExtent(int64_t in, int pad, int kernel, int stride) {
  const int64_t padded = in + 2 * pad;
  if (padded < kernel) {
    throw ShapeError("kernel " + std::to_string(kernel) +
                     " larger than padded extent " + std::to_string(padded));
  }
  return (padded - kernel) / stride + 1;
}

Shape ConvSpec::OutputShape(const Shape& input) const {
  Validate();
  if (input.size() != 5) {
    throw ShapeError("convolution input must be [N, C, T, H, W], got " +
                     ShapeToString(input));
  }
  return {input[0], out_channels,
          ConvOutputExtent(input[2], temporal_pad, temporal_kernel,
                           temporal_stride),
          ConvOutputExtent(input[3], spatial_pad, kernel, spatial_stride),
          ConvOutputExtent(input[4], spatial_pad, kernel, spatial_stride)};
}

Shape ConvSpec::WeightShape(int64_t in_channels) const {
  return {out_channels, in_channels, temporal_kernel, kernel, kernel};
}

int64_t ConvSpec::MacsPerOutput(int64_t in_channels) const {
  return in_channels * temporal_kernel * kernel * kernel;
}

// Convolution ------------------------------------------------------------

namespace {

struct ConvGeometry {
  int64_t n, c_in, t, h, w;
  int64_t c_out, ot, oh, ow;
  int64_t kt, kh, kw;
  int64_t st, ss, pt, ps;

  int64_t patch() const { return c_in * kt * kh * kw; }
  int64_t positions() const { return ot * oh * ow; }
  int64_t in_volume() const { return c_in * t * h * w; }
  // Unit stride, no padding, 1x1x1 kernel: the column matrix is the input.
  bool pointwise() const {
    return kt == 1 && kh == 1 && kw == 1 && st == 1 && ss == 1 && pt == 0 &&
           ps == 0;
  }
};

ConvGeometry MakeGeometry(const Shape& in, const Shape& wshape,
                          const ConvSpec& spec) {
  const Shape out = spec.OutputShape(in);
  if (wshape != spec.WeightShape(in[1])) {
    throw ShapeError("weight shape " + ShapeToString(wshape) +
                     " inconsistent with input " + ShapeToString(in) +
                     " and spec (expected " +
                     ShapeToString(spec.WeightShape(in[1])) + ")");
  }
  return {in[0],          in[1],          in[2],
          in[3],          in[4],          out[1],
          out[2],         out[3],         out[4],
          spec.temporal_kernel, spec.kernel, spec.kernel,
          spec.temporal_stride, spec.spatial_stride, spec.temporal_pad,
          spec.spatial_pad};
}

// col[(c, dt, dy, dx), (ot, oy, ox)]
void Im2Col(const double* x, const ConvGeometry& g, double* col) {
  const int64_t p = g.positions();
  int64_t row = 0;
  for (int64_t c = 0; c < g.c_in; ++c) {
    const double* xc = x + c * g.t * g.h * g.w;
    for (int64_t dt = 0; dt < g.kt; ++dt) {
      for (int64_t dy = 0; dy < g.kh; ++dy) {
        for (int64_t dx = 0; dx < g.kw; ++dx, ++row) {
          double* dst = col + row * p;
          for (int64_t ot = 0; ot < g.ot; ++ot) {
            const int64_t it = ot * g.st - g.pt + dt;
            for (int64_t oy = 0; oy < g.oh; ++oy) {
              const int64_t iy = oy * g.ss - g.ps + dy;
              double* d = dst + (ot * g.oh + oy) * g.ow;
              if (it < 0 || it >= g.t || iy < 0 || iy >= g.h) {
                std::fill(d, d + g.ow, 0.0);
                continue;
              }
              const double* src = xc + (it * g.h + iy) * g.w;
              for (int64_t ox = 0; ox < g.ow; ++ox) {
                const int64_t ix = ox * g.ss - g.ps + dx;
                d[ox] = (ix >= 0 && ix < g.w) ? src[ix] : 0.0;
              }
            }
          }
        }
      }
    }
  }
}

void Col2Im(const double* col, const ConvGeometry& g, double* x) {
  const int64_t p = g.positions();
  int64_t row = 0;
  for (int64_t c = 0; c < g.c_in; ++c) {
    double* xc = x + c * g.t * g.h * g.w;
    for (int64_t dt = 0; dt < g.kt; ++dt) {
      for (int64_t dy = 0; dy < g.kh; ++dy) {
        for (int64_t dx = 0; dx < g.kw; ++dx, ++row) {
          const double* src = col + row * p;
          for (int64_t ot = 0; ot < g.ot; ++ot) {
            const int64_t it = ot * g.st - g.pt + dt;
            if (it < 0 || it >= g.t) continue;
            for (int64_t oy = 0; oy < g.oh; ++oy) {
              const int64_t iy = oy * g.ss - g.ps + dy;
              if (iy < 0 || iy >= g.h) continue;
              const double* s = src + (ot * g.oh + oy) * g.ow;
              double* d = xc + (it * g.h + iy) * g.w;
              for (int64_t ox = 0; ox < g.ow; ++ox) {
                const int64_t ix = ox * g.ss - g.ps + dx;
                if (ix >= 0 && ix < g.w) d[ix] += s[ox];
              }
            }
          }
        }
      }
    }
  }
}

}  // namespace

Tensor Conv3dForward(const Tensor& input, const Tensor& weights,
                     const Tensor* bias, const ConvSpec& spec) {
  const ConvGeometry g = MakeGeometry(input.shape(), weights.shape(), spec);
  if (bias && !bias->empty() && bias->size() != g.c_out) {
    throw ShapeError("bias length does not match output channels");
  }
  Tensor out(spec.OutputShape(input.shape()));
  const int64_t k = g.patch();
  const int64_t p = g.positions();
  ConstMatMap w(weights.data().data(), g.c_out, k);
  std::vector<double> col(g.pointwise() ? 0 : static_cast<size_t>(k * p));
  for (int64_t n = 0; n < g.n; ++n) {
    const double* x = input.data().data() + n * g.in_volume();
    const double* colp = x;
    if (!g.pointwise()) {
      Im2Col(x, g, col.data());
      colp = col.data();
    }
    MatMap y(out.data().data() + n * g.c_out * p, g.c_out, p);
    y.noalias() = w * ConstMatMap(colp, k, p);
    if (bias && !bias->empty()) {
      for (int64_t c = 0; c < g.c_out; ++c) y.row(c).array() += (*bias)[c];
    }
  }
  return out;
}

Var Conv3d(const Var& input, const Var& weights, const Var& bias,
           const ConvSpec& spec) {
  const Tensor* b = bias.defined() ? &bias.value() : nullptr;
  Tensor out = Conv3dForward(input.value(), weights.value(), b, spec);
  std::vector<Var> parents{input, weights};
  if (bias.defined()) parents.push_back(bias);
  const bool has_bias = bias.defined();
  return Var::FromOp(
      std::move(out), parents,
      [input, weights, spec, has_bias](const Tensor& gy) {
        const Tensor& x = input.value();
        const Tensor& wt = weights.value();
        const ConvGeometry g = MakeGeometry(x.shape(), wt.shape(), spec);
        const int64_t k = g.patch();
        const int64_t p = g.positions();
        Tensor gx = input.requires_grad() ? Tensor::ZerosLike(x) : Tensor();
        Tensor gw = weights.requires_grad() ? Tensor::ZerosLike(wt) : Tensor();
        Tensor gb = has_bias ? Tensor(Shape{g.c_out}) : Tensor();
        ConstMatMap w(wt.data().data(), g.c_out, k);
        std::vector<double> col(static_cast<size_t>(k * p));
        for (int64_t n = 0; n < g.n; ++n) {
          ConstMatMap dy(gy.data().data() + n * g.c_out * p, g.c_out, p);
          const double* xn = x.data().data() + n * g.in_volume();
          if (!gw.empty()) {
            const double* colp = xn;
            if (!g.pointwise()) {
              Im2Col(xn, g, col.data());
              colp = col.data();
            }
            MatMap dw(gw.data().data(), g.c_out, k);
            dw.noalias() += dy * ConstMatMap(colp, k, p).transpose();
          }
          if (!gb.empty()) {
            for (int64_t c = 0; c < g.c_out; ++c) gb[c] += dy.row(c).sum();
          }
          if (!gx.empty()) {
            double* gxn = gx.data().data() + n * g.in_volume();
            if (g.pointwise()) {
              MatMap(gxn, k, p).noalias() += w.transpose() * dy;
            } else {
              MatMap dcol(col.data(), k, p);
              dcol.noalias() = w.transpose() * dy;
              Col2Im(col.data(), g, gxn);
            }
          }
        }
        std::vector<Tensor> grads{std::move(gx), std::move(gw)};
        if (has_bias) grads.push_back(std::move(gb));
        return grads;
      });
}

Var Conv2dFrames(const Var& input, const Var& weights, const Var& bias,
                 const ConvSpec& spec) {
  if (!spec.is_2d()) {
    throw ShapeError("conv2d_frames needs temporal kernel 1, got " +
                     std::to_string(spec.temporal_kernel));
  }
  return Conv3d(input, weights, bias, spec);
}

// Cross-channel pooling --------------------------------------------------

Tensor CrossChannelPoolForward(const Tensor& u, int group_size, double weight) {
  if (u.rank() < 2 || group_size < 1 || u.shape()[1] % group_size != 0) {
    throw ShapeError("cross-channel pooling: " + std::to_string(group_size) +
                     " does not divide the channels of " +
                     ShapeToString(u.shape()));
  }
  Shape s = u.shape();
  const int64_t c_in = s[1];
  const int64_t c_out = c_in / group_size;
  s[1] = c_out;
  const int64_t inner = u.size() / (s[0] * c_in);
  Tensor out(s);
  for (int64_t n = 0; n < s[0]; ++n) {
    for (int64_t g = 0; g < c_out; ++g) {
      double* dst = out.data().data() + (n * c_out + g) * inner;
      for (int m = 0; m < group_size; ++m) {
        const double* src =
            u.data().data() + (n * c_in + g * group_size + m) * inner;
        for (int64_t i = 0; i < inner; ++i) dst[i] += src[i];
      }
      for (int64_t i = 0; i < inner; ++i) dst[i] *= weight;
    }
  }
  return out;
}

Var CrossChannelPool(const Var& u, int group_size, double weight) {
  Tensor out = CrossChannelPoolForward(u.value(), group_size, weight);
  const Shape in_shape = u.shape();
  return Var::FromOp(std::move(out), {u},
                     [in_shape, group_size, weight](const Tensor& gy) {
                       const int64_t c_out = gy.shape()[1];
                       const int64_t inner = gy.size() / (gy.shape()[0] * c_out);
                       Tensor gx(in_shape);
                       for (int64_t n = 0; n < in_shape[0]; ++n) {
                         for (int64_t c = 0; c < in_shape[1]; ++c) {
                           const double* src = gy.data().data() +
                                               (n * c_out + c / group_size) * inner;
                           double* dst =
                               gx.data().data() + (n * in_shape[1] + c) * inner;
                           for (int64_t i = 0; i < inner; ++i) {
                             dst[i] = weight * src[i];
                           }
                         }
                       }
                       return std::vector<Tensor>{std::move(gx)};
                     });
}

// Elementwise ------------------------------------------------------------

Var Add(const Var& a, const Var& b) {
  return Var::FromOp(Add(a.value(), b.value()), {a, b},
                     [](const Tensor& g) { return std::vector<Tensor>{g, g}; });
}

Var Sub(const Var& a, const Var& b) {
  return Var::FromOp(Sub(a.value(), b.value()), {a, b}, [](const Tensor& g) {
    return std::vector<Tensor>{g, Scale(g, -1.0)};
  });
}

Var Mul(const Var& a, const Var& b) {
  return Var::FromOp(Mul(a.value(), b.value()), {a, b},
                     [a, b](const Tensor& g) {
                       return std::vector<Tensor>{Mul(g, b.value()),
                                                  Mul(g, a.value())};
                     });
}

Var Scale(const Var& a, double s) {
  return Var::FromOp(Scale(a.value(), s), {a}, [s](const Tensor& g) {
    return std::vector<Tensor>{Scale(g, s)};
  });
}

Var Square(const Var& a) {
  return Var::FromOp(Square(a.value()), {a}, [a](const Tensor& g) {
    Tensor gx(g.shape());
    for (int64_t i = 0; i < g.size(); ++i) gx[i] = 2.0 * a.value()[i] * g[i];
    return std::vector<Tensor>{std::move(gx)};
  });
}

Var Relu(const Var& a) {
  Tensor out(a.shape());
  // NaN passes through so divergence stays visible.
  for (int64_t i = 0; i < out.size(); ++i) {
    const double v = a.value()[i];
    out[i] = v < 0.0 ? 0.0 : v;
  }
  return Var::FromOp(std::move(out), {a}, [a](const Tensor& g) {
    Tensor gx(g.shape());
    for (int64_t i = 0; i < g.size(); ++i) {
      gx[i] = a.value()[i] > 0.0 ? g[i] : 0.0;
    }
    return std::vector<Tensor>{std::move(gx)};
  });
}

Var Sum(const Var& a) {
  const Shape in_shape = a.shape();
  return Var::FromOp(Tensor(Shape{1}, ReduceAll(ReduceOp::kSum, a.value())),
                     {a}, [in_shape](const Tensor& g) {
                       return std::vector<Tensor>{Tensor(in_shape, g.item())};
                     });
}

Var Mean(const Var& a) {
  const Shape in_shape = a.shape();
  const double n = static_cast<double>(a.value().size());
  return Var::FromOp(Tensor(Shape{1}, ReduceAll(ReduceOp::kMean, a.value())),
                     {a}, [in_shape, n](const Tensor& g) {
                       return std::vector<Tensor>{Tensor(in_shape, g.item() / n)};
                     });
}

Var MeanOf(std::span<const Var> inputs) {
  if (inputs.empty()) throw ContractError("mean of an empty list");
  Tensor acc = inputs[0].value();
  for (size_t i = 1; i < inputs.size(); ++i) acc.AddInPlace(inputs[i].value());
  const double inv = 1.0 / static_cast<double>(inputs.size());
  acc.ScaleInPlace(inv);
  std::vector<Var> parents(inputs.begin(), inputs.end());
  const size_t count = inputs.size();
  return Var::FromOp(std::move(acc), parents, [count, inv](const Tensor& g) {
    return std::vector<Tensor>(count, Scale(g, inv));
  });
}

Var ConcatChannels(const Var& a, const Var& b) {
  const int64_t ca = a.shape()[1];
  const int64_t cb = b.shape()[1];
  return Var::FromOp(ConcatChannels(a.value(), b.value()), {a, b},
                     [ca, cb](const Tensor& g) {
                       return std::vector<Tensor>{SliceChannels(g, 0, ca),
                                                  SliceChannels(g, ca, cb)};
                     });
}

Var Reshape(const Var& a, Shape shape) {
  const Shape in_shape = a.shape();
  return Var::FromOp(a.value().Reshape(std::move(shape)), {a},
                     [in_shape](const Tensor& g) {
                       return std::vector<Tensor>{g.Reshape(in_shape)};
                     });
}

// Batch normalization ----------------------------------------------------

BatchNormState BatchNormState::Create(int64_t channels) {
  BatchNormState s;
  s.gamma = Var(Tensor::Ones({channels}), true);
  s.beta = Var(Tensor::Zeros({channels}), true);
  s.running_mean = Tensor::Zeros({channels});
  s.running_var = Tensor::Ones({channels});
  return s;
}

Var BatchNorm(const Var& x, BatchNormState& state) {
  const Tensor& xv = x.value();
  if (xv.rank() < 2 || xv.shape()[1] != state.channels()) {
    throw ShapeError("batch norm expects " + std::to_string(state.channels()) +
                     " channels, got " + ShapeToString(xv.shape()));
  }
  const int64_t n = xv.shape()[0];
  const int64_t c_count = xv.shape()[1];
  const int64_t inner = xv.size() / (n * c_count);
  const int64_t m = n * inner;
  const double eps = state.epsilon;

  Tensor mean(Shape{c_count});
  Tensor var(Shape{c_count});
  if (state.mode == Mode::kTrain) {
    for (int64_t c = 0; c < c_count; ++c) {
      double s = 0.0;
      for (int64_t b = 0; b < n; ++b) {
        const double* p = xv.data().data() + (b * c_count + c) * inner;
        for (int64_t i = 0; i < inner; ++i) s += p[i];
      }
      const double mu = s / static_cast<double>(m);
      double ss = 0.0;
      for (int64_t b = 0; b < n; ++b) {
        const double* p = xv.data().data() + (b * c_count + c) * inner;
        for (int64_t i = 0; i < inner; ++i) ss += (p[i] - mu) * (p[i] - mu);
      }
      mean[c] = mu;
      var[c] = ss / static_cast<double>(m);
      const double unbiased =
          m > 1 ? ss / static_cast<double>(m - 1) : var[c];
      state.running_mean[c] =
          state.momentum * state.running_mean[c] + (1.0 - state.momentum) * mu;
      state.running_var[c] = state.momentum * state.running_var[c] +
                             (1.0 - state.momentum) * unbiased;
    }
  } else {
    mean = state.running_mean;
    var = state.running_var;
  }

  Tensor inv_std(Shape{c_count});
  for (int64_t c = 0; c < c_count; ++c) inv_std[c] = 1.0 / std::sqrt(var[c] + eps);
  Tensor xhat(xv.shape());
  Tensor out(xv.shape());
  const Tensor& gamma = state.gamma.value();
  const Tensor& beta = state.beta.value();
  for (int64_t b = 0; b < n; ++b) {
    for (int64_t c = 0; c < c_count; ++c) {
      const int64_t base = (b * c_count + c) * inner;
      for (int64_t i = 0; i < inner; ++i) {
        const double h = (xv[base + i] - mean[c]) * inv_std[c];
        xhat[base + i] = h;
        out[base + i] = gamma[c] * h + beta[c];
      }
    }
  }

  const bool train = state.mode == Mode::kTrain;
  Var gamma_var = state.gamma;
  return Var::FromOp(
      std::move(out), {x, state.gamma, state.beta},
      [xhat = std::move(xhat), inv_std, gamma_var, train, n, c_count, inner,
       m](const Tensor& gy) {
        const Tensor& gamma = gamma_var.value();
        Tensor gx(gy.shape());
        Tensor gg(Shape{c_count});
        Tensor gbeta(Shape{c_count});
        for (int64_t c = 0; c < c_count; ++c) {
          double sum_g = 0.0;
          double sum_gx = 0.0;
          for (int64_t b = 0; b < n; ++b) {
            const int64_t base = (b * c_count + c) * inner;
            for (int64_t i = 0; i < inner; ++i) {
              sum_g += gy[base + i];
              sum_gx += gy[base + i] * xhat[base + i];
            }
          }
          gg[c] = sum_gx;
          gbeta[c] = sum_g;
          const double k = gamma[c] * inv_std[c];
          const double inv_m = 1.0 / static_cast<double>(m);
          for (int64_t b = 0; b < n; ++b) {
            const int64_t base = (b * c_count + c) * inner;
            for (int64_t i = 0; i < inner; ++i) {
              gx[base + i] =
                  train ? k * (gy[base + i] - inv_m * sum_g -
                               xhat[base + i] * inv_m * sum_gx)
                        : k * gy[base + i];
            }
          }
        }
        return std::vector<Tensor>{std::move(gx), std::move(gg),
                                   std::move(gbeta)};
      });
}

// Head ops ---------------------------------------------------------------

Var Dropout(const Var& x, double p, Mode mode, std::mt19937_64& rng) {
  if (p < 0.0 || p >= 1.0) throw ContractError("dropout probability must be in [0, 1)");
  if (mode == Mode::kEval || p == 0.0) return x;
  std::bernoulli_distribution keep(1.0 - p);
  const double scale = 1.0 / (1.0 - p);
  Tensor mask(x.shape());
  for (double& v : mask.data()) v = keep(rng) ? scale : 0.0;
  Tensor out = Mul(x.value(), mask);
  return Var::FromOp(std::move(out), {x}, [mask = std::move(mask)](const Tensor& g) {
    return std::vector<Tensor>{Mul(g, mask)};
  });
}

Var GlobalAvgPool(const Var& x) {
  const Shape in_shape = x.shape();
  if (in_shape.size() < 3) {
    throw ShapeError("global average pool needs spatial axes, got " +
                     ShapeToString(in_shape));
  }
  const int64_t n = in_shape[0];
  const int64_t c_count = in_shape[1];
  const int64_t inner = x.value().size() / (n * c_count);
  Tensor out(Shape{n, c_count});
  for (int64_t i = 0; i < n * c_count; ++i) {
    double s = 0.0;
    for (int64_t j = 0; j < inner; ++j) s += x.value()[i * inner + j];
    out[i] = s / static_cast<double>(inner);
  }
  return Var::FromOp(std::move(out), {x}, [in_shape, inner](const Tensor& g) {
    Tensor gx(in_shape);
    const double inv = 1.0 / static_cast<double>(inner);
    for (int64_t i = 0; i < g.size(); ++i) {
      for (int64_t j = 0; j < inner; ++j) gx[i * inner + j] = g[i] * inv;
    }
    return std::vector<Tensor>{std::move(gx)};
  });
}

Var FullyConnected(const Var& x, const Var& weights, const Var& bias) {
  const Tensor& xv = x.value();
  const Tensor& wv = weights.value();
  if (xv.rank() != 2 || wv.rank() != 2 || xv.shape()[1] != wv.shape()[1]) {
    throw ShapeError("fully connected: input " + ShapeToString(xv.shape()) +
                     " incompatible with weights " + ShapeToString(wv.shape()));
  }
  const int64_t n = xv.shape()[0];
  const int64_t in = xv.shape()[1];
  const int64_t k = wv.shape()[0];
  if (bias.defined() && bias.value().size() != k) {
    throw ShapeError("fully connected: bias length mismatch");
  }
  Tensor out(Shape{n, k});
  MatMap y(out.data().data(), n, k);
  y.noalias() = ConstMatMap(xv.data().data(), n, in) *
                ConstMatMap(wv.data().data(), k, in).transpose();
  if (bias.defined()) {
    for (int64_t r = 0; r < n; ++r) {
      for (int64_t j = 0; j < k; ++j) y(r, j) += bias.value()[j];
    }
  }
  std::vector<Var> parents{x, weights};
  if (bias.defined()) parents.push_back(bias);
  const bool has_bias = bias.defined();
  return Var::FromOp(std::move(out), parents,
                     [x, weights, has_bias, n, in, k](const Tensor& g) {
                       ConstMatMap gy(g.data().data(), n, k);
                       Tensor gx(Shape{n, in});
                       Tensor gw(Shape{k, in});
                       MatMap(gx.data().data(), n, in).noalias() =
                           gy * ConstMatMap(weights.value().data().data(), k, in);
                       MatMap(gw.data().data(), k, in).noalias() =
                           gy.transpose() *
                           ConstMatMap(x.value().data().data(), n, in);
                       std::vector<Tensor> grads{std::move(gx), std::move(gw)};
                       if (has_bias) {
                         Tensor gb(Shape{k});
                         for (int64_t r = 0; r < n; ++r) {
                           for (int64_t j = 0; j < k; ++j) gb[j] += gy(r, j);
                         }
                         grads.push_back(std::move(gb));
                       }
                       return grads;
                     });
}

Tensor Softmax(const Tensor& logits) {
  if (logits.rank() != 2) {
    throw ShapeError("softmax expects [N, K], got " + ShapeToString(logits.shape()));
  }
  const int64_t n = logits.shape()[0];
  const int64_t k = logits.shape()[1];
  Tensor out(logits.shape());
  for (int64_t r = 0; r < n; ++r) {
    const double* row = logits.data().data() + r * k;
    double* dst = out.data().data() + r * k;
    const double mx = *std::max_element(row, row + k);
    double z = 0.0;
    for (int64_t j = 0; j < k; ++j) {
      dst[j] = std::exp(row[j] - mx);
      z += dst[j];
    }
    for (int64_t j = 0; j < k; ++j) dst[j] /= z;
  }
  return out;
}

Var SoftmaxCrossEntropy(const Var& logits, std::span<const int> labels) {
  const Tensor& lv = logits.value();
  if (lv.rank() != 2 || lv.shape()[0] != static_cast<int64_t>(labels.size())) {
    throw ContractError("softmax cross-entropy: " + std::to_string(labels.size()) +
                        " labels for logits " + ShapeToString(lv.shape()));
  }
  const int64_t n = lv.shape()[0];
  const int64_t k = lv.shape()[1];
  for (int label : labels) {
    if (label < 0 || label >= k) {
      throw ContractError("label " + std::to_string(label) +
                          " out of range for " + std::to_string(k) + " classes");
    }
  }
  Tensor probs = Softmax(lv);
  double loss = 0.0;
  for (int64_t r = 0; r < n; ++r) {
    const double* row = lv.data().data() + r * k;
    const double mx = *std::max_element(row, row + k);
    double z = 0.0;
    for (int64_t j = 0; j < k; ++j) z += std::exp(row[j] - mx);
    loss += -(row[labels[r]] - mx - std::log(z));
  }
  loss /= static_cast<double>(n);
  std::vector<int> label_copy(labels.begin(), labels.end());
  return Var::FromOp(Tensor(Shape{1}, loss), {logits},
                     [probs = std::move(probs), label_copy, n, k](const Tensor& g) {
                       Tensor gx = probs;
                       for (int64_t r = 0; r < n; ++r) gx[r * k + label_copy[r]] -= 1.0;
                       gx.ScaleInPlace(g.item() / static_cast<double>(n));
                       return std::vector<Tensor>{std::move(gx)};
                     });
}

}  // namespace artnet
