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

#include "artnet/relation_math.h"

#include <cmath>
#include <numbers>
#include <string>

#include "artnet/error.h"

namespace artnet::relation {

namespace {

double Dot(const double* w, const Vector& v) {
  double s = 0.0;
  for (size_t i = 0; i < v.size(); ++i) s += w[i] * v[i];
  return s;
}

void RequireCols(const Matrix& m, size_t n, const char* what) {
  if (m.cols != static_cast<int64_t>(n)) {
    throw ShapeError(std::string(what) + ": matrix has " +
                     std::to_string(m.cols) + " columns, patch has " +
                     std::to_string(n) + " entries");
  }
}

}  // namespace

void PatchPair::Validate() const {
  if (x.empty() || x.size() != y.size()) {
    throw ShapeError("patch pair needs equal, non-zero lengths; got " +
                     std::to_string(x.size()) + " and " +
                     std::to_string(y.size()));
  }
}

Vector Matrix::Apply(const Vector& v) const {
  RequireCols(*this, v.size(), "matrix-vector product");
  Vector out(static_cast<size_t>(rows));
  for (int64_t r = 0; r < rows; ++r) out[r] = Dot(&data[r * cols], v);
  return out;
}

void FactoredWeights::Validate(const PatchPair& pair) const {
  pair.Validate();
  RequireCols(wx, pair.x.size(), "factored weights wx");
  RequireCols(wy, pair.y.size(), "factored weights wy");
  if (wy.rows != wx.rows || wz.cols != wx.rows || wz.rows < 1) {
    throw ShapeError("factored weights: factor counts disagree (wx " +
                     std::to_string(wx.rows) + ", wy " +
                     std::to_string(wy.rows) + ", wz " +
                     std::to_string(wz.cols) + ")");
  }
}

Tensor FactoredWeights::Expand() const {
  const int64_t nx = wx.cols;
  const int64_t ny = wy.cols;
  const int64_t k_count = wz.rows;
  Tensor w(Shape{nx, ny, k_count});
  for (int64_t i = 0; i < nx; ++i) {
    for (int64_t j = 0; j < ny; ++j) {
      for (int64_t k = 0; k < k_count; ++k) {
        double s = 0.0;
        for (int64_t f = 0; f < factors(); ++f) {
          s += wx(f, i) * wy(f, j) * wz(k, f);
        }
        w.at({i, j, k}) = s;
      }
    }
  }
  return w;
}

Vector ConcatLinearCode(const PatchPair& pair, const Matrix& wx,
                        const Matrix& wy) {
  pair.Validate();
  RequireCols(wx, pair.x.size(), "linear code wx");
  RequireCols(wy, pair.y.size(), "linear code wy");
  if (wx.rows != wy.rows) throw ShapeError("linear code: code counts disagree");
  Vector z = wx.Apply(pair.x);
  const Vector zy = wy.Apply(pair.y);
  for (size_t k = 0; k < z.size(); ++k) z[k] += zy[k];
  return z;
}

Vector MappingUnitCode(const PatchPair& pair, const Tensor& w) {
  pair.Validate();
  const auto nx = static_cast<int64_t>(pair.x.size());
  const auto ny = static_cast<int64_t>(pair.y.size());
  if (nx > kMaxMappingUnitPatch || ny > kMaxMappingUnitPatch) {
    throw ShapeError("mapping unit limited to patches of " +
                     std::to_string(kMaxMappingUnitPatch) + " entries");
  }
  if (w.rank() != 3 || w.shape()[0] != nx || w.shape()[1] != ny) {
    throw ShapeError("mapping unit tensor " + ShapeToString(w.shape()) +
                     " does not match patches of " + std::to_string(nx));
  }
  const int64_t k_count = w.shape()[2];
  Vector z(static_cast<size_t>(k_count), 0.0);
  for (int64_t i = 0; i < nx; ++i) {
    for (int64_t j = 0; j < ny; ++j) {
      const double xy = pair.x[i] * pair.y[j];
      const double* wk = w.data().data() + (i * ny + j) * k_count;
      for (int64_t k = 0; k < k_count; ++k) z[k] += wk[k] * xy;
    }
  }
  return z;
}

Vector FactoredCode(const PatchPair& pair, const FactoredWeights& fw) {
  fw.Validate(pair);
  const Vector fx = fw.wx.Apply(pair.x);
  const Vector fy = fw.wy.Apply(pair.y);
  Vector prod(fx.size());
  for (size_t f = 0; f < fx.size(); ++f) prod[f] = fx[f] * fy[f];
  return fw.wz.Apply(prod);
}

Vector EnergyCode(const PatchPair& pair, const FactoredWeights& fw) {
  fw.Validate(pair);
  const Vector fx = fw.wx.Apply(pair.x);
  const Vector fy = fw.wy.Apply(pair.y);
  Vector energy(fx.size());
  for (size_t f = 0; f < fx.size(); ++f) {
    const double s = fx[f] + fy[f];
    energy[f] = s * s;
  }
  return fw.wz.Apply(energy);
}

Vector QuadraticTerms(const PatchPair& pair, const FactoredWeights& fw) {
  fw.Validate(pair);
  const Vector fx = fw.wx.Apply(pair.x);
  const Vector fy = fw.wy.Apply(pair.y);
  Vector q(fx.size());
  for (size_t f = 0; f < fx.size(); ++f) q[f] = fx[f] * fx[f] + fy[f] * fy[f];
  return fw.wz.Apply(q);
}

FactoredWeights QuadratureWeights(double frequency, int64_t patch_size) {
  if (patch_size < 1) throw ShapeError("quadrature patch size must be positive");
  FactoredWeights fw{Matrix(2, patch_size), Matrix(2, patch_size),
                     Matrix(1, 2, 1.0)};
  const double omega = 2.0 * std::numbers::pi * frequency;
  for (int64_t i = 0; i < patch_size; ++i) {
    const double c = std::cos(omega * static_cast<double>(i));
    const double s = std::sin(omega * static_cast<double>(i));
    fw.wx(0, i) = c;
    fw.wx(1, i) = s;
    fw.wy(0, i) = c;
    fw.wy(1, i) = s;
  }
  return fw;
}

Vector Sinusoid(double frequency, double amplitude, double offset,
                int64_t patch_size) {
  Vector v(static_cast<size_t>(patch_size));
  const double omega = 2.0 * std::numbers::pi * frequency;
  for (int64_t i = 0; i < patch_size; ++i) {
    v[i] = amplitude * std::sin(omega * (static_cast<double>(i) + offset));
  }
  return v;
}

std::vector<double> PhaseResponseCurve(double frequency,
                                       double content_amplitude,
                                       const std::vector<double>& shifts,
                                       const FactoredWeights& quadrature) {
  const int64_t n = quadrature.wx.cols;
  std::vector<double> responses;
  responses.reserve(shifts.size());
  // Content shifted right by s: y_i = x_{i - s}.
  const Vector x = Sinusoid(frequency, content_amplitude, 0.0, n);
  for (double s : shifts) {
    PatchPair pair{x, Sinusoid(frequency, content_amplitude, -s, n)};
    responses.push_back(EnergyCode(pair, quadrature)[0]);
  }
  return responses;
}

}  // namespace artnet::relation
