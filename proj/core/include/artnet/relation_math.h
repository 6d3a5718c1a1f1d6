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

// Transformation codes between two patches x and y taken from consecutive
// frames, written out without any network machinery:
//
//   linear code        z_k = sum_i wx_ik x_i + sum_j wy_jk y_j
//   mapping unit       z_k = sum_ij w_ijk x_i y_j
//   factored           z_k = sum_f wz_kf (wx_f . x)(wy_f . y)
//   energy             z_k = sum_f wz_kf (wx_f . x + wy_f . y)^2
//
// The energy code expands to 2 * factored + sum_f wz_kf [(wx_f . x)^2 +
// (wy_f . y)^2], which is what lets a conv -> square -> pool pipeline stand in
// for the multiplicative mapping unit.

#pragma once

#include <cstdint>
#include <vector>

#include "artnet/tensor.h"

namespace artnet::relation {

using Vector = std::vector<double>;

struct PatchPair {
  Vector x;
  Vector y;

  void Validate() const;
};

/// Dense row-major matrix.
struct Matrix {
  int64_t rows = 0;
  int64_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(int64_t r, int64_t c, double fill = 0.0)
      : rows(r), cols(c), data(static_cast<size_t>(r * c), fill) {}

  double operator()(int64_t r, int64_t c) const { return data[r * cols + c]; }
  double& operator()(int64_t r, int64_t c) { return data[r * cols + c]; }

  /// this * v
  Vector Apply(const Vector& v) const;
};

/// Rank-F factorization of a mapping-unit tensor.
///   wx: F x |x| (row f is w^x_f)
///   wy: F x |y| (row f is w^y_f)
///   wz: K x F
struct FactoredWeights {
  Matrix wx;
  Matrix wy;
  Matrix wz;

  int64_t factors() const { return wx.rows; }
  int64_t codes() const { return wz.rows; }
  void Validate(const PatchPair& pair) const;

  /// w_ijk = sum_f wx(f, i) wy(f, j) wz(k, f), as a [|x|, |y|, K] tensor.
  Tensor Expand() const;
};

/// Largest patch length accepted by MappingUnitCode; the tensor is cubic.
inline constexpr int64_t kMaxMappingUnitPatch = 16;

/// Linear code on the concatenated patches. wx is K x |x|, wy is K x |y|.
Vector ConcatLinearCode(const PatchPair& pair, const Matrix& wx,
                        const Matrix& wy);

/// Bilinear code from the full [|x|, |y|, K] weight tensor.
Vector MappingUnitCode(const PatchPair& pair, const Tensor& w);

Vector FactoredCode(const PatchPair& pair, const FactoredWeights& fw);

Vector EnergyCode(const PatchPair& pair, const FactoredWeights& fw);

/// The per-input quadratic terms sum_f wz_kf [(wx_f . x)^2 + (wy_f . y)^2]
/// that separate EnergyCode from 2 * FactoredCode.
Vector QuadraticTerms(const PatchPair& pair, const FactoredWeights& fw);

/// Quadrature energy detector over 1-D patches of `patch_size` samples:
/// factor 0 uses cos(2 pi frequency i), factor 1 sin(2 pi frequency i), the
/// same rows for x and y, and a single code summing both factors.
FactoredWeights QuadratureWeights(double frequency, int64_t patch_size);

/// A sinusoid of the given amplitude sampled at i + offset, i in [0, n).
Vector Sinusoid(double frequency, double amplitude, double offset,
                int64_t patch_size);

/// Energy response (code 0) to pairs (x, x shifted by s) for each shift s,
/// where x is the sinusoid at `frequency` with `content_amplitude`.
std::vector<double> PhaseResponseCurve(double frequency,
                                       double content_amplitude,
                                       const std::vector<double>& shifts,
                                       const FactoredWeights& quadrature);

}  // namespace artnet::relation
