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

#include "artnet_cli/bench.h"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <random>
#include <sstream>
#include <vector>

#include "artnet/error.h"
#include "artnet/ops.h"

namespace artnet::cli {

namespace {

ConvSpec Unit3x3x3(int64_t channels) {
  ConvSpec s;
  s.kernel = 3;
  s.temporal_kernel = 3;
  s.spatial_pad = 1;
  s.temporal_pad = 1;
  s.out_channels = channels;
  return s;
}

}  // namespace

std::unique_ptr<Module> MakeBenchUnit(const std::string& block, int64_t channels) {
  const ConvSpec s = Unit3x3x3(channels);
  if (block == "conv3d") return MakeUnit(UnitKind::kConv3d, channels, s, true);
  if (block == "smart") return MakeUnit(UnitKind::kSmart, channels, s, true);
  if (block == "relation") return MakeUnit(UnitKind::kRelation, channels, s, true);
  throw ConfigError("unknown bench block '" + block + "' (conv3d, smart, relation)");
}

double BenchForwardFlops(const std::string& block, const Shape& shape) {
  auto unit = MakeBenchUnit(block, shape[1]);
  std::vector<LayerRecord> records;
  Shape one = shape;
  one[0] = 1;
  unit->Describe(block, one, records);
  double macs = 0.0;
  for (const auto& r : records) macs += static_cast<double>(r.macs);
  return macs * static_cast<double>(shape[0]);
}

Shape ParseBenchShape(const std::string& text) {
  Shape s;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, 'x')) {
    int64_t v = 0;
    const auto [p, ec] = std::from_chars(part.data(), part.data() + part.size(), v);
    if (ec != std::errc() || p != part.data() + part.size() || v < 1) {
      throw ConfigError("bench shape '" + text + "' is not NxCxTxHxW");
    }
    s.push_back(v);
  }
  if (s.size() == 4) s.insert(s.begin(), 1);
  if (s.size() != 5) throw ConfigError("bench shape '" + text + "' is not NxCxTxHxW");
  return s;
}

BenchResult RunBench(const BenchOptions& o) {
  if (o.repeats < 1) throw ConfigError("bench repeats must be >= 1");
  if (o.warmup < 0) throw ConfigError("bench warm-up runs must be >= 0");
  if (o.shape.size() != 5) throw ConfigError("bench shape must be NxCxTxHxW");
  auto unit = MakeBenchUnit(o.block, o.shape[1]);
  unit->OutputShape(o.shape);  // throws ShapeError on a bad shape
  std::mt19937_64 rng(0);
  unit->Materialize(rng);
  unit->SetMode(Mode::kTrain);
  Tensor input(o.shape);
  std::normal_distribution<double> d;
  for (double& v : input.data()) v = d(rng);

  auto once = [&] {
    Var x(input, true);
    Backward(Sum(unit->Forward(x, {Mode::kTrain, &rng})));
    std::vector<NamedParameter> params;
    unit->CollectParameters("u", params);
    for (auto& p : params) p.var->ZeroGrad();
  };
  for (int i = 0; i < o.warmup; ++i) once();
  std::vector<double> times;
  for (int i = 0; i < o.repeats; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    once();
    times.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  std::sort(times.begin(), times.end());
  const size_t n = times.size();
  BenchResult r;
  r.block = o.block;
  r.shape = o.shape;
  r.repeats = o.repeats;
  r.warmup = o.warmup;
  r.median_seconds = n % 2 ? times[n / 2] : 0.5 * (times[n / 2 - 1] + times[n / 2]);
  r.forward_flops = BenchForwardFlops(o.block, o.shape);
  r.gflops_per_second = 3.0 * r.forward_flops / r.median_seconds / 1e9;
  r.noisy = o.repeats == 1;
  return r;
}

std::string FormatBenchResult(const BenchResult& r) {
  std::ostringstream os;
  os << "block=" << r.block << " shape=";
  for (size_t i = 0; i < r.shape.size(); ++i) os << (i ? "x" : "") << r.shape[i];
  os << " repeats=" << r.repeats << " warmup=" << r.warmup << " threads=" << r.threads
     << " median_ms=" << r.median_seconds * 1e3 << " forward_gflops=" << r.forward_flops / 1e9
     << " gflops_per_s=" << r.gflops_per_second << " noisy=" << (r.noisy ? 1 : 0);
  return os.str();
}

}  // namespace artnet::cli
