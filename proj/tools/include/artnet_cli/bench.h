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

// Forward + backward timing of a single 3x3x3 unit: plain conv3d, SMART
// block or relation branch, with FLOPs taken from the analyzer.

#pragma once

#include <memory>
#include <ostream>
#include <string>

#include "artnet/blocks.h"

namespace artnet::cli {

struct BenchOptions {
  std::string block = "smart";  // conv3d, smart, relation
  Shape shape{1, 64, 4, 28, 28};  // N, C, T, H, W
  int repeats = 20;
  int warmup = 3;
};

struct BenchResult {
  std::string block;
  Shape shape;
  int repeats = 0;
  int warmup = 0;
  int threads = 1;
  double median_seconds = 0.0;
  double forward_flops = 0.0;  // analyzer, multiply-accumulates as one
  double gflops_per_second = 0.0;  // forward + backward (3x forward)
  bool noisy = false;
};

/// Unit of `kind` mapping C channels to C channels at stride 1.
std::unique_ptr<Module> MakeBenchUnit(const std::string& block, int64_t channels);

/// Analyzer FLOPs of one forward pass over the whole batch.
double BenchForwardFlops(const std::string& block, const Shape& shape);

/// Throws ConfigError for repeats < 1, unknown blocks or bad shapes.
BenchResult RunBench(const BenchOptions& options);

/// "1x64x4x28x28" or "64x4x28x28" (N = 1).
Shape ParseBenchShape(const std::string& text);

/// block=... shape=... repeats=... median_ms=... ... as one line.
std::string FormatBenchResult(const BenchResult& r);

}  // namespace artnet::cli
