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

// Checkpoint files. Layout (little-endian):
//   "ARTC" u32 version
//   str arch, i64 classes, i64 base_width, u32 num_stages, i64 in_channels
//   str conventions
//   u32 iteration, f64 lr, u32 decays, u32 evals_without_improvement,
//   f64 best_smoothed, u32 n, n x f64 validation history
//   u32 n, n x tensor record (parameters)
//   u32 n, n x tensor record (buffers)
//   u8 has_velocities, then one record per parameter if set
// Tensor record: str name, u32 rank, rank x i64 extent, f32 payload.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "artnet/architectures.h"
#include "artnet/training.h"

namespace artnet {

struct TensorRecord {
  std::string name;
  Tensor value;
};

struct Checkpoint {
  std::string arch;
  int64_t classes = 0;
  ArchOptions options;
  CountingConventions conventions;
  TrainState state;  // velocities live in `velocities`
  std::vector<TensorRecord> parameters;
  std::vector<TensorRecord> buffers;
  std::vector<TensorRecord> velocities;  // empty or aligned with parameters
};

/// Snapshot of a materialized network built by Build(arch, classes, options).
Checkpoint CaptureCheckpoint(Network& net, const std::string& arch, int64_t classes,
                             const ArchOptions& options, const TrainState* state = nullptr,
                             const CountingConventions& conventions = PinnedConventions());

/// Rebuilds the network and copies every stored tensor into it. Throws
/// IoError when names or shapes disagree with the architecture.
Network RestoreNetwork(const Checkpoint& ckpt);
/// Optimizer state with velocities; lr and counters as saved.
TrainState RestoreTrainState(const Checkpoint& ckpt);

std::vector<uint8_t> SerializeCheckpoint(const Checkpoint& ckpt);
Checkpoint ParseCheckpoint(const std::vector<uint8_t>& bytes);
void SaveCheckpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint LoadCheckpoint(const std::string& path);

}  // namespace artnet
