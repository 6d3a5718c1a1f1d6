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

// Synthetic clips that pull appearance and motion apart. A textured patch
// on a dark background translates at a fixed speed:
//   motion task      label = direction, texture drawn uniformly
//   appearance task  label = texture,   direction drawn uniformly
// Volumes are [C, T, H, W] with values in [0, 1].

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "artnet/tensor.h"

namespace artnet::data {

enum class TaskKind { kAppearance, kMotion };

const char* TaskName(TaskKind kind);
/// "motion" or "appearance"; throws ConfigError otherwise.
TaskKind ParseTask(const std::string& name);

struct TaskSpec {
  TaskKind task = TaskKind::kMotion;
  int classes = 4;
  int64_t channels = 1;
  int64_t frames = 8;
  int64_t height = 32;
  int64_t width = 32;
  int64_t patch = 8;
  int texture_bank = 8;
  int motion_kinds = 4;  // 4 (axis-aligned) or 8 (with diagonals)
  int speed = 1;         // pixels per frame
  double noise_std = 0.05;
  uint64_t seed = 0;

  /// Throws ConfigError on inconsistent fields, including a patch whose
  /// trajectory cannot fit in the frame.
  void Validate() const;
  bool operator==(const TaskSpec&) const = default;
};

/// Unit displacement (dx, dy) for direction index d:
/// 0 right, 1 left, 2 down, 3 up, 4 down-right, 5 up-left, 6 down-left,
/// 7 up-right.
std::array<int, 2> Direction(int d);

/// Label permutation induced by a horizontal flip. Identity for the
/// appearance task; swaps the x component of directions for motion.
std::vector<int> HorizontalFlipLabelMap(const TaskSpec& spec);

struct VideoSample {
  Tensor volume;  // [C, T, H, W]
  int label = 0;
  TaskKind task = TaskKind::kMotion;
  int texture = 0;
  int direction = 0;
};

/// The procedural texture bank: `texture_bank` patches of [C, patch, patch].
std::vector<Tensor> TextureBank(const TaskSpec& spec);

/// Deterministic in (spec, index); samples [first, first + n) of the stream.
std::vector<VideoSample> Generate(const TaskSpec& spec, int64_t n,
                                  int64_t first = 0);
VideoSample GenerateOne(const TaskSpec& spec, int64_t index);

// Augmentation ---------------------------------------------------------------

struct Extent3 {
  int64_t t = 0;
  int64_t h = 0;
  int64_t w = 0;
  bool operator==(const Extent3&) const = default;
};

struct AugmentConfig {
  Extent3 crop;                          // zero fields mean "full extent"
  std::optional<std::array<int64_t, 2>> resize;  // frames resized to (h, w) first
  double flip_prob = 0.5;
  std::vector<double> mean;  // per channel; empty means no subtraction
};

/// Bilinear resize of every frame of a [C, T, H, W] volume (align-corners
/// off, half-pixel centres).
Tensor ResizeFrames(const Tensor& volume, int64_t height, int64_t width);
Tensor CropVolume(const Tensor& volume, int64_t t0, int64_t y0, int64_t x0,
                  const Extent3& extent);
Tensor FlipHorizontal(const Tensor& volume);
Tensor SubtractMean(const Tensor& volume, const std::vector<double>& mean);

struct AugmentedClip {
  Tensor clip;
  bool flipped = false;
};

/// Train mode: random spatiotemporal crop, flip with flip_prob, mean
/// subtraction. Eval mode: centre crop only. Throws ConfigError when the crop
/// exceeds the (resized) volume.
AugmentedClip Augment(const Tensor& volume, bool train_mode,
                      const AugmentConfig& cfg, std::mt19937_64& rng);

/// Four corners, centre, then the horizontal flips of those five. The
/// temporal extent of `clip` is kept.
std::vector<Tensor> TenCrop(const Tensor& clip, int64_t crop_h, int64_t crop_w);

// Dataset files -----------------------------------------------------------

struct Dataset {
  TaskSpec spec;
  std::vector<VideoSample> samples;
};

/// Flat binary: magic, version, spec fields, count, then per sample the
/// volume as little-endian float32 followed by one label byte.
std::vector<uint8_t> SerializeDataset(const Dataset& ds);
Dataset ParseDataset(const std::vector<uint8_t>& bytes);
void WriteDataset(const std::string& path, const Dataset& ds);
Dataset ReadDataset(const std::string& path);

/// Stacks [C, T, H, W] clips into [N, C, T, H, W].
Tensor StackClips(const std::vector<Tensor>& clips);

}  // namespace artnet::data
