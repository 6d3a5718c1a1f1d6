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

#include "artnet/data.h"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "artnet/error.h"
#include "binary_io.h"

namespace artnet::data {

namespace {

constexpr uint32_t kDatasetVersion = 1;

// Independent generator streams per sample. Start positions and textures
// never look at the label stream.
enum Stream : uint32_t {
  kLabelStream = 1,
  kTextureStream = 2,
  kStartStream = 3,
  kNoiseStream = 4,
  kNuisanceStream = 5,
  kBankStream = 6,
};

std::mt19937_64 StreamRng(uint64_t seed, int64_t index, Stream stream) {
  std::seed_seq seq{static_cast<uint32_t>(seed), static_cast<uint32_t>(seed >> 32),
                    static_cast<uint32_t>(index),
                    static_cast<uint32_t>(static_cast<uint64_t>(index) >> 32),
                    static_cast<uint32_t>(stream)};
  return std::mt19937_64(seq);
}

int UniformInt(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

int64_t Travel(const TaskSpec& s) { return s.speed * (s.frames - 1); }

}  // namespace

const char* TaskName(TaskKind kind) {
  return kind == TaskKind::kMotion ? "motion" : "appearance";
}

TaskKind ParseTask(const std::string& name) {
  if (name == "motion") return TaskKind::kMotion;
  if (name == "appearance") return TaskKind::kAppearance;
  throw ConfigError("unknown task '" + name + "' (motion, appearance)");
}

void TaskSpec::Validate() const {
  auto fail = [](const std::string& m) { throw ConfigError("task spec: " + m); };
  if (channels != 1 && channels != 3) fail("channels must be 1 or 3");
  if (frames < 2 || height < 1 || width < 1) fail("clip needs >= 2 frames");
  if (patch < 1) fail("patch must be positive");
  if (speed < 0) fail("speed must be non-negative");
  if (motion_kinds != 4 && motion_kinds != 8) fail("motion_kinds must be 4 or 8");
  if (texture_bank < 1) fail("texture bank is empty");
  if (noise_std < 0.0) fail("noise_std must be non-negative");
  if (task == TaskKind::kMotion && classes != motion_kinds) {
    fail("motion task needs classes == motion_kinds");
  }
  if (task == TaskKind::kAppearance && (classes < 2 || classes > texture_bank)) {
    fail("appearance task needs 2 <= classes <= texture_bank");
  }
  const int64_t need = patch + 2 * Travel(*this);
  if (patch > height || patch > width || need > height || need > width) {
    fail("patch of " + std::to_string(patch) + " moving " +
         std::to_string(Travel(*this)) + " px needs frames of at least " +
         std::to_string(need) + " px, got " + std::to_string(height) + "x" +
         std::to_string(width));
  }
}

std::array<int, 2> Direction(int d) {
  static constexpr std::array<std::array<int, 2>, 8> kDirs = {{
      {1, 0}, {-1, 0}, {0, 1}, {0, -1}, {1, 1}, {-1, -1}, {-1, 1}, {1, -1}}};
  if (d < 0 || d >= 8) throw ConfigError("direction index out of range");
  return kDirs[static_cast<size_t>(d)];
}

std::vector<int> HorizontalFlipLabelMap(const TaskSpec& spec) {
  std::vector<int> map(static_cast<size_t>(spec.classes));
  for (int c = 0; c < spec.classes; ++c) {
    map[c] = c;
    if (spec.task != TaskKind::kMotion) continue;
    const auto [dx, dy] = Direction(c);
    for (int o = 0; o < spec.classes; ++o) {
      const auto [ox, oy] = Direction(o);
      if (ox == -dx && oy == dy) map[c] = o;
    }
  }
  return map;
}

std::vector<Tensor> TextureBank(const TaskSpec& spec) {
  const int64_t p = spec.patch;
  std::vector<Tensor> bank;
  for (int k = 0; k < spec.texture_bank; ++k) {
    std::mt19937_64 rng = StreamRng(spec.seed, k, kBankStream);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Tensor tex({spec.channels, p, p});
    for (int64_t c = 0; c < spec.channels; ++c) {
      // A few oriented gratings plus a coarse blotch pattern, squashed into
      // [0.3, 1] so the patch always stands out from the background.
      double fx[3], fy[3], ph[3];
      for (int g = 0; g < 3; ++g) {
        const double angle = unit(rng) * std::numbers::pi;
        const double freq = 0.08 + 0.3 * unit(rng);
        fx[g] = freq * std::cos(angle);
        fy[g] = freq * std::sin(angle);
        ph[g] = 2.0 * std::numbers::pi * unit(rng);
      }
      const double blotch = unit(rng);
      for (int64_t y = 0; y < p; ++y) {
        for (int64_t x = 0; x < p; ++x) {
          double v = 0.0;
          for (int g = 0; g < 3; ++g) {
            v += std::sin(2.0 * std::numbers::pi * (fx[g] * x + fy[g] * y) + ph[g]);
          }
          v = v / 3.0 + 0.3 * unit(rng) * blotch;
          tex.at({c, y, x}) = std::clamp(0.65 + 0.35 * v, 0.3, 1.0);
        }
      }
    }
    bank.push_back(std::move(tex));
  }
  return bank;
}

VideoSample GenerateOne(const TaskSpec& spec, int64_t index) {
  spec.Validate();
  static thread_local TaskSpec cached_spec;
  static thread_local std::vector<Tensor> cached_bank;
  if (cached_bank.empty() || !(cached_spec == spec)) {
    cached_bank = TextureBank(spec);
    cached_spec = spec;
  }

  VideoSample s;
  s.task = spec.task;
  std::mt19937_64 label_rng = StreamRng(spec.seed, index, kLabelStream);
  s.label = UniformInt(label_rng, 0, spec.classes - 1);
  if (spec.task == TaskKind::kMotion) {
    s.direction = s.label;
    std::mt19937_64 tex_rng = StreamRng(spec.seed, index, kTextureStream);
    s.texture = UniformInt(tex_rng, 0, spec.texture_bank - 1);
  } else {
    s.texture = s.label;
    std::mt19937_64 nuisance = StreamRng(spec.seed, index, kNuisanceStream);
    s.direction = UniformInt(nuisance, 0, spec.motion_kinds - 1);
  }

  // Start anywhere the patch can travel `Travel` pixels in any direction.
  const int64_t travel = Travel(spec);
  std::mt19937_64 start_rng = StreamRng(spec.seed, index, kStartStream);
  const int x0 = UniformInt(start_rng, static_cast<int>(travel),
                            static_cast<int>(spec.width - spec.patch - travel));
  const int y0 = UniformInt(start_rng, static_cast<int>(travel),
                            static_cast<int>(spec.height - spec.patch - travel));

  const auto [dx, dy] = Direction(s.direction);
  const Tensor& tex = cached_bank[static_cast<size_t>(s.texture)];
  s.volume = Tensor::Zeros({spec.channels, spec.frames, spec.height, spec.width});
  for (int64_t t = 0; t < spec.frames; ++t) {
    const int64_t ox = x0 + dx * spec.speed * t;
    const int64_t oy = y0 + dy * spec.speed * t;
    for (int64_t c = 0; c < spec.channels; ++c)
      for (int64_t y = 0; y < spec.patch; ++y)
        for (int64_t x = 0; x < spec.patch; ++x)
          s.volume.at({c, t, oy + y, ox + x}) = tex.at({c, y, x});
  }
  if (spec.noise_std > 0.0) {
    std::mt19937_64 noise_rng = StreamRng(spec.seed, index, kNoiseStream);
    std::normal_distribution<double> noise(0.0, spec.noise_std);
    for (double& v : s.volume.data()) v = std::clamp(v + noise(noise_rng), 0.0, 1.0);
  }
  return s;
}

std::vector<VideoSample> Generate(const TaskSpec& spec, int64_t n, int64_t first) {
  spec.Validate();
  if (n < 1) throw ConfigError("generate: need at least one sample");
  std::vector<VideoSample> out;
  out.reserve(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i) out.push_back(GenerateOne(spec, first + i));
  return out;
}

// Augmentation ---------------------------------------------------------------

namespace {

void RequireVolume(const Tensor& v, const char* what) {
  if (v.rank() != 4) {
    throw ShapeError(std::string(what) + " expects [C, T, H, W], got " +
                     ShapeToString(v.shape()));
  }
}

Extent3 ResolveCrop(const Tensor& v, const Extent3& crop) {
  Extent3 e{crop.t ? crop.t : v.shape()[1], crop.h ? crop.h : v.shape()[2],
            crop.w ? crop.w : v.shape()[3]};
  if (e.t > v.shape()[1] || e.h > v.shape()[2] || e.w > v.shape()[3] || e.t < 1 ||
      e.h < 1 || e.w < 1) {
    throw ConfigError("crop " + std::to_string(e.w) + "x" + std::to_string(e.h) +
                      "x" + std::to_string(e.t) + " does not fit volume " +
                      ShapeToString(v.shape()));
  }
  return e;
}

}  // namespace

Tensor ResizeFrames(const Tensor& volume, int64_t height, int64_t width) {
  RequireVolume(volume, "resize");
  if (height < 1 || width < 1) throw ConfigError("resize target must be positive");
  const int64_t c_count = volume.shape()[0], t_count = volume.shape()[1];
  const int64_t in_h = volume.shape()[2], in_w = volume.shape()[3];
  Tensor out({c_count, t_count, height, width});
  auto source = [](int64_t dst, int64_t in, int64_t outn) {
    const double s = (static_cast<double>(dst) + 0.5) * static_cast<double>(in) /
                         static_cast<double>(outn) - 0.5;
    return std::clamp(s, 0.0, static_cast<double>(in - 1));
  };
  for (int64_t c = 0; c < c_count; ++c)
    for (int64_t t = 0; t < t_count; ++t)
      for (int64_t y = 0; y < height; ++y) {
        const double sy = source(y, in_h, height);
        const int64_t y0 = static_cast<int64_t>(sy);
        const int64_t y1 = std::min(y0 + 1, in_h - 1);
        const double fy = sy - static_cast<double>(y0);
        for (int64_t x = 0; x < width; ++x) {
          const double sx = source(x, in_w, width);
          const int64_t x0 = static_cast<int64_t>(sx);
          const int64_t x1 = std::min(x0 + 1, in_w - 1);
          const double fx = sx - static_cast<double>(x0);
          const double top = (1 - fx) * volume.at({c, t, y0, x0}) +
                             fx * volume.at({c, t, y0, x1});
          const double bot = (1 - fx) * volume.at({c, t, y1, x0}) +
                             fx * volume.at({c, t, y1, x1});
          out.at({c, t, y, x}) = (1 - fy) * top + fy * bot;
        }
      }
  return out;
}

Tensor CropVolume(const Tensor& volume, int64_t t0, int64_t y0, int64_t x0,
                  const Extent3& e) {
  RequireVolume(volume, "crop");
  const Shape& s = volume.shape();
  if (t0 < 0 || y0 < 0 || x0 < 0 || t0 + e.t > s[1] || y0 + e.h > s[2] ||
      x0 + e.w > s[3]) {
    throw ConfigError("crop window outside volume " + ShapeToString(s));
  }
  Tensor out({s[0], e.t, e.h, e.w});
  double* dst = out.data().data();
  const double* base = volume.data().data();
  for (int64_t c = 0; c < s[0]; ++c)
    for (int64_t t = 0; t < e.t; ++t)
      for (int64_t y = 0; y < e.h; ++y) {
        const double* src = base + ((c * s[1] + t0 + t) * s[2] + y0 + y) * s[3] + x0;
        dst = std::copy(src, src + e.w, dst);
      }
  return out;
}

Tensor FlipHorizontal(const Tensor& volume) {
  RequireVolume(volume, "flip");
  Tensor out = volume;
  const int64_t w = volume.shape()[3];
  double* d = out.data().data();
  for (int64_t row = 0; row < out.size() / w; ++row) std::reverse(d + row * w, d + (row + 1) * w);
  return out;
}

Tensor SubtractMean(const Tensor& volume, const std::vector<double>& mean) {
  RequireVolume(volume, "mean subtraction");
  if (mean.empty()) return volume;
  if (static_cast<int64_t>(mean.size()) != volume.shape()[0]) {
    throw ConfigError("mean has " + std::to_string(mean.size()) +
                      " entries for " + std::to_string(volume.shape()[0]) +
                      " channels");
  }
  Tensor out = volume;
  const int64_t per = volume.size() / volume.shape()[0];
  for (int64_t c = 0; c < volume.shape()[0]; ++c)
    for (int64_t i = 0; i < per; ++i) out[c * per + i] -= mean[c];
  return out;
}

AugmentedClip Augment(const Tensor& volume, bool train_mode,
                      const AugmentConfig& cfg, std::mt19937_64& rng) {
  RequireVolume(volume, "augment");
  const Tensor resized =
      cfg.resize ? ResizeFrames(volume, (*cfg.resize)[0], (*cfg.resize)[1]) : volume;
  const Extent3 e = ResolveCrop(resized, cfg.crop);
  const int64_t dt = resized.shape()[1] - e.t;
  const int64_t dy = resized.shape()[2] - e.h;
  const int64_t dx = resized.shape()[3] - e.w;
  AugmentedClip out;
  if (train_mode) {
    auto pick = [&rng](int64_t range) {
      return std::uniform_int_distribution<int64_t>(0, range)(rng);
    };
    const int64_t t0 = pick(dt), y0 = pick(dy), x0 = pick(dx);
    out.clip = CropVolume(resized, t0, y0, x0, e);
    if (cfg.flip_prob > 0.0 && std::bernoulli_distribution(cfg.flip_prob)(rng)) {
      out.clip = FlipHorizontal(out.clip);
      out.flipped = true;
    }
  } else {
    out.clip = CropVolume(resized, dt / 2, dy / 2, dx / 2, e);
  }
  out.clip = SubtractMean(out.clip, cfg.mean);
  return out;
}

std::vector<Tensor> TenCrop(const Tensor& clip, int64_t crop_h, int64_t crop_w) {
  RequireVolume(clip, "ten-crop");
  const Extent3 e = ResolveCrop(clip, {clip.shape()[1], crop_h, crop_w});
  const int64_t dy = clip.shape()[2] - e.h, dx = clip.shape()[3] - e.w;
  const std::array<std::array<int64_t, 2>, 5> origins = {
      {{0, 0}, {0, dx}, {dy, 0}, {dy, dx}, {dy / 2, dx / 2}}};
  std::vector<Tensor> crops;
  for (const auto& [y0, x0] : origins) crops.push_back(CropVolume(clip, 0, y0, x0, e));
  for (int i = 0; i < 5; ++i) crops.push_back(FlipHorizontal(crops[i]));
  return crops;
}

Tensor StackClips(const std::vector<Tensor>& clips) {
  if (clips.empty()) throw ContractError("cannot stack zero clips");
  Shape s = clips[0].shape();
  Shape out_shape{static_cast<int64_t>(clips.size())};
  out_shape.insert(out_shape.end(), s.begin(), s.end());
  Tensor out(out_shape);
  double* dst = out.data().data();
  for (const Tensor& c : clips) {
    if (c.shape() != s) throw ShapeError("clips of different shapes cannot be stacked");
    dst = std::copy(c.data().begin(), c.data().end(), dst);
  }
  return out;
}

// Dataset files -----------------------------------------------------------

std::vector<uint8_t> SerializeDataset(const Dataset& ds) {
  ds.spec.Validate();
  io::ByteWriter w;
  w.Magic("ARTD");
  w.U32(kDatasetVersion);
  const TaskSpec& s = ds.spec;
  w.U8(s.task == TaskKind::kMotion ? 1 : 0);
  w.U32(static_cast<uint32_t>(s.classes));
  w.I64(s.channels);
  w.I64(s.frames);
  w.I64(s.height);
  w.I64(s.width);
  w.I64(s.patch);
  w.U32(static_cast<uint32_t>(s.texture_bank));
  w.U32(static_cast<uint32_t>(s.motion_kinds));
  w.U32(static_cast<uint32_t>(s.speed));
  w.F64(s.noise_std);
  w.U64(s.seed);
  w.U64(ds.samples.size());
  const Shape expect{s.channels, s.frames, s.height, s.width};
  for (const VideoSample& v : ds.samples) {
    if (v.volume.shape() != expect) {
      throw ShapeError("dataset sample " + ShapeToString(v.volume.shape()) +
                       " does not match spec " + ShapeToString(expect));
    }
    if (v.label < 0 || v.label >= s.classes || v.label > 255) {
      throw ContractError("label out of range for dataset file");
    }
    for (double x : v.volume.data()) w.F32(static_cast<float>(x));
    w.U8(static_cast<uint8_t>(v.label));
  }
  return std::move(w.bytes());
}

Dataset ParseDataset(const std::vector<uint8_t>& bytes) {
  io::ByteReader r(bytes, "dataset");
  r.ExpectMagic("ARTD");
  const uint32_t version = r.U32();
  if (version != kDatasetVersion) {
    throw IoError("dataset version " + std::to_string(version) + " not supported");
  }
  Dataset ds;
  TaskSpec& s = ds.spec;
  s.task = r.U8() ? TaskKind::kMotion : TaskKind::kAppearance;
  s.classes = static_cast<int>(r.U32());
  s.channels = r.I64();
  s.frames = r.I64();
  s.height = r.I64();
  s.width = r.I64();
  s.patch = r.I64();
  s.texture_bank = static_cast<int>(r.U32());
  s.motion_kinds = static_cast<int>(r.U32());
  s.speed = static_cast<int>(r.U32());
  s.noise_std = r.F64();
  s.seed = r.U64();
  try {
    s.Validate();
  } catch (const ConfigError& e) {
    throw IoError(std::string("dataset header: ") + e.what());
  }
  const uint64_t count = r.U64();
  const Shape shape{s.channels, s.frames, s.height, s.width};
  const int64_t per = NumElements(shape);
  if (r.remaining() != count * static_cast<uint64_t>(per * 4 + 1)) {
    throw IoError("dataset payload size does not match header");
  }
  ds.samples.reserve(count);
  for (uint64_t i = 0; i < count; ++i) {
    VideoSample v;
    v.task = s.task;
    v.volume = Tensor(shape);
    for (double& x : v.volume.data()) x = static_cast<double>(r.F32());
    v.label = r.U8();
    if (v.label >= s.classes) throw IoError("dataset label out of range");
    ds.samples.push_back(std::move(v));
  }
  return ds;
}

void WriteDataset(const std::string& path, const Dataset& ds) {
  io::WriteFile(path, SerializeDataset(ds));
}

Dataset ReadDataset(const std::string& path) {
  return ParseDataset(io::ReadFile(path));
}

}  // namespace artnet::data
