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

#include "artnet_cli/run_config.h"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include "artnet/error.h"

namespace artnet::cli {

namespace {

std::string Trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void Bad(const std::string& key, const std::string& value, const std::string& want) {
  throw ConfigError("'" + key + "': cannot use '" + value + "' (expected " + want + ")");
}

int64_t ToInt(const std::string& key, const std::string& v) {
  int64_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() || v.empty()) Bad(key, v, "an integer");
  return out;
}

uint64_t ToU64(const std::string& key, const std::string& v) {
  uint64_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() || v.empty()) {
    Bad(key, v, "a non-negative integer");
  }
  return out;
}

double ToDouble(const std::string& key, const std::string& v) {
  double out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() || v.empty()) Bad(key, v, "a number");
  return out;
}

int ToSmallInt(const std::string& key, const std::string& v) {
  const int64_t x = ToInt(key, v);
  if (x < -(int64_t{1} << 30) || x > (int64_t{1} << 30)) Bad(key, v, "a smaller integer");
  return static_cast<int>(x);
}

// Shortest text that parses back to the same double.
std::string Num(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

std::vector<double> ToList(const std::string& key, const std::string& v) {
  std::vector<double> out;
  if (v.empty() || v == "none") return out;
  std::stringstream ss(v);
  std::string part;
  while (std::getline(ss, part, ',')) out.push_back(ToDouble(key, Trim(part)));
  return out;
}

std::string FormatList(const std::vector<double>& v) {
  if (v.empty()) return "none";
  std::string out;
  for (size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + Num(v[i]);
  return out;
}

struct Entry {
  std::string key;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define ARTNET_INT_KEY(name, field)                                                \
  Entry{name, [](RunConfig& c, const std::string& v) { c.field = ToSmallInt(name, v); }, \
        [](const RunConfig& c) { return std::to_string(c.field); }}
#define ARTNET_I64_KEY(name, field)                                             \
  Entry{name, [](RunConfig& c, const std::string& v) { c.field = ToInt(name, v); }, \
        [](const RunConfig& c) { return std::to_string(c.field); }}
#define ARTNET_REAL_KEY(name, field)                                               \
  Entry{name, [](RunConfig& c, const std::string& v) { c.field = ToDouble(name, v); }, \
        [](const RunConfig& c) { return Num(c.field); }}
#define ARTNET_STR_KEY(name, field)                                   \
  Entry{name, [](RunConfig& c, const std::string& v) { c.field = v; }, \
        [](const RunConfig& c) { return c.field; }}

const std::vector<Entry>& Schema() {
  static const std::vector<Entry> kSchema = {
      ARTNET_STR_KEY("arch", arch),
      ARTNET_I64_KEY("base_width", options.base_width),
      ARTNET_INT_KEY("num_stages", options.num_stages),
      ARTNET_I64_KEY("in_channels", options.in_channels),

      Entry{"task",
            [](RunConfig& c, const std::string& v) { c.task.task = data::ParseTask(v); },
            [](const RunConfig& c) { return std::string(data::TaskName(c.task.task)); }},
      ARTNET_INT_KEY("classes", task.classes),
      ARTNET_I64_KEY("channels", task.channels),
      ARTNET_I64_KEY("frames", task.frames),
      ARTNET_I64_KEY("height", task.height),
      ARTNET_I64_KEY("width", task.width),
      ARTNET_I64_KEY("patch", task.patch),
      ARTNET_INT_KEY("texture_bank", task.texture_bank),
      ARTNET_INT_KEY("motion_kinds", task.motion_kinds),
      ARTNET_INT_KEY("speed", task.speed),
      ARTNET_REAL_KEY("noise_std", task.noise_std),
      Entry{"data_seed",
            [](RunConfig& c, const std::string& v) { c.task.seed = ToU64("data_seed", v); },
            [](const RunConfig& c) { return std::to_string(c.task.seed); }},
      ARTNET_I64_KEY("samples", samples),

      ARTNET_INT_KEY("batch_size", train.batch_size),
      ARTNET_REAL_KEY("momentum", train.momentum),
      ARTNET_REAL_KEY("lr", train.lr),
      ARTNET_REAL_KEY("lr_decay_factor", train.lr_decay_factor),
      ARTNET_INT_KEY("decay_patience", train.decay_patience),
      ARTNET_REAL_KEY("min_improvement", train.min_improvement),
      ARTNET_INT_KEY("smoothing_window", train.smoothing_window),
      ARTNET_INT_KEY("max_iters", train.max_iters),
      ARTNET_REAL_KEY("dropout_p", train.dropout_p),
      Entry{"seed",
            [](RunConfig& c, const std::string& v) { c.train.seed = ToU64("seed", v); },
            [](const RunConfig& c) { return std::to_string(c.train.seed); }},
      ARTNET_INT_KEY("segments", train.segments),
      ARTNET_I64_KEY("segment_frames", train.segment_frames),
      ARTNET_INT_KEY("eval_every", train.eval_every),
      ARTNET_INT_KEY("log_every", train.log_every),
      ARTNET_REAL_KEY("stop_loss", train.stop_loss),
      ARTNET_INT_KEY("stop_window", train.stop_window),
      Entry{"crop",
            [](RunConfig& c, const std::string& v) { c.train.augment.crop = ParseExtent(v); },
            [](const RunConfig& c) { return FormatExtent(c.train.augment.crop); }},
      Entry{"resize",
            [](RunConfig& c, const std::string& v) {
              if (v == "none") {
                c.train.augment.resize.reset();
                return;
              }
              const auto x = v.find('x');
              if (x == std::string::npos) Bad("resize", v, "HxW or none");
              const int64_t h = ToInt("resize", v.substr(0, x));
              const int64_t w = ToInt("resize", v.substr(x + 1));
              if (h < 1 || w < 1) Bad("resize", v, "positive extents");
              c.train.augment.resize = std::array<int64_t, 2>{h, w};
            },
            [](const RunConfig& c) {
              const auto& r = c.train.augment.resize;
              return r ? std::to_string((*r)[0]) + "x" + std::to_string((*r)[1])
                       : std::string("none");
            }},
      ARTNET_REAL_KEY("flip_prob", train.augment.flip_prob),
      Entry{"mean",
            [](RunConfig& c, const std::string& v) {
              c.train.augment.mean = ToList("mean", v);
              c.eval.mean = c.train.augment.mean;
            },
            [](const RunConfig& c) { return FormatList(c.train.augment.mean); }},

      ARTNET_INT_KEY("eval_clips", eval.clips_per_video),
      ARTNET_INT_KEY("eval_crops", eval.crops_per_clip),
      Entry{"eval_crop",
            [](RunConfig& c, const std::string& v) { c.eval.crop = ParseExtent(v); },
            [](const RunConfig& c) { return FormatExtent(c.eval.crop); }},

      ARTNET_STR_KEY("data", data_path),
      ARTNET_STR_KEY("val_data", val_data_path),
      ARTNET_STR_KEY("out", out_path),
  };
  return kSchema;
}

#undef ARTNET_INT_KEY
#undef ARTNET_I64_KEY
#undef ARTNET_REAL_KEY
#undef ARTNET_STR_KEY

const Entry& Find(const std::string& key) {
  for (const Entry& e : Schema()) {
    if (e.key == key) return e;
  }
  throw ConfigError("unknown config key '" + key + "'");
}

}  // namespace

const char* SourceName(Source s) {
  switch (s) {
    case Source::kDefault:
      return "default";
    case Source::kFile:
      return "file";
    case Source::kFlag:
      return "flag";
  }
  return "?";
}

ArchOptions RunConfig::DeskOptions() {
  ArchOptions o;
  o.base_width = 16;
  o.num_stages = 1;
  o.in_channels = 1;
  return o;
}

const std::vector<std::string>& RunConfigKeys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const Entry& e : Schema()) k.push_back(e.key);
    return k;
  }();
  return keys;
}

data::Extent3 ParseExtent(const std::string& text) {
  std::vector<int64_t> parts;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, 'x')) {
    int64_t v = 0;
    const auto [p, ec] = std::from_chars(part.data(), part.data() + part.size(), v);
    if (ec != std::errc() || p != part.data() + part.size() || part.empty() || v < 0) {
      throw ConfigError("extent '" + text + "' is not TxHxW");
    }
    parts.push_back(v);
  }
  if (text == "0") return {};
  if (parts.size() != 3) throw ConfigError("extent '" + text + "' is not TxHxW");
  return {parts[0], parts[1], parts[2]};
}

std::string FormatExtent(const data::Extent3& e) {
  return std::to_string(e.t) + "x" + std::to_string(e.h) + "x" + std::to_string(e.w);
}

std::vector<std::pair<std::string, std::string>> ParseKeyValueText(const std::string& text,
                                                                   const std::string& origin) {
  std::vector<std::pair<std::string, std::string>> out;
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = Trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = origin + ":" + std::to_string(number);
    if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value'");
    std::string key = Trim(line.substr(0, eq));
    std::string value = Trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(where + ": empty key");
    for (const auto& [k, v] : out) {
      if (k == key) throw ConfigError(where + ": duplicate key '" + key + "'");
    }
    out.emplace_back(std::move(key), std::move(value));
  }
  return out;
}

void ApplySetting(RunConfig& cfg, const std::string& key, const std::string& value,
                  Source source) {
  Find(key).set(cfg, value);
  cfg.sources[key] = source;
}

std::string GetSetting(const RunConfig& cfg, const std::string& key) {
  return Find(key).get(cfg);
}

void ValidateRunConfig(const RunConfig& cfg) {
  cfg.task.Validate();
  cfg.train.Validate();
  cfg.eval.Validate();
  MakeArchSpec(cfg.arch, cfg.task.classes, cfg.options).Validate();
  if (cfg.options.in_channels != cfg.task.channels) {
    throw ConfigError("in_channels (" + std::to_string(cfg.options.in_channels) +
                      ") must match the task's channels (" +
                      std::to_string(cfg.task.channels) + ")");
  }
  if (cfg.samples < 1) throw ConfigError("samples must be >= 1");
}

RunConfig LoadRunConfig(const std::optional<std::string>& file,
                        const std::vector<std::pair<std::string, std::string>>& flags) {
  RunConfig cfg;
  for (const auto& key : RunConfigKeys()) cfg.sources[key] = Source::kDefault;
  if (file) {
    std::ifstream in(*file);
    if (!in) throw ConfigError("cannot read config file '" + *file + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    for (const auto& [k, v] : ParseKeyValueText(buf.str(), *file)) {
      ApplySetting(cfg, k, v, Source::kFile);
    }
  }
  for (const auto& [k, v] : flags) ApplySetting(cfg, k, v, Source::kFlag);
  cfg.task.Validate();
  cfg.train.flip_label_map = data::HorizontalFlipLabelMap(cfg.task);
  cfg.eval.flip_label_map = cfg.train.flip_label_map;
  ValidateRunConfig(cfg);
  return cfg;
}

std::string DescribeRunConfig(const RunConfig& cfg) {
  std::string out;
  for (const auto& key : RunConfigKeys()) {
    const auto it = cfg.sources.find(key);
    const Source s = it == cfg.sources.end() ? Source::kDefault : it->second;
    out += key + " = " + GetSetting(cfg, key) + "  # " + SourceName(s) + "\n";
  }
  return out;
}

}  // namespace artnet::cli
