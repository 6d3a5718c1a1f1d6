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

// Merged run settings: task, architecture, training and evaluation knobs.
// Sources in increasing priority: built-in default, config file, flag.
//
// File format:
//   # comment
//   key = value      # trailing comments allowed
// Lists (mean) are comma separated; extents are TxHxW.

#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "artnet/architectures.h"
#include "artnet/data.h"
#include "artnet/training.h"

namespace artnet::cli {

enum class Source { kDefault, kFile, kFlag };
const char* SourceName(Source s);

struct RunConfig {
  std::string arch = "artnet_r18_s";
  ArchOptions options = DeskOptions();
  data::TaskSpec task;
  int64_t samples = 512;
  TrainConfig train;
  EvalConfig eval;
  std::string data_path;
  std::string val_data_path;
  std::string out_path;

  /// Where each key's current value came from.
  std::map<std::string, Source> sources;

  /// base_width 16, one stage, single-channel input.
  static ArchOptions DeskOptions();
};

/// Every accepted key, in file order.
const std::vector<std::string>& RunConfigKeys();

/// Parses `key = value` lines. Throws ConfigError naming `origin` and the
/// line for malformed lines and duplicate keys.
std::vector<std::pair<std::string, std::string>> ParseKeyValueText(
    const std::string& text, const std::string& origin);

/// Sets one key. Throws ConfigError for unknown keys and bad values.
void ApplySetting(RunConfig& cfg, const std::string& key, const std::string& value,
                  Source source);

/// Current value of a key, formatted as it would appear in a file.
std::string GetSetting(const RunConfig& cfg, const std::string& key);

/// Defaults, then `file` (if any), then `flags`; validates the result.
RunConfig LoadRunConfig(const std::optional<std::string>& file,
                        const std::vector<std::pair<std::string, std::string>>& flags);

/// One "key = value  # source" line per key.
std::string DescribeRunConfig(const RunConfig& cfg);

/// Cross-field checks (task, train, eval).
void ValidateRunConfig(const RunConfig& cfg);

/// "16x112x112" -> {16, 112, 112}. Throws ConfigError.
data::Extent3 ParseExtent(const std::string& text);
std::string FormatExtent(const data::Extent3& e);

}  // namespace artnet::cli
