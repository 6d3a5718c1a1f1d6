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

// Self-check suite behind `artnet verify`: relation identities, gradient
// checks, reference-table shape traces and counts.

#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace artnet::cli {

struct VerifyOptions {
  /// Ten times the random trials and extra gradient-check seeds.
  bool strict = false;
  /// Adds 1e-6 to one side of the energy identity so the suite must fail.
  bool inject_fault = false;
};

struct CheckResult {
  std::string name;
  bool passed = false;
  double max_error = 0.0;
  double tolerance = 0.0;
  std::string detail;
};

std::vector<CheckResult> RunVerifySuite(const VerifyOptions& options);

/// "check=<name> status=pass max_error=... tolerance=..." per check, then a
/// summary line. Returns true when every check passed.
bool PrintVerifyReport(const std::vector<CheckResult>& results, std::ostream& out);

}  // namespace artnet::cli
