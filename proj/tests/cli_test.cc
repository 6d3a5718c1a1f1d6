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

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "artnet/checkpoint.h"
#include "artnet/error.h"
#include "artnet_cli/bench.h"
#include "artnet_cli/cli.h"
#include "artnet_cli/run_config.h"
#include "artnet_cli/verify.h"

namespace artnet::cli {
namespace {

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

CliRun Cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = RunCli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string Temp(const std::string& name) { return ::testing::TempDir() + "artnet_cli_" + name; }

std::string WriteText(const std::string& name, const std::string& text) {
  const std::string path = Temp(name);
  std::ofstream(path) << text;
  return path;
}

std::string Slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

const std::vector<std::string> kTiny = {"--set", "frames=4",  "--set", "height=16",
                                        "--set", "width=16",  "--set", "patch=4"};

std::vector<std::string> With(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

// run config ----------------------------------------------------------------

TEST(RunConfigTest, PrecedenceIsDefaultThenFileThenFlag) {
  const std::string file = WriteText("prec.cfg",
                                     "# tiny\n"
                                     "lr = 0.05   # trailing\n"
                                     "max_iters = 7\n"
                                     "\n");
  const RunConfig cfg = LoadRunConfig(file, {{"lr", "0.2"}});
  EXPECT_DOUBLE_EQ(cfg.train.lr, 0.2);
  EXPECT_EQ(cfg.sources.at("lr"), Source::kFlag);
  EXPECT_EQ(cfg.train.max_iters, 7);
  EXPECT_EQ(cfg.sources.at("max_iters"), Source::kFile);
  EXPECT_EQ(cfg.sources.at("momentum"), Source::kDefault);
  EXPECT_DOUBLE_EQ(cfg.train.momentum, TrainConfig{}.momentum);
  const std::string d = DescribeRunConfig(cfg);
  EXPECT_NE(d.find("lr = 0.2  # flag"), std::string::npos) << d;
  EXPECT_NE(d.find("max_iters = 7  # file"), std::string::npos) << d;
}

TEST(RunConfigTest, EveryKeyRoundTripsThroughGetAndApply) {
  const RunConfig base = LoadRunConfig(std::nullopt, {});
  for (const auto& key : RunConfigKeys()) {
    RunConfig c = base;
    const std::string v = GetSetting(base, key);
    ApplySetting(c, key, v, Source::kFlag);
    EXPECT_EQ(GetSetting(c, key), v) << key;
  }
}

TEST(RunConfigTest, UnknownKeysAndMalformedLinesAreRejected) {
  EXPECT_THROW(LoadRunConfig(std::nullopt, {{"learning_rate", "0.1"}}), ConfigError);
  try {
    ParseKeyValueText("lr = 0.1\nnot a pair\n", "x.cfg");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("x.cfg:2"), std::string::npos) << e.what();
  }
  EXPECT_THROW(ParseKeyValueText("lr = 0.1\nlr = 0.2\n", "x.cfg"), ConfigError);
  EXPECT_THROW(LoadRunConfig(std::nullopt, {{"lr", "fast"}}), ConfigError);
  EXPECT_THROW(LoadRunConfig(std::string("/nonexistent/run.cfg"), {}), ConfigError);
}

TEST(RunConfigTest, CrossFieldChecks) {
  EXPECT_THROW(LoadRunConfig(std::nullopt, {{"channels", "3"}}), ConfigError);
  EXPECT_NO_THROW(LoadRunConfig(std::nullopt, {{"channels", "3"}, {"in_channels", "3"}}));
  EXPECT_THROW(LoadRunConfig(std::nullopt, {{"arch", "resnet50"}}), ConfigError);
}

TEST(RunConfigTest, Extents) {
  const data::Extent3 e = ParseExtent("16x112x112");
  EXPECT_EQ(e.t, 16);
  EXPECT_EQ(e.h, 112);
  EXPECT_EQ(e.w, 112);
  EXPECT_EQ(FormatExtent(e), "16x112x112");
  EXPECT_THROW(ParseExtent("16x112"), ConfigError);
  EXPECT_THROW(ParseExtent("ax1x1"), ConfigError);
}

// generate ------------------------------------------------------------------

TEST(CliGenerateTest, ZeroSamplesIsAConfigError) {
  const CliRun r = Cli({"generate", "--n", "0", "--out", Temp("zero.bin")});
  EXPECT_EQ(r.code, kExitConfig);
  EXPECT_NE(r.err.find("samples"), std::string::npos);
}

TEST(CliGenerateTest, RegenerationIsByteIdentical) {
  const auto a = Temp("gen_a.bin"), b = Temp("gen_b.bin");
  ASSERT_EQ(Cli(With({"generate", "--n", "24", "--seed", "5", "--out", a}, kTiny)).code, kExitOk);
  ASSERT_EQ(Cli(With({"generate", "--n", "24", "--seed", "5", "--out", b}, kTiny)).code, kExitOk);
  EXPECT_EQ(Slurp(a), Slurp(b));
  const auto c = Temp("gen_c.bin");
  ASSERT_EQ(Cli(With({"generate", "--n", "24", "--seed", "6", "--out", c}, kTiny)).code, kExitOk);
  EXPECT_NE(Slurp(a), Slurp(c));
}

TEST(CliGenerateTest, HistogramIsWithinThreeSigma) {
  const int n = 800, k = 8;
  const CliRun r = Cli(
      With({"generate", "--n", std::to_string(n), "--classes", "8", "--out", Temp("h.bin")}, kTiny));
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto pos = r.out.find("histogram=");
  ASSERT_NE(pos, std::string::npos);
  std::stringstream s(r.out.substr(pos + 10));
  const double p = 1.0 / k, sigma = std::sqrt(n * p * (1 - p));
  int total = 0;
  for (int c = 0; c < k; ++c) {
    int count = 0;
    char sep;
    s >> count;
    if (c + 1 < k) s >> sep;
    total += count;
    EXPECT_LE(std::abs(count - n * p), 3 * sigma) << "class " << c;
  }
  EXPECT_EQ(total, n);
}

// analyze -------------------------------------------------------------------

TEST(CliAnalyzeTest, TraceAndReferenceDeviation) {
  const CliRun r = Cli({"analyze", "--arch", "artnet_r18_s"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("7 x 7 x 1 -> 1 x 1 x 1"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("conventions=macs_as_one,no_bias_before_bn,bn (pinned)"),
            std::string::npos);
  EXPECT_NE(r.out.find("deviation_params_pct="), std::string::npos);
}

TEST(CliAnalyzeTest, NoReferenceLineAwayFromTheReferenceInput) {
  const CliRun r = Cli({"analyze", "--arch", "c3d_r18", "--input", "8x56x56"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(r.out.find("reference"), std::string::npos);
}

TEST(CliAnalyzeTest, UnknownArchListsValidNames) {
  const CliRun r = Cli({"analyze", "--arch", "resnet50"});
  EXPECT_EQ(r.code, kExitConfig);
  for (const auto& name : ArchitectureNames()) {
    EXPECT_NE(r.err.find(name), std::string::npos) << name;
  }
}

TEST(CliAnalyzeTest, BadConventionAndMissingArch) {
  EXPECT_EQ(Cli({"analyze", "--arch", "c2d_r18", "--convention", "flops"}).code, kExitConfig);
  EXPECT_EQ(Cli({"analyze"}).code, kExitConfig);
  EXPECT_EQ(Cli({}).code, kExitConfig);
  EXPECT_EQ(Cli({"--help"}).code, kExitOk);
}

// verify --------------------------------------------------------------------

TEST(CliVerifyTest, PassesAndFailsUnderInjectedFault) {
  const CliRun ok = Cli({"verify"});
  EXPECT_EQ(ok.code, kExitOk) << ok.out;
  EXPECT_EQ(ok.out.find("status=FAIL"), std::string::npos);
  const CliRun bad = Cli({"verify", "--inject-fault"});
  EXPECT_EQ(bad.code, kExitFailure);
  EXPECT_NE(bad.out.find("check=identity.energy_eq_2factored_plus_quadratic status=FAIL"),
            std::string::npos)
      << bad.out;
}

// bench ---------------------------------------------------------------------

TEST(CliBenchTest, RepeatsAreChecked) {
  EXPECT_EQ(Cli({"bench", "--repeats", "0"}).code, kExitConfig);
  const CliRun r = Cli({"bench", "--block", "conv3d", "--shape", "1x4x2x8x8", "--repeats", "1",
                     "--warmup", "0"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("noisy=1"), std::string::npos) << r.out;
  EXPECT_NE(r.err.find("noisy"), std::string::npos);
  EXPECT_EQ(Cli({"bench", "--block", "lstm", "--shape", "1x4x2x8x8"}).code, kExitConfig);
  EXPECT_EQ(Cli({"bench", "--shape", "4x8"}).code, kExitConfig);
}

TEST(CliBenchTest, AllPrintsRatios) {
  const CliRun r = Cli({"bench", "--block", "all", "--shape", "1x4x2x8x8", "--repeats", "2",
                     "--warmup", "0"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("ratio=smart/conv3d"), std::string::npos) << r.out;
}

TEST(BenchTest, ForwardFlopsMatchAHandCount) {
  // conv3d unit: one 3x3x3 conv, C -> C, padding 1, no bias before BN.
  EXPECT_DOUBLE_EQ(BenchForwardFlops("conv3d", {2, 4, 2, 5, 5}), 2.0 * (4 * 27 * 4) * (2 * 5 * 5));
}

// train / eval --------------------------------------------------------------

class CliTrainTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    ASSERT_EQ(Cli(With({"generate", "--n", "48", "--seed", "11", "--out", Temp("tr.bin")}, kTiny))
                  .code,
              kExitOk);
    ASSERT_EQ(Cli(With({"generate", "--n", "16", "--seed", "12", "--out", Temp("va.bin")}, kTiny))
                  .code,
              kExitOk);
  }

  static std::vector<std::string> TrainArgs(const std::string& out, int iters) {
    return {"train",           "--data",  Temp("tr.bin"), "--val-data",
            Temp("va.bin"),    "--out",   out,            "--set",
            "base_width=4",    "--set",   "batch_size=8", "--set",
            "eval_every=5",    "--set",   "max_iters=" + std::to_string(iters)};
  }
};

TEST_F(CliTrainTest, SeededRunsWriteIdenticalCheckpoints) {
  const auto a = Temp("a.ckpt"), b = Temp("b.ckpt");
  const CliRun ra = Cli(TrainArgs(a, 10));
  ASSERT_EQ(ra.code, kExitOk) << ra.err;
  const CliRun rb = Cli(TrainArgs(b, 10));
  ASSERT_EQ(rb.code, kExitOk) << rb.err;
  EXPECT_EQ(ra.out.substr(0, ra.out.rfind("final=")), rb.out.substr(0, rb.out.rfind("final=")));
  EXPECT_EQ(Slurp(a), Slurp(b));
  EXPECT_FALSE(Slurp(a + ".best").empty());
  EXPECT_NE(ra.out.find("split=val"), std::string::npos);
}

TEST_F(CliTrainTest, ResumeContinuesTheIterationCounter) {
  const auto a = Temp("r1.ckpt"), b = Temp("r2.ckpt");
  ASSERT_EQ(Cli(TrainArgs(a, 5)).code, kExitOk);
  auto args = TrainArgs(b, 8);
  args.insert(args.end(), {"--resume", a});
  const CliRun r = Cli(args);
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("resume=" + a), std::string::npos);
  EXPECT_NE(r.out.find("iteration=5"), std::string::npos);
  EXPECT_EQ(r.out.find("iter=5 "), std::string::npos) << r.out;
  EXPECT_EQ(LoadCheckpoint(b).state.iteration, 8);
}

TEST_F(CliTrainTest, EvalReportsAllVideos) {
  const auto a = Temp("e.ckpt");
  ASSERT_EQ(Cli(TrainArgs(a, 5)).code, kExitOk);
  const CliRun r = Cli({"eval", "--checkpoint", a + ".best", "--data", Temp("va.bin"), "--clips", "2",
                     "--crops", "1"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("videos=16 volumes=32"), std::string::npos) << r.out;
  EXPECT_EQ(Cli({"eval", "--checkpoint", Temp("missing.ckpt"), "--data", Temp("va.bin")}).code,
            kExitFailure);
}

TEST_F(CliTrainTest, MissingDataIsAConfigError) {
  EXPECT_EQ(Cli({"train", "--out", Temp("x.ckpt")}).code, kExitConfig);
  EXPECT_EQ(Cli({"train", "--data", Temp("tr.bin")}).code, kExitConfig);
}

}  // namespace
}  // namespace artnet::cli
