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

#include "artnet/checkpoint.h"

#include <gtest/gtest.h>

#include <filesystem>

namespace artnet {
namespace {

ArchOptions Tiny() {
  ArchOptions o;
  o.base_width = 4;
  o.num_stages = 2;
  o.in_channels = 1;
  return o;
}

data::TaskSpec Task() {
  data::TaskSpec s;
  s.frames = 4;
  s.height = s.width = 16;
  s.patch = 4;
  return s;
}

struct Trained {
  Network net;
  TrainState state;
};

Trained TrainTiny(const std::string& arch, int iters) {
  Network net = Build(arch, 4, Tiny());
  TrainConfig cfg;
  cfg.batch_size = 4;
  cfg.max_iters = iters;
  cfg.eval_every = 2;
  cfg.seed = 1;
  TrainResult r = Train(net, data::Generate(Task(), 8), data::Generate(Task(), 4, 99), cfg);
  return {std::move(net), r.state};
}

TEST(CheckpointTest, SaveLoadSaveIsByteIdentical) {
  for (const std::string arch : {"artnet_r18_d", "c3d_r18", "relation_r18_s"}) {
    Trained t = TrainTiny(arch, 3);
    const Checkpoint c = CaptureCheckpoint(t.net, arch, 4, Tiny(), &t.state);
    const auto bytes = SerializeCheckpoint(c);
    const Checkpoint back = ParseCheckpoint(bytes);
    EXPECT_EQ(SerializeCheckpoint(back), bytes) << arch;

    // Through a rebuilt network as well.
    Network restored = RestoreNetwork(back);
    TrainState state = RestoreTrainState(back);
    EXPECT_EQ(state.iteration, 3);
    EXPECT_EQ(state.val_history, t.state.val_history);
    EXPECT_EQ(SerializeCheckpoint(CaptureCheckpoint(restored, arch, 4, Tiny(), &state)), bytes)
        << arch;
  }
}

TEST(CheckpointTest, HeaderFields) {
  Trained t = TrainTiny("artnet_r18_s", 2);
  const Checkpoint c = ParseCheckpoint(SerializeCheckpoint(
      CaptureCheckpoint(t.net, "artnet_r18_s", 4, Tiny(), &t.state)));
  EXPECT_EQ(c.arch, "artnet_r18_s");
  EXPECT_EQ(c.classes, 4);
  EXPECT_EQ(c.options.base_width, 4);
  EXPECT_EQ(c.options.num_stages, 2);
  EXPECT_EQ(c.options.in_channels, 1);
  EXPECT_EQ(c.conventions, PinnedConventions());
  EXPECT_EQ(c.state.lr, t.state.lr);
  EXPECT_EQ(c.velocities.size(), c.parameters.size());
  EXPECT_FALSE(c.buffers.empty());
  for (size_t i = 0; i < c.parameters.size(); ++i) {
    const Tensor& orig = t.net.Parameters()[i].var->value();
    for (int64_t j = 0; j < orig.size(); ++j) {
      ASSERT_EQ(c.parameters[i].value[j], static_cast<double>(static_cast<float>(orig[j])));
    }
  }
}

TEST(CheckpointTest, RestoredNetworkPredictsLikeTheOriginal) {
  Trained t = TrainTiny("artnet_r18_s", 3);
  Network back = RestoreNetwork(
      ParseCheckpoint(SerializeCheckpoint(CaptureCheckpoint(t.net, "artnet_r18_s", 4, Tiny()))));
  const auto videos = data::Generate(Task(), 6, 50);
  const EvalResult a = QuickEvaluate(t.net, videos, {}, 6);
  const EvalResult b = QuickEvaluate(back, videos, {}, 6);
  EXPECT_NEAR(a.loss, b.loss, 1e-5);  // weights rounded to single precision
}

TEST(CheckpointTest, ResumeContinuesIterationCounter) {
  Trained t = TrainTiny("artnet_r18_s", 3);
  const Checkpoint c = CaptureCheckpoint(t.net, "artnet_r18_s", 4, Tiny(), &t.state);
  Network net = RestoreNetwork(c);
  TrainConfig cfg;
  cfg.batch_size = 4;
  cfg.max_iters = 5;
  cfg.seed = 1;
  TrainResult r = Train(net, data::Generate(Task(), 8), {}, cfg, nullptr, RestoreTrainState(c));
  EXPECT_EQ(r.batch_losses.size(), 2u);
  EXPECT_EQ(r.state.iteration, 5);
}

TEST(CheckpointTest, WithoutStateHasNoVelocities) {
  Network net = Build("c2d_r18", 4, Tiny());
  EXPECT_THROW(CaptureCheckpoint(net, "c2d_r18", 4, Tiny()), ContractError);
  net.Materialize(3);
  const Checkpoint c = ParseCheckpoint(SerializeCheckpoint(CaptureCheckpoint(net, "c2d_r18", 4, Tiny())));
  EXPECT_TRUE(c.velocities.empty());
  EXPECT_EQ(c.state.iteration, 0);
}

TEST(CheckpointTest, MismatchedArchitectureIsRejected) {
  Trained t = TrainTiny("artnet_r18_s", 1);
  Checkpoint c = CaptureCheckpoint(t.net, "artnet_r18_s", 4, Tiny());
  c.arch = "c3d_r18";  // different stem
  EXPECT_THROW(RestoreNetwork(c), IoError);
  c.arch = "artnet_r18_s";
  c.classes = 5;
  EXPECT_THROW(RestoreNetwork(c), IoError);
}

TEST(CheckpointTest, CorruptBytesAreRejected) {
  Network net = Build("c2d_r18", 4, Tiny());
  net.Materialize(3);
  const auto bytes = SerializeCheckpoint(CaptureCheckpoint(net, "c2d_r18", 4, Tiny()));
  auto cut = bytes;
  cut.resize(bytes.size() - 3);
  EXPECT_THROW(ParseCheckpoint(cut), IoError);
  auto extra = bytes;
  extra.push_back(0);
  EXPECT_THROW(ParseCheckpoint(extra), IoError);
  auto magic = bytes;
  magic[1] = 'X';
  EXPECT_THROW(ParseCheckpoint(magic), IoError);
  auto version = bytes;
  version[4] = 2;
  EXPECT_THROW(ParseCheckpoint(version), IoError);
}

TEST(CheckpointTest, FileRoundTrip) {
  const auto path = std::filesystem::temp_directory_path() / "artnet_ckpt_test.bin";
  Network net = Build("artnet_r18_d", 4, Tiny());
  net.Materialize(8);
  const Checkpoint c = CaptureCheckpoint(net, "artnet_r18_d", 4, Tiny());
  SaveCheckpoint(path.string(), c);
  const Checkpoint loaded = LoadCheckpoint(path.string());
  SaveCheckpoint(path.string(), loaded);
  EXPECT_EQ(SerializeCheckpoint(LoadCheckpoint(path.string())), SerializeCheckpoint(c));
  std::filesystem::remove(path);
  EXPECT_THROW(LoadCheckpoint(path.string()), IoError);
}

}  // namespace
}  // namespace artnet
