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

#include "artnet/error.h"
#include "binary_io.h"

namespace artnet {

namespace {

constexpr uint32_t kCheckpointVersion = 1;
constexpr uint32_t kMaxRecords = 1u << 20;

void WriteRecord(io::ByteWriter& w, const TensorRecord& r) {
  w.Str(r.name);
  w.U32(static_cast<uint32_t>(r.value.rank()));
  for (int64_t e : r.value.shape()) w.I64(e);
  for (double v : r.value.data()) w.F32(static_cast<float>(v));
}

TensorRecord ReadRecord(io::ByteReader& r) {
  TensorRecord rec;
  rec.name = r.Str();
  const uint32_t rank = r.U32();
  if (rank < 1 || rank > static_cast<uint32_t>(Tensor::kMaxRank)) {
    throw IoError("checkpoint: record '" + rec.name + "' has rank " + std::to_string(rank));
  }
  Shape shape;
  for (uint32_t i = 0; i < rank; ++i) {
    const int64_t e = r.I64();
    if (e < 1 || e > (int64_t{1} << 32)) {
      throw IoError("checkpoint: record '" + rec.name + "' has extent " + std::to_string(e));
    }
    shape.push_back(e);
  }
  const int64_t n = NumElements(shape);
  if (r.remaining() < static_cast<size_t>(n) * 4) {
    throw IoError("checkpoint: record '" + rec.name + "' payload is truncated");
  }
  std::vector<double> data(static_cast<size_t>(n));
  for (double& v : data) v = static_cast<double>(r.F32());
  rec.value = Tensor(std::move(shape), std::move(data));
  return rec;
}

void WriteRecords(io::ByteWriter& w, const std::vector<TensorRecord>& records) {
  w.U32(static_cast<uint32_t>(records.size()));
  for (const auto& r : records) WriteRecord(w, r);
}

std::vector<TensorRecord> ReadRecords(io::ByteReader& r) {
  const uint32_t n = r.U32();
  if (n > kMaxRecords) throw IoError("checkpoint: implausible record count");
  std::vector<TensorRecord> out;
  for (uint32_t i = 0; i < n; ++i) out.push_back(ReadRecord(r));
  return out;
}

// Copies records into targets, matching by position and checking name and
// shape.
template <typename Target, typename Get>
void CopyInto(const std::vector<TensorRecord>& records, std::vector<Target>& targets,
              const char* kind, Get get) {
  if (records.size() != targets.size()) {
    throw IoError("checkpoint: " + std::to_string(records.size()) + " " + kind +
                  " records for a network with " + std::to_string(targets.size()));
  }
  for (size_t i = 0; i < records.size(); ++i) {
    Tensor& dst = get(targets[i]);
    if (records[i].name != targets[i].name || records[i].value.shape() != dst.shape()) {
      throw IoError("checkpoint: " + std::string(kind) + " '" + records[i].name + "' " +
                    ShapeToString(records[i].value.shape()) + " does not match '" +
                    targets[i].name + "' " + ShapeToString(dst.shape()));
    }
    dst = records[i].value;
  }
}

}  // namespace

Checkpoint CaptureCheckpoint(Network& net, const std::string& arch, int64_t classes,
                             const ArchOptions& options, const TrainState* state,
                             const CountingConventions& conventions) {
  if (!net.materialized()) throw ContractError("checkpoint of an unmaterialized network");
  Checkpoint c;
  c.arch = arch;
  c.classes = classes;
  c.options = options;
  c.conventions = conventions;
  for (auto& p : net.Parameters()) c.parameters.push_back({p.name, p.var->value()});
  for (auto& b : net.Buffers()) c.buffers.push_back({b.name, *b.tensor});
  if (state) {
    c.state = *state;
    c.state.velocities.clear();
    if (!state->velocities.empty()) {
      if (state->velocities.size() != c.parameters.size()) {
        throw ContractError("checkpoint: velocities do not match parameters");
      }
      for (size_t i = 0; i < c.parameters.size(); ++i) {
        c.velocities.push_back({c.parameters[i].name, state->velocities[i]});
      }
    }
  }
  return c;
}

Network RestoreNetwork(const Checkpoint& ckpt) {
  Network net = Build(ckpt.arch, ckpt.classes, ckpt.options);
  net.Materialize(0);
  auto params = net.Parameters();
  CopyInto(ckpt.parameters, params, "parameter",
           [](NamedParameter& p) -> Tensor& { return p.var->mutable_value(); });
  auto buffers = net.Buffers();
  CopyInto(ckpt.buffers, buffers, "buffer", [](NamedBuffer& b) -> Tensor& { return *b.tensor; });
  net.SetMode(Mode::kEval);
  return net;
}

TrainState RestoreTrainState(const Checkpoint& ckpt) {
  TrainState s = ckpt.state;
  s.velocities.clear();
  for (const auto& v : ckpt.velocities) s.velocities.push_back(v.value);
  return s;
}

std::vector<uint8_t> SerializeCheckpoint(const Checkpoint& c) {
  if (!c.velocities.empty() && c.velocities.size() != c.parameters.size()) {
    throw ContractError("checkpoint: velocities do not match parameters");
  }
  io::ByteWriter w;
  w.Magic("ARTC");
  w.U32(kCheckpointVersion);
  w.Str(c.arch);
  w.I64(c.classes);
  w.I64(c.options.base_width);
  w.U32(static_cast<uint32_t>(c.options.num_stages));
  w.I64(c.options.in_channels);
  w.Str(c.conventions.ToString());
  w.U32(static_cast<uint32_t>(c.state.iteration));
  w.F64(c.state.lr);
  w.U32(static_cast<uint32_t>(c.state.decays));
  w.U32(static_cast<uint32_t>(c.state.evals_without_improvement));
  w.F64(c.state.best_smoothed);
  w.U32(static_cast<uint32_t>(c.state.val_history.size()));
  for (double v : c.state.val_history) w.F64(v);
  WriteRecords(w, c.parameters);
  WriteRecords(w, c.buffers);
  w.U8(c.velocities.empty() ? 0 : 1);
  for (const auto& v : c.velocities) WriteRecord(w, v);
  return std::move(w.bytes());
}

Checkpoint ParseCheckpoint(const std::vector<uint8_t>& bytes) {
  io::ByteReader r(bytes, "checkpoint");
  r.ExpectMagic("ARTC");
  const uint32_t version = r.U32();
  if (version != kCheckpointVersion) {
    throw IoError("checkpoint version " + std::to_string(version) + " not supported");
  }
  Checkpoint c;
  c.arch = r.Str();
  c.classes = r.I64();
  c.options.base_width = r.I64();
  c.options.num_stages = static_cast<int>(r.U32());
  c.options.in_channels = r.I64();
  try {
    c.conventions = ParseConventions(r.Str());
  } catch (const ConfigError& e) {
    throw IoError(std::string("checkpoint: ") + e.what());
  }
  c.state.iteration = static_cast<int>(r.U32());
  c.state.lr = r.F64();
  c.state.decays = static_cast<int>(r.U32());
  c.state.evals_without_improvement = static_cast<int>(r.U32());
  c.state.best_smoothed = r.F64();
  const uint32_t history = r.U32();
  if (history > r.remaining() / 8) throw IoError("checkpoint: truncated");
  for (uint32_t i = 0; i < history; ++i) c.state.val_history.push_back(r.F64());
  c.parameters = ReadRecords(r);
  c.buffers = ReadRecords(r);
  if (r.U8()) {
    for (const auto& p : c.parameters) {
      c.velocities.push_back(ReadRecord(r));
      if (c.velocities.back().name != p.name ||
          c.velocities.back().value.shape() != p.value.shape()) {
        throw IoError("checkpoint: velocity '" + c.velocities.back().name +
                      "' does not match parameter '" + p.name + "'");
      }
    }
  }
  if (!r.done()) throw IoError("checkpoint: trailing bytes");
  return c;
}

void SaveCheckpoint(const std::string& path, const Checkpoint& ckpt) {
  io::WriteFile(path, SerializeCheckpoint(ckpt));
}

Checkpoint LoadCheckpoint(const std::string& path) {
  return ParseCheckpoint(io::ReadFile(path));
}

}  // namespace artnet
