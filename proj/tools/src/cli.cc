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

#include "artnet_cli/cli.h"

#include <CLI11.hpp>

#include <cmath>
#include <iomanip>
#include <optional>

#include "artnet/checkpoint.h"
#include "artnet/error.h"
#include "artnet_cli/bench.h"
#include "artnet_cli/run_config.h"
#include "artnet_cli/verify.h"

namespace artnet::cli {

namespace {

using Settings = std::vector<std::pair<std::string, std::string>>;

// Shared --config / --set handling.
struct ConfigFlags {
  std::string config_file;
  std::vector<std::string> sets;

  void Attach(CLI::App* app) {
    app->add_option("--config", config_file, "key = value config file");
    app->add_option("--set", sets, "override one key (key=value), repeatable");
  }

  RunConfig Load(Settings flags) const {
    Settings all;
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + s + "'");
      all.emplace_back(s.substr(0, eq), s.substr(eq + 1));
    }
    // Named flags win over --set.
    all.insert(all.end(), flags.begin(), flags.end());
    return LoadRunConfig(config_file.empty() ? std::nullopt
                                             : std::optional<std::string>(config_file),
                         all);
  }
};

template <typename T>
void AddIfSet(Settings& s, const std::string& key, const std::optional<T>& v) {
  if (!v) return;
  if constexpr (std::is_same_v<T, std::string>) {
    s.emplace_back(key, *v);
  } else {
    s.emplace_back(key, std::to_string(*v));
  }
}

std::string ShapeText(const Shape& s) {
  std::string out;
  for (size_t i = 0; i < s.size(); ++i) out += (i ? "x" : "") + std::to_string(s[i]);
  return out;
}

// generate -----------------------------------------------------------------

struct GenerateArgs {
  ConfigFlags cfg;
  std::optional<std::string> task, out;
  std::optional<int> classes;
  std::optional<int64_t> n;
  std::optional<uint64_t> seed;
};

int Generate(const GenerateArgs& a, std::ostream& out) {
  Settings flags;
  AddIfSet(flags, "task", a.task);
  if (a.classes) {
    flags.emplace_back("classes", std::to_string(*a.classes));
    // A motion task has one class per direction.
    if (a.task.value_or("motion") == "motion" && (*a.classes == 4 || *a.classes == 8)) {
      flags.emplace_back("motion_kinds", std::to_string(*a.classes));
    }
  }
  AddIfSet(flags, "samples", a.n);
  AddIfSet(flags, "data_seed", a.seed);
  AddIfSet(flags, "out", a.out);
  RunConfig cfg = a.cfg.Load(flags);
  if (cfg.out_path.empty()) throw ConfigError("generate needs --out");

  data::Dataset ds{cfg.task, data::Generate(cfg.task, cfg.samples)};
  const auto bytes = data::SerializeDataset(ds);
  data::WriteDataset(cfg.out_path, ds);
  std::vector<int64_t> hist(static_cast<size_t>(cfg.task.classes), 0);
  for (const auto& s : ds.samples) ++hist[s.label];
  out << "wrote=" << cfg.out_path << " task=" << data::TaskName(cfg.task.task)
      << " count=" << ds.samples.size() << " classes=" << cfg.task.classes
      << " bytes=" << bytes.size() << "\n";
  out << "histogram=";
  for (size_t c = 0; c < hist.size(); ++c) out << (c ? "," : "") << hist[c];
  out << "\n";
  return kExitOk;
}

// train --------------------------------------------------------------------

struct TrainArgs {
  ConfigFlags cfg;
  std::optional<std::string> arch, data, val_data, out, resume;
  std::optional<int> segments;
};

int TrainCmd(const TrainArgs& a, std::ostream& out) {
  Settings flags;
  AddIfSet(flags, "arch", a.arch);
  AddIfSet(flags, "data", a.data);
  AddIfSet(flags, "val_data", a.val_data);
  AddIfSet(flags, "segments", a.segments);
  AddIfSet(flags, "out", a.out);

  // The dataset header decides the task; read it before validating.
  RunConfig cfg;
  {
    ConfigFlags probe = a.cfg;
    RunConfig first = probe.Load(flags);
    if (first.data_path.empty()) throw ConfigError("train needs --data");
    if (first.out_path.empty()) throw ConfigError("train needs --out");
    cfg = std::move(first);
  }
  const data::Dataset train = data::ReadDataset(cfg.data_path);
  data::Dataset val;
  if (!cfg.val_data_path.empty()) {
    val = data::ReadDataset(cfg.val_data_path);
    if (!(val.spec.channels == train.spec.channels && val.spec.classes == train.spec.classes &&
          val.spec.task == train.spec.task)) {
      throw ConfigError("validation set does not match the training set's task");
    }
  }
  cfg.task = train.spec;
  if (cfg.sources["in_channels"] == Source::kDefault) cfg.options.in_channels = cfg.task.channels;
  cfg.train.flip_label_map = data::HorizontalFlipLabelMap(cfg.task);
  ValidateRunConfig(cfg);

  Network net = Build(cfg.arch, cfg.task.classes, cfg.options);
  TrainState state;
  std::string arch = cfg.arch;
  ArchOptions options = cfg.options;
  if (a.resume) {
    const Checkpoint c = LoadCheckpoint(*a.resume);
    if (c.classes != cfg.task.classes) {
      throw ConfigError("checkpoint has " + std::to_string(c.classes) + " classes, data has " +
                        std::to_string(cfg.task.classes));
    }
    net = RestoreNetwork(c);
    state = RestoreTrainState(c);
    arch = c.arch;
    options = c.options;
    out << "resume=" << *a.resume << " arch=" << arch << " iteration=" << state.iteration
        << "\n";
  } else {
    net.Materialize(cfg.train.seed);
  }

  const std::string best_path = cfg.out_path + ".best";
  double best_loss = INFINITY;
  int best_iter = -1;
  auto sink = [&](const LogRecord& r) {
    out << FormatLogRecord(r) << "\n";
    if (r.split == "val" && r.loss < best_loss) {
      best_loss = r.loss;
      best_iter = r.iter;
      Checkpoint c = CaptureCheckpoint(net, arch, cfg.task.classes, options);
      c.state.iteration = r.iter;
      SaveCheckpoint(best_path, c);
    }
  };
  TrainResult result = Train(net, train.samples, val.samples, cfg.train, sink, state);
  const Checkpoint final_ckpt =
      CaptureCheckpoint(net, arch, cfg.task.classes, options, &result.state);
  SaveCheckpoint(cfg.out_path, final_ckpt);
  if (best_iter < 0) SaveCheckpoint(best_path, final_ckpt);  // no validation set
  out << "final=" << cfg.out_path << " best=" << best_path
      << " iterations=" << result.state.iteration << " lr=" << result.state.lr
      << " decays=" << result.state.decays << "\n";
  return kExitOk;
}

// eval ---------------------------------------------------------------------

struct EvalArgs {
  ConfigFlags cfg;
  std::string checkpoint, data;
  std::optional<int> clips, crops;
  std::optional<std::string> crop;
};

int EvalCmd(const EvalArgs& a, std::ostream& out) {
  Settings flags;
  AddIfSet(flags, "eval_clips", a.clips);
  AddIfSet(flags, "eval_crops", a.crops);
  AddIfSet(flags, "eval_crop", a.crop);
  RunConfig cfg = a.cfg.Load(flags);
  const data::Dataset ds = data::ReadDataset(a.data);
  Network net = RestoreNetwork(LoadCheckpoint(a.checkpoint));
  if (net.spec().head.classes != ds.spec.classes) {
    throw ConfigError("checkpoint predicts " + std::to_string(net.spec().head.classes) +
                      " classes, data has " + std::to_string(ds.spec.classes));
  }
  cfg.eval.flip_label_map = data::HorizontalFlipLabelMap(ds.spec);
  const EvalResult r = Evaluate(net, ds.samples, cfg.eval);
  out << std::fixed << std::setprecision(4) << "top1=" << r.top1 << " top5=" << r.top5
      << " avg=" << r.avg << " loss=" << r.loss << " videos=" << r.videos
      << " volumes=" << r.volumes << " clips=" << cfg.eval.clips_per_video
      << " crops=" << cfg.eval.crops_per_clip << "\n";
  return kExitOk;
}

// analyze ------------------------------------------------------------------

struct AnalyzeArgs {
  std::string arch;
  std::string input = "16x112x112";
  std::optional<std::string> convention;
  int64_t classes = 400;
  int64_t width = 64;
  int stages = 4;
  int64_t in_channels = 3;
  bool calibrate = false;
};

int Analyze(const AnalyzeArgs& a, std::ostream& out) {
  const data::Extent3 e = ParseExtent(a.input);
  if (e.t < 1 || e.h < 1 || e.w < 1) throw ConfigError("--input needs positive TxHxW");
  ArchOptions o;
  o.base_width = a.width;
  o.num_stages = a.stages;
  o.in_channels = a.in_channels;
  const Network net = Build(a.arch, a.classes, o);
  const Shape input{1, a.in_channels, e.t, e.h, e.w};
  const CountingConventions conv =
      a.convention ? ParseConventions(*a.convention) : PinnedConventions();

  out << "arch=" << a.arch << " input=" << ShapeText(input) << "\n";
  std::string chain;
  for (const auto& t : InferShapes(net, input)) {
    out << "layer=" << t.layer << " output=\"" << FormatOutputSize(t.output_shape) << "\"\n";
    chain += (chain.empty() ? "" : " -> ") + FormatOutputSize(t.output_shape);
  }
  out << "trace: " << chain << "\n";
  const ModelStats s = Analyze(net, conv, input);
  out << std::fixed << std::setprecision(4) << "params_m=" << s.params_millions
      << " flops_g=" << s.flops_giga << " conventions=" << conv.ToString()
      << (a.convention ? "" : " (pinned)") << "\n";

  const bool reference_input = e.t == 16 && e.h == 112 && e.w == 112 && a.classes == 400 &&
                           a.width == 64 && a.stages == 4 && a.in_channels == 3;
  if (const auto ref = FindReference(a.arch); ref && reference_input) {
    out << std::showpos << std::setprecision(2) << "reference params_m=" << std::noshowpos
        << ref->params_millions << " flops_g=" << ref->flops_giga << std::showpos
        << " deviation_params_pct=" << 100.0 * (s.params_millions / ref->params_millions - 1)
        << " deviation_flops_pct=" << 100.0 * (s.flops_giga / ref->flops_giga - 1)
        << std::noshowpos << "\n";
  }
  if (a.calibrate) {
    for (const auto& c : CalibrateConventions()) {
      out << std::setprecision(6) << "calibration conventions=" << c.conventions.ToString()
          << " score=" << c.score
          << "\n";
    }
  }
  return kExitOk;
}

// verify / bench -----------------------------------------------------------

int Verify(const VerifyOptions& o, std::ostream& out) {
  return PrintVerifyReport(RunVerifySuite(o), out) ? kExitOk : kExitFailure;
}

struct BenchArgs {
  std::string block = "smart";
  std::string shape = "1x64x4x28x28";
  int repeats = 20;
  int warmup = 3;
};

int Bench(const BenchArgs& a, std::ostream& out, std::ostream& err) {
  BenchOptions o;
  o.shape = ParseBenchShape(a.shape);
  o.repeats = a.repeats;
  o.warmup = a.warmup;
  std::vector<std::string> blocks{a.block};
  if (a.block == "all") blocks = {"conv3d", "smart", "relation"};
  std::vector<BenchResult> results;
  for (const auto& b : blocks) {
    o.block = b;
    results.push_back(RunBench(o));
    out << FormatBenchResult(results.back()) << "\n";
    if (results.back().noisy) err << "warning: repeats=1 gives a noisy single sample\n";
  }
  if (results.size() == 3) {
    for (size_t i = 1; i < 3; ++i) {
      out << "ratio=" << results[i].block << "/conv3d time="
          << results[i].median_seconds / results[0].median_seconds
          << " flops=" << results[i].forward_flops / results[0].forward_flops << "\n";
    }
  }
  return kExitOk;
}

}  // namespace

int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Appearance-and-relation networks for video: data, training, analysis"};
  app.name("artnet");
  app.require_subcommand(1);

  GenerateArgs gen;
  CLI::App* g = app.add_subcommand("generate", "write a synthetic dataset file");
  gen.cfg.Attach(g);
  g->add_option("--task", gen.task, "motion or appearance");
  g->add_option("--classes", gen.classes, "class count");
  g->add_option("--n", gen.n, "number of samples");
  g->add_option("--seed", gen.seed, "generator seed");
  g->add_option("--out", gen.out, "output path");

  TrainArgs tr;
  CLI::App* t = app.add_subcommand("train", "train a network on a dataset file");
  tr.cfg.Attach(t);
  t->add_option("--arch", tr.arch, "architecture name");
  t->add_option("--data", tr.data, "training dataset file");
  t->add_option("--val-data", tr.val_data, "validation dataset file");
  t->add_option("--segments", tr.segments, "TSN segments (1 = plain clips)");
  t->add_option("--out", tr.out, "checkpoint path (best goes to <out>.best)");
  t->add_option("--resume", tr.resume, "continue from a checkpoint");

  EvalArgs ev;
  CLI::App* e = app.add_subcommand("eval", "multi-clip, multi-crop evaluation");
  ev.cfg.Attach(e);
  e->add_option("--checkpoint", ev.checkpoint, "checkpoint file")->required();
  e->add_option("--data", ev.data, "dataset file")->required();
  e->add_option("--clips", ev.clips, "clips per video");
  e->add_option("--crops", ev.crops, "1 or 10");
  e->add_option("--crop", ev.crop, "crop extent TxHxW (0 = full)");

  AnalyzeArgs an;
  CLI::App* a = app.add_subcommand("analyze", "shape trace, params and FLOPs");
  a->add_option("--arch", an.arch, "architecture name")->required();
  a->add_option("--input", an.input, "input extent TxHxW");
  a->add_option("--convention", an.convention,
                "counting conventions, e.g. macs_as_one,no_bias_before_bn,bn");
  a->add_option("--classes", an.classes, "classifier width");
  a->add_option("--width", an.width, "stem and first-stage channels");
  a->add_option("--stages", an.stages, "residual stages (1-4)");
  a->add_option("--in-channels", an.in_channels, "input channels");
  a->add_flag("--calibrate", an.calibrate, "rank every counting convention");

  VerifyOptions vo;
  CLI::App* v = app.add_subcommand("verify", "identity, gradient and table checks");
  v->add_flag("--strict", vo.strict, "more trials and gradient-check seeds");
  v->add_flag("--inject-fault", vo.inject_fault, "perturb the energy identity (self-test)");

  BenchArgs bn;
  CLI::App* b = app.add_subcommand("bench", "time conv3d, SMART and relation units");
  b->add_option("--block", bn.block, "conv3d, smart, relation or all");
  b->add_option("--shape", bn.shape, "NxCxTxHxW");
  b->add_option("--repeats", bn.repeats, "timed runs (median reported)");
  b->add_option("--warmup", bn.warmup, "untimed runs first");

  std::vector<std::string> argv_storage{"artnet"};
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : argv_storage) argv.push_back(s.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& ex) {
    const int code = app.exit(ex, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (g->parsed()) return Generate(gen, out);
    if (t->parsed()) return TrainCmd(tr, out);
    if (e->parsed()) return EvalCmd(ev, out);
    if (a->parsed()) return Analyze(an, out);
    if (v->parsed()) return Verify(vo, out);
    if (b->parsed()) return Bench(bn, out, err);
  } catch (const ConfigError& ex) {
    err << "config error: " << ex.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << "\n";
    return kExitFailure;
  }
  return kExitConfig;
}

}  // namespace artnet::cli
