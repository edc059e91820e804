// tools/weakspk.cc

// Copyright 2026 The weakspk Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "weakspk/errors.h"
#include "weakspk/pipeline.h"
#include "weakspk/selfcheck.h"

namespace fs = std::filesystem;
using namespace weakspk;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;

struct GlobalFlags {
  std::string config;
  std::string out;
  std::optional<uint64_t> seed;
  int threads = 1;
  std::string preset;
  std::string checkpoint;
  std::string corpus;
};

RunConfig ResolveConfig(const GlobalFlags &flags) {
  RunConfig cfg = flags.config.empty() ? RunConfig{} : LoadRunConfig(flags.config);
  if (!flags.out.empty()) cfg.out = flags.out;
  if (flags.seed) cfg.seed = *flags.seed;
  if (!flags.preset.empty()) {
    try {
      cfg.diar = DiarConfig::Preset(flags.preset);
    } catch (const Error &e) {
      Fail(ErrorKind::kConfigError, e.what());
    }
    cfg.diar_preset = flags.preset;
  }
  FinalizeRunConfig(cfg);
  return cfg;
}

// Directories under root holding a trained run.
std::vector<fs::path> RunDirs(const fs::path &root) {
  std::vector<fs::path> dirs;
  if (!fs::is_directory(root)) return dirs;
  for (const auto &entry : fs::recursive_directory_iterator(root))
    if (entry.is_regular_file() && entry.path().filename() == "run.json" &&
        fs::exists(entry.path().parent_path() / "checkpoint.bin"))
      dirs.push_back(entry.path().parent_path());
  std::sort(dirs.begin(), dirs.end());
  return dirs;
}

int RunCommand(const std::string &name, const GlobalFlags &flags) {
  if (name == "schema") {
    std::cout << FormatSchema();
    return kExitOk;
  }
  if (name == "selfcheck") {
    bool ok = true;
    for (const CheckOutcome &c : RunSelfChecks()) {
      std::cout << (c.ok ? "ok    " : "FAIL  ") << c.name << ": " << c.detail << '\n';
      ok = ok && c.ok;
    }
    return ok ? kExitOk : kExitFailure;
  }

  const RunConfig cfg = ResolveConfig(flags);
  const fs::path root = cfg.out;
  const fs::path corpus = flags.corpus.empty() ? root / "corpus" : fs::path(flags.corpus);
  const int threads = flags.threads;

  if (name == "gen") {
    CmdGen(cfg, corpus);
  } else if (name == "diar") {
    CmdDiar(cfg, corpus);
  } else if (name == "train1") {
    CmdTrain1(cfg, corpus, root / "stage1", "stage1", threads);
  } else if (name == "select") {
    const SelectionStats s = CmdSelect(cfg, corpus, root / "stage1", root / "selection");
    std::cout << "selected " << s.n_selected << " segments, precision " << s.precision << ", recall " << s.recall
              << '\n';
  } else if (name == "train2") {
    CmdTrain2(cfg, corpus, root / "selection", root / "stage2",
              cfg.stage2.unknown.enabled ? "stage2+unknown" : "stage2", threads);
  } else if (name == "eval") {
    std::vector<fs::path> runs;
    if (!flags.checkpoint.empty()) {
      const fs::path ckpt = flags.checkpoint;
      if (ckpt.filename() != "checkpoint.bin" || !fs::exists(ckpt))
        Fail(ErrorKind::kMissingArtifacts, "no checkpoint at ", ckpt.string());
      runs.push_back(ckpt.parent_path());
    } else {
      runs = RunDirs(root);
      if (runs.empty()) Fail(ErrorKind::kMissingArtifacts, "no trained runs under ", root.string());
    }
    for (const fs::path &run : runs) {
      const EvalSummary s = CmdEval(cfg, corpus, run, threads);
      std::cout << run.string() << ": EER " << 100.0 * s.eer << "%, minDCF " << s.min_dcf << '\n';
    }
    CmdReport(root);
  } else if (name == "report") {
    CmdReport(root);
  } else if (name == "run") {
    RunPipeline(cfg, threads);
  } else if (name == "ablate") {
    CmdAblate(cfg, root, threads);
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"Weakly supervised speaker embedding pipeline"};
  app.require_subcommand(1);
  GlobalFlags flags;

  struct Sub {
    const char *name;
    const char *help;
  };
  const std::vector<Sub> subs = {
      {"gen", "generate the synthetic corpus and trial list"},
      {"diar", "rewrite corpus clusters with simulated diarization"},
      {"train1", "train the first stage on recording bags"},
      {"select", "self-label segments and pick the unknown pool"},
      {"train2", "train the second stage on self-labeled segments"},
      {"eval", "score trials and write the report"},
      {"report", "rebuild report.json from a run directory"},
      {"run", "gen, diar, train1, select, train2 and eval in one go"},
      {"ablate", "first-stage grid plus second-stage comparisons"},
      {"selfcheck", "gradient, pooling and metric checks"},
      {"schema", "print the configuration schema"},
  };
  for (const Sub &s : subs) {
    CLI::App *sub = app.add_subcommand(s.name, s.help);
    const std::string n = s.name;
    if (n == "selfcheck" || n == "schema") continue;
    sub->add_option("--config", flags.config, "JSON run configuration");
    sub->add_option("--out", flags.out, "run directory (overrides config)");
    sub->add_option("--seed", flags.seed, "global seed (overrides config)");
    sub->add_option("--threads", flags.threads, "worker threads")->check(CLI::PositiveNumber);
    if (n == "diar" || n == "run" || n == "gen")
      sub->add_option("--preset", flags.preset, "diarization preset")
          ->check(CLI::IsMember({"baseline", "pyannote-like"}));
    if (n == "eval") {
      sub->add_option("--checkpoint", flags.checkpoint, "evaluate only this checkpoint");
      sub->add_option("--corpus", flags.corpus, "corpus directory (default <out>/corpus)");
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    return RunCommand(app.get_subcommands().front()->get_name(), flags);
  } catch (const Error &e) {
    std::cerr << "weakspk: " << e.what() << '\n';
    return e.kind() == ErrorKind::kConfigError ? kExitConfig : kExitFailure;
  } catch (const std::exception &e) {
    std::cerr << "weakspk: " << e.what() << '\n';
    return kExitFailure;
  }
}
