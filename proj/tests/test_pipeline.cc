// tests/test_pipeline.cc

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

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"
#include "test_util.h"
#include "weakspk/errors.h"
#include "weakspk/io.h"
#include "weakspk/pipeline.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace weakspk {
namespace {

using testing::TempDir;

ErrorKind KindOf(const std::function<void()> &f) {
  try {
    f();
  } catch (const Error &e) {
    return e.kind();
  }
  FAIL("no error thrown");
  return ErrorKind::kConfigError;
}

// Small enough for a few seconds per run, with more speakers than top_k so
// the unknown pool is not empty.
json SmallConfig(const fs::path &out) {
  return json{{"seed", 7},
              {"out", out.string()},
              {"synth", {{"n_speakers", 12}, {"recordings_per_speaker", 5}, {"unknown_speaker_count", 6}}},
              {"stage1", {{"epochs", 4}}},
              {"stage2", {{"epochs", 4}, {"unknown", {{"enabled", true}}}}},
              {"eval", {{"n_target_trials", 60}, {"n_nontarget_trials", 300}}}};
}

RunConfig Finalized(const json &doc) {
  RunConfig cfg = ParseRunConfig(doc);
  FinalizeRunConfig(cfg);
  return cfg;
}

int RunCli(const std::string &args) {
  const int status = std::system((std::string(WEAKSPK_CLI) + " " + args + " >/dev/null 2>&1").c_str());
  REQUIRE(WIFEXITED(status));
  return WEXITSTATUS(status);
}

TEST_CASE("schema matches the committed schema.txt") {
  CHECK(FormatSchema() == ReadFileBytes(fs::path(WEAKSPK_SOURCE_DIR) / "schema.txt"));
  for (const SchemaEntry &e : ConfigSchema()) {
    CHECK(!e.doc.empty());
    const bool known_origin = e.origin == "method" || e.origin == "desk-scale" || e.origin == "plumbing";
    CHECK_MESSAGE(known_origin, e.key);
  }
}

TEST_CASE("empty config equals the defaults") {
  CHECK(RunConfigToJson(ParseRunConfig(json::object())) == RunConfigToJson(RunConfig{}));
}

TEST_CASE("unknown keys and wrong types are config errors") {
  CHECK(KindOf([] { ParseRunConfig(json{{"sed", 1}}); }) == ErrorKind::kConfigError);
  CHECK(KindOf([] { ParseRunConfig(json{{"stage1", {{"lr", 0.1}}}}); }) == ErrorKind::kConfigError);
  CHECK(KindOf([] { ParseRunConfig(json{{"seed", "one"}}); }) == ErrorKind::kConfigError);
  CHECK(KindOf([] { ParseRunConfig(json{{"diar", {{"drop_noise", 1}}}}); }) == ErrorKind::kConfigError);
  CHECK(KindOf([] { ParseRunConfig(json{{"stage1", {{"loss", {{"aggregation", "mean"}}}}}}); }) ==
        ErrorKind::kConfigError);
  CHECK(KindOf([] { ParseRunConfig(json{{"diar", {{"preset", "oracle"}}}}); }) == ErrorKind::kConfigError);
}

TEST_CASE("diar preset applies before the other diar keys") {
  const DiarConfig p = DiarConfig::Preset("pyannote-like");
  const RunConfig cfg = ParseRunConfig(json{{"diar", {{"purity", 0.6}, {"preset", "pyannote-like"}}}});
  CHECK(cfg.diar_preset == "pyannote-like");
  CHECK(cfg.diar.purity == 0.6);
  CHECK(cfg.diar.split_factor == p.split_factor);
  CHECK(cfg.diar.max_clusters == p.max_clusters);
}

TEST_CASE("config json round trip") {
  RunConfig cfg;
  cfg.seed = 99;
  cfg.stage1.loss.aggregation = Aggregation::kLse;
  cfg.stage1.loss.tau = {0.7, 0.2};
  cfg.stage2.unknown.enabled = true;
  cfg.select.fraction = 0.1;
  cfg.eval.dcf.p_target = 0.01;
  const json doc = RunConfigToJson(cfg);
  CHECK(RunConfigToJson(ParseRunConfig(doc)) == doc);
  CHECK(RunConfigToJson(ParseRunConfig(json::parse(doc.dump()))) == doc);
}

TEST_CASE("finalize derives and validates") {
  RunConfig cfg = Finalized(json{{"seed", 5}, {"synth", {{"feat_dim", 24}}}});
  CHECK(cfg.synth.seed == 5);
  CHECK(cfg.stage1.dims.feat_dim == 24);
  CHECK(cfg.stage2.dims.feat_dim == 24);
  CHECK(cfg.diar.seed != cfg.synth.seed);
  CHECK(StageSeed(cfg, Stage::kStage1) != StageSeed(cfg, Stage::kStage2));

  for (const json &bad : {json{{"select", {{"top_k", 0}}}}, json{{"select", {{"fraction", 0.0}}}},
                          json{{"select", {{"fraction", 1.5}}}}, json{{"eval", {{"n_target_trials", 0}}}},
                          json{{"eval", {{"heldout_fraction", 1.0}}}}, json{{"eval", {{"p_target", 0.0}}}},
                          json{{"diar", {{"purity", 1.5}}}}, json{{"stage1", {{"epochs", 0}}}},
                          json{{"synth", {{"n_speakers", 8}}}, {"stage2", {{"unknown", {{"enabled", true}}}}}}}) {
    RunConfig c = ParseRunConfig(bad);
    CHECK_MESSAGE(KindOf([&] { FinalizeRunConfig(c); }) == ErrorKind::kConfigError, bad.dump());
  }
}

TEST_CASE("pipeline run leaves the documented layout") {
  TempDir tmp("pipeline_run");
  const RunConfig cfg = Finalized(SmallConfig(tmp.path()));
  RunPipeline(cfg, 2);
  const fs::path r = tmp.path();
  for (const char *f : {"corpus/corpus.idx", "corpus/corpus.feat", "corpus/oracle.tsv", "corpus/trials.tsv",
                        "corpus/heldout.txt", "stage1/checkpoint.bin", "stage1/metrics.csv", "stage1/run.json",
                        "stage1/scores.tsv", "stage1/eval.json", "selection/selection.jsonl",
                        "selection/selection_stats.json", "selection/unknown_pool.jsonl", "stage2/checkpoint.bin",
                        "stage2/scores.tsv", "report.json", "config.json"})
    CHECK_MESSAGE(fs::exists(r / f), f);

  // The snapshot is the finalized config as written.
  CHECK(json::parse(ReadFileBytes(r / "config.json")) == RunConfigToJson(cfg));
  CHECK(LoadRunConfig(r / "config.json").seed == cfg.seed);

  const json stats = json::parse(ReadFileBytes(r / "selection" / "selection_stats.json"));
  CHECK(stats["unknown_pool"]["size"].get<int64_t>() > 0);
  const json report = json::parse(ReadFileBytes(r / "report.json"));
  CHECK(report.is_object());
}

TEST_CASE("cli exit codes") {
  TempDir tmp("pipeline_cli");
  const fs::path r = tmp.path();
  CHECK(RunCli("selfcheck") == 0);
  CHECK(RunCli("schema") == 0);
  CHECK(RunCli("") == 2);
  CHECK(RunCli("frobnicate") == 2);
  CHECK(RunCli("gen --bogus-flag") == 2);
  CHECK(RunCli("gen --preset oracle --out " + r.string()) == 2);
  CHECK(RunCli("gen --threads 0 --out " + r.string()) == 2);

  {
    std::ofstream(r / "bad.json") << R"({"stage1": {"learning_rate": 0.1}})";
    CHECK(RunCli("gen --config " + (r / "bad.json").string()) == 2);
    std::ofstream(r / "broken.json") << "{";
    CHECK(RunCli("gen --config " + (r / "broken.json").string()) == 2);
    CHECK(RunCli("gen --config " + (r / "absent.json").string()) == 2);
  }

  // Missing upstream artifacts are module errors.
  CHECK(RunCli("train2 --out " + (r / "empty").string()) == 1);
  CHECK(RunCli("eval --out " + (r / "empty").string()) == 1);

  // Step by step through the commands.
  const fs::path run = r / "run";
  std::ofstream(r / "small.json") << SmallConfig(run).dump();
  const std::string conf = "--config " + (r / "small.json").string();
  for (const char *cmd : {"gen", "diar", "train1", "select", "train2", "eval", "report"})
    CHECK_MESSAGE(RunCli(std::string(cmd) + " " + conf) == 0, cmd);
  CHECK(fs::exists(run / "stage2" / "eval.json"));
  CHECK(fs::exists(run / "report.json"));

  // Same seed through the CLI and in process gives the same bytes.
  const fs::path direct = r / "direct";
  RunConfig cfg = Finalized(SmallConfig(direct));
  CmdGen(cfg, direct / "corpus");
  CHECK(ReadFileBytes(direct / "corpus" / "corpus.feat") == ReadFileBytes(run / "corpus" / "corpus.feat"));
  CHECK(ReadFileBytes(direct / "corpus" / "trials.tsv") == ReadFileBytes(run / "corpus" / "trials.tsv"));
}

}  // namespace
}  // namespace weakspk
