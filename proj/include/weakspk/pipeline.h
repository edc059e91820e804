// weakspk/pipeline.h

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

// Run configuration and the pipeline commands behind the weakspk tool.
//
// Run directory layout:
//   corpus/      corpus.idx corpus.feat oracle.tsv trials.tsv heldout.txt
//   stage1/      checkpoint.bin metrics.csv run.json [scores.tsv eval.json]
//   selection/   selection.jsonl selection_stats.json unknown_pool.jsonl
//   stage2/      as stage1/
//   report.json
// Every command also leaves the config it ran with as config.json in the
// directory it wrote.

#ifndef WEAKSPK_PIPELINE_H_
#define WEAKSPK_PIPELINE_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "weakspk/corpus.h"
#include "weakspk/diarsim.h"
#include "weakspk/eval.h"
#include "weakspk/selection.h"
#include "weakspk/synthgen.h"
#include "weakspk/trainer.h"

namespace weakspk {

struct SelectConfig {
  int32_t top_k = 10;
  double fraction = 0.05;
};

struct EvalConfig {
  int64_t n_target_trials = 1000;
  int64_t n_nontarget_trials = 10000;
  TrialSplitConfig split;
  DcfParams dcf;
};

/// All settings of a run.  The global seed replaces the per-module seeds of
/// SynthConfig and DiarConfig and seeds every later stage; see StageSeed.
struct RunConfig {
  uint64_t seed = 1;
  std::string out = "run";
  SynthConfig synth;
  std::string diar_preset = "baseline";
  DiarConfig diar = DiarConfig::Baseline();
  Stage1Config stage1;
  SelectConfig select;
  Stage2Config stage2;
  EvalConfig eval;
};

enum class Stage : uint64_t { kSynth = 0, kDiar = 1, kTrials = 2, kStage1 = 3, kStage2 = 4 };
uint64_t StageSeed(const RunConfig &cfg, Stage stage);

struct SchemaEntry {
  std::string key;  // dotted path, e.g. "stage1.loss.margin.start"
  std::string type;
  std::string default_value;
  std::string origin;  // "method", "desk-scale" or "plumbing"
  std::string doc;
};
std::vector<SchemaEntry> ConfigSchema();
// Text of schema.txt.
std::string FormatSchema();

/// Applies the keys of a JSON object over the defaults.  Keys are nested
/// objects following the dotted schema paths; "diar.preset" is applied
/// before the other diar keys.  Unknown keys, wrong types and invalid
/// values throw kConfigError.
RunConfig ParseRunConfig(const nlohmann::json &doc);
RunConfig LoadRunConfig(const std::filesystem::path &path);
nlohmann::json RunConfigToJson(const RunConfig &cfg);
// Derived fields (model input width) and every section's Validate(); throws
// kConfigError.
void FinalizeRunConfig(RunConfig &cfg);

// Individual commands.  Directories are explicit so the ablation driver can
// lay out several runs side by side.
void CmdGen(const RunConfig &cfg, const std::filesystem::path &corpus_dir);
void CmdDiar(const RunConfig &cfg, const std::filesystem::path &corpus_dir);
void CmdTrain1(const RunConfig &cfg, const std::filesystem::path &corpus_dir, const std::filesystem::path &run_dir,
               const std::string &name, int threads);
SelectionStats CmdSelect(const RunConfig &cfg, const std::filesystem::path &corpus_dir,
                         const std::filesystem::path &stage1_dir, const std::filesystem::path &selection_dir);
void CmdTrain2(const RunConfig &cfg, const std::filesystem::path &corpus_dir,
               const std::filesystem::path &selection_dir, const std::filesystem::path &run_dir,
               const std::string &name, int threads);

struct EvalSummary {
  double eer = 0.0;
  double min_dcf = 0.0;
  int64_t n_trials = 0;
};
// Scores the corpus trials with run_dir/checkpoint.bin and writes
// scores.tsv and eval.json next to it.
EvalSummary CmdEval(const RunConfig &cfg, const std::filesystem::path &corpus_dir,
                    const std::filesystem::path &run_dir, int threads);
// MakeReport(root) written to root/report.json.
nlohmann::json CmdReport(const std::filesystem::path &root);

// The default layout under cfg.out.
void RunPipeline(const RunConfig &cfg, int threads);

/// Stage-1 grid m1..m6 on the configured diarization, the "p" row (m4
/// settings on pyannote-like clusters), selection from m4, and stage 2 with
/// and without the unknown class; everything evaluated and reported.
void CmdAblate(const RunConfig &cfg, const std::filesystem::path &root, int threads);

}  // namespace weakspk

#endif  // WEAKSPK_PIPELINE_H_
