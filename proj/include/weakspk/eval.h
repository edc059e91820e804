// weakspk/eval.h

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

// Verification scoring: cosine trial scores, EER, normalized minDCF and the
// consolidated run report.

#ifndef WEAKSPK_EVAL_H_
#define WEAKSPK_EVAL_H_

#include <filesystem>
#include <span>
#include <vector>

#include "json.hpp"
#include "weakspk/corpus.h"
#include "weakspk/embedder.h"

namespace weakspk {

struct ScoreSet {
  std::vector<double> scores;
  std::vector<bool> labels;  // true for target trials

  void Validate() const;  // equal lengths, both classes present
};

// Cosine between the embeddings of enrollment and test segment of every
// trial, in trial order.
ScoreSet ScoreTrials(const Model &model, const Corpus &corpus, const TrialList &trials, int threads = 1);

// Decision rule "accept iff score >= theta".  One operating point per
// threshold in sorted order of distinct scores followed by +inf.
struct OperatingPoint {
  double threshold = 0.0;
  double p_miss = 0.0;
  double p_fa = 0.0;
};
std::vector<OperatingPoint> RocSweep(const ScoreSet &set);

/// Rate where P_fa and P_miss cross, linearly interpolated on the ROC
/// segment between the last point with P_miss < P_fa and the first with
/// P_miss >= P_fa.  Throws kSingleClass.
double ComputeEer(const ScoreSet &set);

struct DcfParams {
  double p_target = 0.05;
  double c_miss = 1.0;
  double c_fa = 1.0;
};

/// min over thresholds of (c_miss p P_miss + c_fa (1-p) P_fa), divided by
/// min(c_miss p, c_fa (1-p)).  Throws kSingleClass.
double ComputeMinDcf(const ScoreSet &set, const DcfParams &params = {});

// scores.tsv: "enroll test score target|nontarget", one trial per line.
void SaveScores(const TrialList &trials, const ScoreSet &set, const std::filesystem::path &path);
ScoreSet LoadScores(const std::filesystem::path &path);

/// Walks `root` for run directories (those holding run.json) and combines
/// their eval.json, metrics.csv, and any selection_stats.json into one
/// document:
///   runs:          every run with stage, name, eer, min_dcf
///   stage1_grid:   stage-1 runs named m1..m6 (and p) in that order
///   stage2:        stage-2 runs, unknown-class variants flagged
///   selection:     selection stats by directory
///   schedules:     per-epoch lr / margin / tau traces per run
/// Throws kMissingArtifacts when no run exists or a run has no eval.json or
/// metrics.csv.
nlohmann::json MakeReport(const std::filesystem::path &root);

}  // namespace weakspk

#endif  // WEAKSPK_EVAL_H_
