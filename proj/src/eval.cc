// src/eval.cc

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

#include "weakspk/eval.h"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include "weakspk/io.h"
#include "weakspk/parallel.h"

namespace weakspk {

using nlohmann::json;
namespace fs = std::filesystem;

void ScoreSet::Validate() const {
  if (scores.size() != labels.size())
    Fail(ErrorKind::kInvalidLabel, "score set has ", scores.size(), " scores but ", labels.size(), " labels");
  const auto n_target = std::count(labels.begin(), labels.end(), true);
  if (n_target == 0 || n_target == static_cast<std::ptrdiff_t>(labels.size()))
    Fail(ErrorKind::kSingleClass, "score set needs target and non-target trials (", n_target, " of ",
         labels.size(), " are targets)");
}

ScoreSet ScoreTrials(const Model &model, const Corpus &corpus, const TrialList &trials, int threads) {
  std::vector<int64_t> ids;
  for (const Trial &t : trials.trials) {
    ids.push_back(t.enroll_segment_id);
    ids.push_back(t.test_segment_id);
  }
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());

  std::vector<Eigen::VectorXd> emb(ids.size());
  ParallelFor(ids.size(), threads, [&](size_t i) {
    emb[i] = Forward(FrameMean(corpus.segment(ids[i]).features), model.params).e;
  });
  auto lookup = [&](int64_t id) -> const Eigen::VectorXd & {
    return emb[std::lower_bound(ids.begin(), ids.end(), id) - ids.begin()];
  };

  ScoreSet set;
  set.scores.reserve(trials.trials.size());
  for (const Trial &t : trials.trials) {
    const double c = lookup(t.enroll_segment_id).dot(lookup(t.test_segment_id));
    set.scores.push_back(std::clamp(c, -1.0, 1.0));
    set.labels.push_back(t.is_target);
  }
  return set;
}

std::vector<OperatingPoint> RocSweep(const ScoreSet &set) {
  set.Validate();
  std::vector<size_t> order(set.scores.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return set.scores[a] < set.scores[b]; });
  const double n_tgt = static_cast<double>(std::count(set.labels.begin(), set.labels.end(), true));
  const double n_non = static_cast<double>(set.labels.size()) - n_tgt;

  std::vector<OperatingPoint> points;
  // Targets strictly below and non-targets at or above the current threshold.
  double tgt_below = 0, non_above = n_non;
  for (size_t i = 0; i < order.size();) {
    const double theta = set.scores[order[i]];
    points.push_back({theta, tgt_below / n_tgt, non_above / n_non});
    for (; i < order.size() && set.scores[order[i]] == theta; ++i) {
      if (set.labels[order[i]])
        tgt_below += 1;
      else
        non_above -= 1;
    }
  }
  points.push_back({std::numeric_limits<double>::infinity(), 1.0, 0.0});
  return points;
}

double ComputeEer(const ScoreSet &set) {
  const auto points = RocSweep(set);
  // P_miss - P_fa is -1 at the first point, +1 at the last and
  // non-decreasing in between.
  for (size_t k = 1; k < points.size(); ++k) {
    const double d1 = points[k].p_miss - points[k].p_fa;
    if (d1 < 0) continue;
    const double d0 = points[k - 1].p_miss - points[k - 1].p_fa;
    const double t = -d0 / (d1 - d0);
    return points[k - 1].p_fa + t * (points[k].p_fa - points[k - 1].p_fa);
  }
  return 1.0;  // not reached
}

double ComputeMinDcf(const ScoreSet &set, const DcfParams &params) {
  const double p = params.p_target;
  if (!(p > 0.0 && p < 1.0) || !(params.c_miss > 0.0) || !(params.c_fa > 0.0))
    Fail(ErrorKind::kConfigError, "minDCF needs p_target in (0,1) and positive costs");
  double best = std::numeric_limits<double>::infinity();
  for (const OperatingPoint &op : RocSweep(set))
    best = std::min(best, params.c_miss * p * op.p_miss + params.c_fa * (1.0 - p) * op.p_fa);
  return best / std::min(params.c_miss * p, params.c_fa * (1.0 - p));
}

void SaveScores(const TrialList &trials, const ScoreSet &set, const fs::path &path) {
  if (trials.trials.size() != set.scores.size())
    Fail(ErrorKind::kInvalidLabel, "trial list and score set differ in length");
  std::ostringstream os;
  os << std::setprecision(17);
  for (size_t i = 0; i < set.scores.size(); ++i)
    os << trials.trials[i].enroll_segment_id << '\t' << trials.trials[i].test_segment_id << '\t' << set.scores[i]
       << '\t' << (set.labels[i] ? "target" : "nontarget") << '\n';
  WriteFileAtomic(path, os.str());
}

ScoreSet LoadScores(const fs::path &path) {
  ScoreSet set;
  std::istringstream is(ReadFileBytes(path));
  std::string line;
  int64_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    int64_t enroll, test;
    double score;
    std::string label;
    if (!(ls >> enroll >> test >> score >> label) || (label != "target" && label != "nontarget"))
      Fail(ErrorKind::kFormatError, path.string(), ":", line_no, ": bad score line");
    set.scores.push_back(score);
    set.labels.push_back(label == "target");
  }
  return set;
}

namespace {

json ReadJson(const fs::path &path) {
  try {
    return json::parse(ReadFileBytes(path));
  } catch (const json::exception &e) {
    Fail(ErrorKind::kFormatError, path.string(), ": ", e.what());
  }
}

// First row of every epoch in metrics.csv.
json ScheduleTrace(const fs::path &path) {
  std::istringstream is(ReadFileBytes(path));
  std::string line;
  std::getline(is, line);  // header
  json trace = json::array();
  int64_t last_epoch = -1;
  while (std::getline(is, line)) {
    std::vector<std::string> cols;
    std::stringstream ls(line);
    for (std::string c; std::getline(ls, c, ',');) cols.push_back(c);
    if (cols.size() != 6) Fail(ErrorKind::kFormatError, path.string(), ": bad metrics row");
    const int64_t epoch = std::stoll(cols[1]);
    if (epoch == last_epoch) continue;
    last_epoch = epoch;
    json row{{"epoch", epoch}, {"step", std::stoll(cols[0])}, {"lr", std::stod(cols[2])},
             {"margin", std::stod(cols[3])}};
    row["tau"] = cols[4] == "nan" ? json(nullptr) : json(std::stod(cols[4]));
    trace.push_back(row);
  }
  return trace;
}

int GridOrder(const std::string &name) {
  static const char *kNames[] = {"m1", "m2", "m3", "m4", "m5", "m6", "p"};
  for (int i = 0; i < 7; ++i)
    if (name == kNames[i]) return i;
  return -1;
}

}  // namespace

json MakeReport(const fs::path &root) {
  if (!fs::is_directory(root)) Fail(ErrorKind::kMissingArtifacts, "no run directory at ", root.string());
  std::vector<fs::path> run_dirs, selection_files;
  for (const auto &entry : fs::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    if (entry.path().filename() == "run.json") run_dirs.push_back(entry.path().parent_path());
    if (entry.path().filename() == "selection_stats.json") selection_files.push_back(entry.path());
  }
  std::sort(run_dirs.begin(), run_dirs.end());
  std::sort(selection_files.begin(), selection_files.end());
  if (run_dirs.empty()) Fail(ErrorKind::kMissingArtifacts, "no run.json under ", root.string());

  json report;
  report["runs"] = json::array();
  report["stage2"] = json::array();
  report["schedules"] = json::object();
  std::vector<std::pair<int, json>> grid;
  for (const fs::path &dir : run_dirs) {
    const std::string rel = dir.lexically_relative(root).generic_string();
    for (const char *needed : {"eval.json", "metrics.csv"})
      if (!fs::exists(dir / needed)) Fail(ErrorKind::kMissingArtifacts, "run ", rel, " has no ", needed);
    const json run = ReadJson(dir / "run.json");
    const json ev = ReadJson(dir / "eval.json");
    json row = run;
    row["path"] = rel;
    row["eer"] = ev.at("eer");
    row["min_dcf"] = ev.at("min_dcf");
    report["runs"].push_back(row);
    report["schedules"][rel] = ScheduleTrace(dir / "metrics.csv");
    const int stage = run.at("stage").get<int>();
    const std::string name = run.at("name").get<std::string>();
    if (stage == 1 && GridOrder(name) >= 0) grid.emplace_back(GridOrder(name), row);
    if (stage == 2) report["stage2"].push_back(row);
  }
  std::stable_sort(grid.begin(), grid.end(), [](const auto &a, const auto &b) { return a.first < b.first; });
  report["stage1_grid"] = json::array();
  for (auto &[order, row] : grid) report["stage1_grid"].push_back(row);

  report["selection"] = json::object();
  for (const fs::path &f : selection_files)
    report["selection"][f.parent_path().lexically_relative(root).generic_string()] = ReadJson(f);
  return report;
}

}  // namespace weakspk
