// src/selection.cc

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

#include "weakspk/selection.h"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "weakspk/io.h"
#include "weakspk/miloss.h"

namespace weakspk {

using nlohmann::json;

int32_t ArgmaxClass(const Eigen::VectorXd &scores) {
  int32_t best = 0;
  for (Eigen::Index j = 1; j < scores.size(); ++j)
    if (scores[j] > scores[best]) best = static_cast<int32_t>(j);
  return best;
}

int32_t RankOfClass(const Eigen::VectorXd &scores, int32_t cls) {
  int32_t ahead = 0;
  for (Eigen::Index j = 0; j < scores.size(); ++j)
    if (scores[j] > scores[cls] || (scores[j] == scores[cls] && j < cls)) ++ahead;
  return ahead;
}

std::map<int64_t, Eigen::VectorXd> ClusteredSegmentCosines(const Corpus &corpus, const Model &model) {
  std::map<int64_t, Eigen::VectorXd> out;
  for (const Recording &r : corpus.recordings)
    for (const auto &cluster : r.clusters)
      for (int64_t id : cluster) {
        const ForwardCache f = Forward(FrameMean(corpus.segment(id).features), model.params);
        out.emplace(id, CosineSimilarities(f.e, model.prototypes));
      }
  return out;
}

SelectionResult SelfLabel(const Corpus &corpus, const Model &model) {
  const auto cosines = ClusteredSegmentCosines(corpus, model);
  SelectionResult result;
  for (const auto &[id, c] : cosines) {
    const Recording &r = corpus.recording(corpus.segment(id).recording_id);
    const int32_t t = r.target.index();
    if (ArgmaxClass(c) == t) result.selected.push_back({id, r.target, c[t]});
  }
  result.stats = SelectionStatsFor(corpus, result.selected);
  return result;
}

SelectionStats SelectionStatsFor(const Corpus &corpus, const std::vector<SelectedSegment> &selected) {
  SelectionStats s;
  s.per_speaker_selected.assign(corpus.n_speakers, 0);
  std::set<int64_t> chosen;
  for (const SelectedSegment &sel : selected) {
    chosen.insert(sel.segment_id);
    const Segment &seg = corpus.segment(sel.segment_id);
    const Recording &r = corpus.recording(seg.recording_id);
    ++s.n_selected;
    s.selected_frames += seg.n_frames();
    ++s.per_speaker_selected[sel.label.index()];
    if (seg.oracle == r.target) ++s.n_correct;
  }
  for (const Recording &r : corpus.recordings)
    for (const auto &cluster : r.clusters)
      for (int64_t id : cluster) {
        const Segment &seg = corpus.segment(id);
        if (seg.oracle == r.target) {
          ++s.n_oracle_target;
          s.oracle_target_frames += seg.n_frames();
        }
      }
  for (int64_t n : s.per_speaker_selected) s.speakers_covered += n > 0 ? 1 : 0;
  s.empty_selection = s.n_selected == 0;
  s.precision = s.empty_selection ? 0.0 : static_cast<double>(s.n_correct) / static_cast<double>(s.n_selected);
  s.recall = s.n_oracle_target == 0 ? 0.0
                                    : static_cast<double>(s.n_correct) / static_cast<double>(s.n_oracle_target);
  return s;
}

UnknownPool SelectUnknownPool(const Corpus &corpus, const Model &model, const SelectionResult &selection,
                              const UnknownPoolConfig &cfg) {
  if (corpus.n_speakers <= cfg.top_k)
    Fail(ErrorKind::kDegenerateConfig, "unknown-pool filter needs more than top_k=", cfg.top_k, " speakers, have ",
         corpus.n_speakers);
  if (!(cfg.fraction > 0.0 && cfg.fraction <= 1.0))
    Fail(ErrorKind::kConfigError, "unknown-pool fraction must be in (0, 1]");
  std::set<int64_t> chosen;
  for (const SelectedSegment &s : selection.selected) chosen.insert(s.segment_id);

  UnknownPool pool;
  std::vector<PoolMember> survivors;
  for (const auto &[id, c] : ClusteredSegmentCosines(corpus, model)) {
    if (chosen.count(id)) continue;
    ++pool.n_candidates;
    const int32_t t = corpus.recording(corpus.segment(id).recording_id).target.index();
    if (RankOfClass(c, t) < cfg.top_k) continue;
    survivors.push_back({id, LogSumExp(cfg.scale * c)});
  }
  pool.n_survivors = static_cast<int64_t>(survivors.size());
  std::sort(survivors.begin(), survivors.end(), [](const PoolMember &a, const PoolMember &b) {
    if (a.lse != b.lse) return a.lse > b.lse;
    return a.segment_id < b.segment_id;
  });
  const auto keep = static_cast<size_t>(std::ceil(cfg.fraction * static_cast<double>(survivors.size()) - 1e-9));
  survivors.resize(std::min(keep, survivors.size()));
  pool.members = std::move(survivors);
  return pool;
}

std::vector<Stage2Row> ToStage2Rows(const std::vector<SelectedSegment> &selected) {
  std::vector<Stage2Row> rows;
  rows.reserve(selected.size());
  for (const SelectedSegment &s : selected) rows.push_back({s.segment_id, s.label});
  return rows;
}

std::vector<int64_t> PoolSegmentIds(const UnknownPool &pool) {
  std::vector<int64_t> ids;
  for (const PoolMember &m : pool.members) ids.push_back(m.segment_id);
  return ids;
}

json StatsToJson(const SelectionStats &s) {
  return json{{"precision", s.precision},
              {"recall", s.recall},
              {"empty_selection", s.empty_selection},
              {"n_selected", s.n_selected},
              {"n_correct", s.n_correct},
              {"n_oracle_target", s.n_oracle_target},
              {"selected_frames", s.selected_frames},
              {"oracle_target_frames", s.oracle_target_frames},
              {"speakers_covered", s.speakers_covered},
              {"per_speaker_selected", s.per_speaker_selected}};
}

void SaveSelection(const std::vector<SelectedSegment> &selected, const std::filesystem::path &path) {
  std::ostringstream os;
  for (const SelectedSegment &s : selected)
    os << json{{"segment_id", s.segment_id}, {"label", s.label.index()}, {"score", s.score}}.dump() << '\n';
  WriteFileAtomic(path, os.str());
}

std::vector<SelectedSegment> LoadSelection(const std::filesystem::path &path) {
  std::vector<SelectedSegment> out;
  std::istringstream is(ReadFileBytes(path));
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      out.push_back({j.at("segment_id").get<int64_t>(), SpeakerId::Known(j.at("label").get<int32_t>()),
                     j.at("score").get<double>()});
    } catch (const json::exception &e) {
      Fail(ErrorKind::kFormatError, path.string(), ": ", e.what());
    }
  }
  return out;
}

void SaveUnknownPool(const UnknownPool &pool, const std::filesystem::path &path) {
  std::ostringstream os;
  for (const PoolMember &m : pool.members) os << json{{"segment_id", m.segment_id}, {"lse", m.lse}}.dump() << '\n';
  WriteFileAtomic(path, os.str());
}

UnknownPool LoadUnknownPool(const std::filesystem::path &path) {
  UnknownPool pool;
  std::istringstream is(ReadFileBytes(path));
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      pool.members.push_back({j.at("segment_id").get<int64_t>(), j.at("lse").get<double>()});
    } catch (const json::exception &e) {
      Fail(ErrorKind::kFormatError, path.string(), ": ", e.what());
    }
  }
  return pool;
}

}  // namespace weakspk
