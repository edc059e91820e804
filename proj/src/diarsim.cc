// src/diarsim.cc

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

#include "weakspk/diarsim.h"

#include <algorithm>
#include <cmath>
#include <map>

namespace weakspk {

DiarConfig DiarConfig::Baseline() {
  DiarConfig cfg;
  cfg.purity = 0.85;
  cfg.split_factor = 2.0;
  cfg.max_clusters = 0;
  cfg.drop_noise = false;
  return cfg;
}

DiarConfig DiarConfig::PyannoteLike() {
  DiarConfig cfg;
  cfg.purity = 0.97;
  cfg.split_factor = 1.2;
  cfg.max_clusters = 4;
  cfg.drop_noise = true;
  return cfg;
}

DiarConfig DiarConfig::Preset(const std::string &name) {
  if (name == "baseline") return Baseline();
  if (name == "pyannote-like") return PyannoteLike();
  Fail(ErrorKind::kConfigError, "unknown diarization preset '", name,
       "' (expected baseline or pyannote-like)");
}

void DiarConfig::Validate() const {
  if (!(purity > 0.0 && purity <= 1.0)) Fail(ErrorKind::kConfigError, "purity must be in (0, 1]");
  if (!(split_factor >= 1.0)) Fail(ErrorKind::kConfigError, "split_factor must be >= 1");
  if (max_clusters < 0) Fail(ErrorKind::kConfigError, "max_clusters must be >= 0");
}

ClusterList SimulateDiarization(std::span<const OracleSegment> segments, const DiarConfig &cfg, Rng &rng) {
  if (segments.empty()) Fail(ErrorKind::kEmptyRecording, "no segments to diarize");
  cfg.Validate();

  // Sources in order of first appearance.
  std::vector<SpeakerId> sources;
  std::map<SpeakerId, std::vector<int64_t>> by_source;
  for (const OracleSegment &s : segments) {
    if (cfg.drop_noise && s.oracle.kind() == SpeakerId::Kind::kNoise) continue;
    auto [it, inserted] = by_source.try_emplace(s.oracle);
    if (inserted) sources.push_back(s.oracle);
    it->second.push_back(s.segment_id);
  }
  if (sources.empty()) return {};

  struct Member {
    int64_t id;
    SpeakerId source;
  };
  std::vector<std::vector<Member>> clusters;
  const double whole = std::floor(cfg.split_factor);
  const double frac = cfg.split_factor - whole;
  for (const SpeakerId &src : sources) {
    std::vector<int64_t> &ids = by_source[src];
    rng.Shuffle(std::span<int64_t>(ids));
    int64_t k = static_cast<int64_t>(whole) + (rng.Bernoulli(frac) ? 1 : 0);
    k = std::clamp<int64_t>(k, 1, static_cast<int64_t>(ids.size()));
    const size_t first = clusters.size();
    clusters.resize(first + k);
    for (size_t i = 0; i < ids.size(); ++i) clusters[first + i % k].push_back({ids[i], src});
  }

  // Impurity: pairwise exchanges between clusters of different sources.
  struct Slot {
    size_t cluster;
    size_t pos;
  };
  std::vector<Slot> marked;
  for (size_t c = 0; c < clusters.size(); ++c)
    for (size_t p = 0; p < clusters[c].size(); ++p)
      if (rng.Bernoulli(1.0 - cfg.purity)) marked.push_back({c, p});
  rng.Shuffle(std::span<Slot>(marked));
  std::vector<bool> paired(marked.size(), false);
  for (size_t a = 0; a < marked.size(); ++a) {
    if (paired[a]) continue;
    const Member &ma = clusters[marked[a].cluster][marked[a].pos];
    for (size_t b = a + 1; b < marked.size(); ++b) {
      if (paired[b]) continue;
      const Member &mb = clusters[marked[b].cluster][marked[b].pos];
      if (mb.source == ma.source) continue;
      std::swap(clusters[marked[a].cluster][marked[a].pos], clusters[marked[b].cluster][marked[b].pos]);
      paired[a] = paired[b] = true;
      break;
    }
  }

  ClusterList out;
  out.reserve(clusters.size());
  for (auto &c : clusters) {
    std::vector<int64_t> ids;
    for (const Member &m : c) ids.push_back(m.id);
    std::sort(ids.begin(), ids.end());
    out.push_back(std::move(ids));
  }

  if (cfg.max_clusters > 0) {
    while (out.size() > static_cast<size_t>(cfg.max_clusters)) {
      // Stable order by (size, smallest id) picks the two smallest.
      std::vector<size_t> order(out.size());
      for (size_t i = 0; i < order.size(); ++i) order[i] = i;
      std::sort(order.begin(), order.end(), [&out](size_t a, size_t b) {
        if (out[a].size() != out[b].size()) return out[a].size() < out[b].size();
        return out[a].front() < out[b].front();
      });
      const size_t smallest = order[0], next = order[1];
      out[next].insert(out[next].end(), out[smallest].begin(), out[smallest].end());
      std::sort(out[next].begin(), out[next].end());
      out.erase(out.begin() + static_cast<std::ptrdiff_t>(smallest));
    }
  }
  std::sort(out.begin(), out.end(),
            [](const std::vector<int64_t> &a, const std::vector<int64_t> &b) { return a.front() < b.front(); });
  return out;
}

std::vector<double> ClusterPurity(const ClusterList &clusters, std::span<const OracleSegment> segments) {
  std::map<int64_t, SpeakerId> oracle;
  for (const OracleSegment &s : segments) oracle[s.segment_id] = s.oracle;
  std::vector<double> out;
  out.reserve(clusters.size());
  for (const auto &cluster : clusters) {
    if (cluster.empty()) {
      out.push_back(0.0);
      continue;
    }
    std::map<SpeakerId, int64_t> counts;
    int64_t best = 0;
    for (int64_t id : cluster) {
      auto it = oracle.find(id);
      if (it == oracle.end()) Fail(ErrorKind::kUnresolvedReference, "segment ", id, " has no oracle label");
      best = std::max(best, ++counts[it->second]);
    }
    out.push_back(static_cast<double>(best) / static_cast<double>(cluster.size()));
  }
  return out;
}

void DiarizeCorpus(Corpus &corpus, const DiarConfig &cfg) {
  cfg.Validate();
  for (Recording &r : corpus.recordings) {
    std::vector<OracleSegment> segs;
    for (int64_t id : r.segment_ids) segs.push_back({id, corpus.segment(id).oracle});
    Rng rng(DeriveSeed(cfg.seed, static_cast<uint64_t>(r.recording_id)));
    r.clusters = SimulateDiarization(segs, cfg, rng);
  }
  corpus.SyncClusterIds();
}

}  // namespace weakspk
