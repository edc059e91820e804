// weakspk/diarsim.h

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

// Diarization-quality simulator.  Produces clusters from oracle labels with
// controlled over-clustering (split_factor), impurity and a cap on the number
// of clusters, standing in for a real diarizer.

#ifndef WEAKSPK_DIARSIM_H_
#define WEAKSPK_DIARSIM_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "weakspk/corpus.h"
#include "weakspk/rng.h"

namespace weakspk {

struct DiarConfig {
  double purity = 0.85;       // in (0, 1]
  double split_factor = 2.0;  // expected clusters per present speaker, >= 1
  int32_t max_clusters = 0;   // 0 = unlimited
  bool drop_noise = false;
  uint64_t seed = 1;

  // Over-clustering, impure, noise kept.
  static DiarConfig Baseline();
  // Near-pure, light splitting, noise removed, at most 4 clusters.
  static DiarConfig PyannoteLike();
  // Throws kConfigError for an unknown preset name.
  static DiarConfig Preset(const std::string &name);

  void Validate() const;
};

struct OracleSegment {
  int64_t segment_id = 0;
  SpeakerId oracle;
};

using ClusterList = std::vector<std::vector<int64_t>>;

/// Clusters one recording's segments:
///  1. NOISE segments are removed when drop_noise is set; otherwise all
///     noise of the recording is treated as one more source.
///  2. Each source with n segments is dealt round-robin, in shuffled order,
///     into k = floor(split_factor) + Bernoulli(frac(split_factor)) clusters,
///     k clipped to [1, n].
///  3. Every segment is marked for exchange with probability 1 - purity;
///     marked segments are paired greedily with marked segments of another
///     source and each pair swaps clusters.
///  4. While the count exceeds max_clusters, the smallest cluster is merged
///     into the next smallest.
/// Clusters are returned ordered by their smallest segment id, members
/// sorted.  Throws kEmptyRecording for an empty input.
ClusterList SimulateDiarization(std::span<const OracleSegment> segments, const DiarConfig &cfg, Rng &rng);

// Fraction of each cluster's members carrying the cluster's modal label.
std::vector<double> ClusterPurity(const ClusterList &clusters, std::span<const OracleSegment> segments);

/// Re-clusters every recording of the corpus in place.  Recording r uses the
/// substream DeriveSeed(cfg.seed, r).  Dropped segments stay in the corpus
/// (they remain listed in Recording::segment_ids) with cluster_id -1.
void DiarizeCorpus(Corpus &corpus, const DiarConfig &cfg);

}  // namespace weakspk

#endif  // WEAKSPK_DIARSIM_H_
