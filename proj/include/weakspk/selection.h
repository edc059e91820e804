// weakspk/selection.h

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

// Bridge from stage 1 to stage 2: self-labeling of diarized segments,
// selection quality against oracle labels, and the pool of unknown-speaker
// segments.

#ifndef WEAKSPK_SELECTION_H_
#define WEAKSPK_SELECTION_H_

#include <cstdint>
#include <filesystem>
#include <vector>

#include "json.hpp"

#include "weakspk/batching.h"
#include "weakspk/corpus.h"
#include "weakspk/embedder.h"

namespace weakspk {

struct SelectedSegment {
  int64_t segment_id = 0;
  SpeakerId label;     // always the recording target
  double score = 0.0;  // cosine to the label's prototype
};

struct SelectionStats {
  double precision = 0.0;
  double recall = 0.0;
  bool empty_selection = false;  // precision undefined, reported as 0
  int64_t n_selected = 0;
  int64_t n_correct = 0;
  int64_t n_oracle_target = 0;
  // Frames stand in for hours of speech.
  int64_t selected_frames = 0;
  int64_t oracle_target_frames = 0;
  int64_t speakers_covered = 0;
  std::vector<int64_t> per_speaker_selected;  // indexed by speaker
};

struct SelectionResult {
  std::vector<SelectedSegment> selected;  // ordered by segment id
  SelectionStats stats;
};

// Label of row `j` with the largest value; ties go to the lower index.
int32_t ArgmaxClass(const Eigen::VectorXd &scores);

// Classes ranked strictly ahead of `cls`: greater score, or equal score and
// lower index.
int32_t RankOfClass(const Eigen::VectorXd &scores, int32_t cls);

// Cosine similarities of every clustered segment of the corpus.
std::map<int64_t, Eigen::VectorXd> ClusteredSegmentCosines(const Corpus &corpus, const Model &model);

/// Keeps a clustered segment iff the argmax prototype equals its
/// recording's target; the segment gets that target as label.  Stats are
/// filled from oracle labels via SelectionStatsFor.
SelectionResult SelfLabel(const Corpus &corpus, const Model &model);

/// Precision |selected & oracle-target| / |selected| and recall
/// |selected & oracle-target| / |oracle-target| over clustered segments,
/// where oracle-target segments are those whose oracle label equals their
/// recording's target.
SelectionStats SelectionStatsFor(const Corpus &corpus, const std::vector<SelectedSegment> &selected);

struct PoolMember {
  int64_t segment_id = 0;
  double lse = 0.0;  // ln sum_j exp(scale * c_j)
};

struct UnknownPool {
  std::vector<PoolMember> members;  // highest lse first
  int64_t n_candidates = 0;         // segments not self-labeled
  int64_t n_survivors = 0;          // candidates after the top-k filter
};

struct UnknownPoolConfig {
  int32_t top_k = 10;
  double fraction = 0.05;
  double scale = 30.0;
};

/// Among clustered segments not selected by self-labeling, drops those whose
/// recording target ranks within the top_k classes, orders survivors by the
/// unnormalized log-sum-exp of their scaled logits (ties by segment id) and
/// keeps the first ceil(fraction * survivors).  Throws kDegenerateConfig if
/// n_speakers <= top_k.
UnknownPool SelectUnknownPool(const Corpus &corpus, const Model &model, const SelectionResult &selection,
                              const UnknownPoolConfig &cfg = {});

std::vector<Stage2Row> ToStage2Rows(const std::vector<SelectedSegment> &selected);
std::vector<int64_t> PoolSegmentIds(const UnknownPool &pool);

nlohmann::json StatsToJson(const SelectionStats &stats);

// selection.jsonl: {"segment_id", "label", "score"} per line.
void SaveSelection(const std::vector<SelectedSegment> &selected, const std::filesystem::path &path);
std::vector<SelectedSegment> LoadSelection(const std::filesystem::path &path);
// unknown_pool.jsonl: {"segment_id", "lse"} per line.
void SaveUnknownPool(const UnknownPool &pool, const std::filesystem::path &path);
UnknownPool LoadUnknownPool(const std::filesystem::path &path);

}  // namespace weakspk

#endif  // WEAKSPK_SELECTION_H_
