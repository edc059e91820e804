// weakspk/batching.h

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

#ifndef WEAKSPK_BATCHING_H_
#define WEAKSPK_BATCHING_H_

#include <cstdint>
#include <span>
#include <vector>

#include "weakspk/corpus.h"
#include "weakspk/rng.h"

namespace weakspk {

// One recording's bag: exactly one segment from each of its clusters.
struct Bag {
  int64_t recording_id = 0;
  SpeakerId target;
  std::vector<int64_t> segment_ids;

  size_t size() const { return segment_ids.size(); }
};

struct Stage1Batch {
  std::vector<Bag> bags;

  size_t size() const;  // total segments
};

struct Stage2Row {
  int64_t segment_id = 0;
  SpeakerId label;  // known speaker, or Unknown() for unknown-pool rows

  friend bool operator==(const Stage2Row &, const Stage2Row &) = default;
};

struct Stage2Batch {
  std::vector<Stage2Row> rows;

  size_t size() const { return rows.size(); }
  size_t n_unknown() const;
};

// Throws kEmptyCluster if the recording has no clusters or an empty one.
Bag BuildBag(const Recording &recording, Rng &rng);

// Inclusive bounds of a non-final stage-1 batch: floor(0.9 t) rounded up
// and floor(1.1 t), i.e. [58, 70] for t = 64.
int64_t Stage1MinBatch(int64_t target);
int64_t Stage1MaxBatch(int64_t target);

/// Plans one stage-1 epoch.  Recordings are shuffled and each contributes
/// one bag.  A batch takes the next bag that fits under Stage1MaxBatch
/// (looking ahead when the next one does not) until it holds at least
/// `target` segments or no remaining bag fits; each recording appears
/// exactly once.  Every non-final batch lands in [Stage1MinBatch,
/// Stage1MaxBatch] whenever bags are at most 0.2 x target.  Throws
/// kBagTooLarge if a bag exceeds Stage1MaxBatch.
std::vector<Stage1Batch> PlanEpochStage1(const Corpus &corpus, int64_t target_batch_size, uint64_t seed);

struct UnknownMix {
  std::span<const int64_t> pool;
  double mix_fraction = 0.0;
};

// Throws kConfigError unless 0 <= mix_fraction and round(mix * batch) < batch.
void ValidateMixFraction(double mix_fraction, int64_t batch_size);

/// Plans one stage-2 epoch over the self-labeled rows.  Without an unknown
/// pool, rows are shuffled and cut into batches of batch_size (the remainder
/// forms a final smaller batch).  With a pool, each batch holds
/// round(mix_fraction * batch_size) unknown rows, drawn cyclically from a
/// shuffled copy of the pool, and batch_size minus that many known rows;
/// the final batch scales its unknown rows to its known remainder.
std::vector<Stage2Batch> PlanEpochStage2(std::span<const Stage2Row> selected, const UnknownMix &unknown,
                                         int64_t batch_size, uint64_t seed);

}  // namespace weakspk

#endif  // WEAKSPK_BATCHING_H_
