// src/batching.cc

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

#include "weakspk/batching.h"

#include <algorithm>
#include <cmath>
#include <list>

namespace weakspk {

size_t Stage1Batch::size() const {
  size_t n = 0;
  for (const Bag &b : bags) n += b.size();
  return n;
}

size_t Stage2Batch::n_unknown() const {
  return static_cast<size_t>(
      std::count_if(rows.begin(), rows.end(), [](const Stage2Row &r) { return !r.label.is_known(); }));
}

Bag BuildBag(const Recording &recording, Rng &rng) {
  if (recording.clusters.empty())
    Fail(ErrorKind::kEmptyCluster, "recording ", recording.recording_id, " has no clusters");
  Bag bag;
  bag.recording_id = recording.recording_id;
  bag.target = recording.target;
  bag.segment_ids.reserve(recording.clusters.size());
  for (size_t c = 0; c < recording.clusters.size(); ++c) {
    const auto &cluster = recording.clusters[c];
    if (cluster.empty())
      Fail(ErrorKind::kEmptyCluster, "recording ", recording.recording_id, " cluster ", c, " is empty");
    bag.segment_ids.push_back(cluster[rng.UniformInt(cluster.size())]);
  }
  return bag;
}

int64_t Stage1MinBatch(int64_t target) { return (9 * target + 9) / 10; }
int64_t Stage1MaxBatch(int64_t target) { return (11 * target) / 10; }

std::vector<Stage1Batch> PlanEpochStage1(const Corpus &corpus, int64_t target_batch_size, uint64_t seed) {
  if (target_batch_size < 1) Fail(ErrorKind::kConfigError, "batch size must be positive");
  const int64_t upper = Stage1MaxBatch(target_batch_size);
  Rng rng(seed);

  std::vector<size_t> order(corpus.recordings.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.Shuffle(std::span<size_t>(order));

  std::list<Bag> pending;
  for (size_t i : order) {
    Bag bag = BuildBag(corpus.recordings[i], rng);
    if (static_cast<int64_t>(bag.size()) > upper)
      Fail(ErrorKind::kBagTooLarge, "recording ", bag.recording_id, " needs a bag of ", bag.size(),
           " segments, above the batch ceiling ", upper);
    pending.push_back(std::move(bag));
  }

  std::vector<Stage1Batch> batches;
  while (!pending.empty()) {
    Stage1Batch batch;
    int64_t size = 0;
    while (size < target_batch_size) {
      auto fit = std::find_if(pending.begin(), pending.end(), [&](const Bag &b) {
        return size + static_cast<int64_t>(b.size()) <= upper;
      });
      if (fit == pending.end()) break;
      size += static_cast<int64_t>(fit->size());
      batch.bags.push_back(std::move(*fit));
      pending.erase(fit);
    }
    batches.push_back(std::move(batch));
  }
  return batches;
}

void ValidateMixFraction(double mix_fraction, int64_t batch_size) {
  if (!(mix_fraction >= 0.0 && mix_fraction < 1.0))
    Fail(ErrorKind::kConfigError, "mix_fraction must be in [0, 1), got ", mix_fraction);
  if (std::llround(mix_fraction * static_cast<double>(batch_size)) >= batch_size)
    Fail(ErrorKind::kConfigError, "mix_fraction ", mix_fraction, " leaves no known row in a batch of ",
         batch_size);
}

std::vector<Stage2Batch> PlanEpochStage2(std::span<const Stage2Row> selected, const UnknownMix &unknown,
                                         int64_t batch_size, uint64_t seed) {
  if (selected.empty()) Fail(ErrorKind::kEmptySelection, "no selected segments for stage 2");
  if (batch_size < 1) Fail(ErrorKind::kConfigError, "batch size must be positive");
  Rng rng(seed);
  std::vector<Stage2Row> known(selected.begin(), selected.end());
  rng.Shuffle(std::span<Stage2Row>(known));

  const bool mixing = !unknown.pool.empty() && unknown.mix_fraction > 0.0;
  int64_t n_unknown = 0;
  std::vector<int64_t> pool;
  if (mixing) {
    ValidateMixFraction(unknown.mix_fraction, batch_size);
    n_unknown = std::llround(unknown.mix_fraction * static_cast<double>(batch_size));
    pool.assign(unknown.pool.begin(), unknown.pool.end());
    rng.Shuffle(std::span<int64_t>(pool));
  }
  const int64_t n_known = batch_size - n_unknown;

  std::vector<Stage2Batch> batches;
  size_t next_pool = 0;
  for (size_t start = 0; start < known.size(); start += static_cast<size_t>(n_known)) {
    const size_t stop = std::min(known.size(), start + static_cast<size_t>(n_known));
    Stage2Batch batch;
    batch.rows.assign(known.begin() + static_cast<std::ptrdiff_t>(start),
                      known.begin() + static_cast<std::ptrdiff_t>(stop));
    int64_t extra = n_unknown;
    if (mixing && static_cast<int64_t>(stop - start) < n_known)
      extra = std::llround(unknown.mix_fraction * static_cast<double>(stop - start) /
                           (1.0 - unknown.mix_fraction));
    for (int64_t u = 0; mixing && u < extra; ++u) {
      batch.rows.push_back({pool[next_pool], SpeakerId::Unknown()});
      next_pool = (next_pool + 1) % pool.size();
    }
    batches.push_back(std::move(batch));
  }
  return batches;
}

}  // namespace weakspk
