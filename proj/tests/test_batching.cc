// tests/test_batching.cc

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

#include <map>
#include <set>

#include "doctest.h"
#include "test_util.h"
#include "weakspk/batching.h"
#include "weakspk/diarsim.h"
#include "weakspk/synthgen.h"

using namespace weakspk;
using weakspk::testing::AddRecording;

namespace {

ErrorKind KindOf(const std::function<void()> &fn) {
  try {
    fn();
  } catch (const Error &e) {
    return e.kind();
  }
  FAIL("no error thrown");
  return ErrorKind::kIoError;
}

Corpus Diarized(uint64_t seed) {
  SynthConfig cfg;
  cfg.seed = seed;
  Corpus c = GenerateCorpus(cfg);
  DiarConfig d = DiarConfig::Baseline();
  d.seed = seed;
  DiarizeCorpus(c, d);
  return c;
}

std::vector<Stage2Row> Rows(int n) {
  std::vector<Stage2Row> rows;
  for (int i = 0; i < n; ++i) rows.push_back({i, SpeakerId::Known(i % 7)});
  return rows;
}

}  // namespace

TEST_CASE("a bag holds one segment per cluster") {
  Recording r;
  r.recording_id = 4;
  r.target = SpeakerId::Known(1);
  r.clusters = {{1, 2, 3}, {4}, {5, 6}};
  Rng rng(1);
  for (int i = 0; i < 20; ++i) {
    const Bag b = BuildBag(r, rng);
    REQUIRE(b.size() == 3);
    CHECK(b.recording_id == 4);
    CHECK(b.target == r.target);
    for (size_t c = 0; c < 3; ++c)
      CHECK(std::find(r.clusters[c].begin(), r.clusters[c].end(), b.segment_ids[c]) != r.clusters[c].end());
  }
  r.clusters = {{7}};
  CHECK(BuildBag(r, rng).segment_ids == std::vector<int64_t>{7});
  r.clusters = {{1}, {}};
  CHECK(KindOf([&] { BuildBag(r, rng); }) == ErrorKind::kEmptyCluster);
  r.clusters = {};
  CHECK(KindOf([&] { BuildBag(r, rng); }) == ErrorKind::kEmptyCluster);
}

TEST_CASE("segments within a cluster are drawn uniformly") {
  Recording r;
  r.clusters = {{10, 11}};
  Rng rng(2);
  int first = 0;
  for (int i = 0; i < 1000; ++i) first += BuildBag(r, rng).segment_ids[0] == 10;
  CHECK(first >= 440);
  CHECK(first <= 560);
}

TEST_CASE("batch bounds for a target of 64") {
  CHECK(Stage1MinBatch(64) == 58);
  CHECK(Stage1MaxBatch(64) == 70);
  CHECK(Stage1MinBatch(10) == 9);
  CHECK(Stage1MaxBatch(10) == 11);
}

TEST_CASE("stage-1 epochs cover every recording once within the size bounds") {
  for (uint64_t seed = 1; seed <= 5; ++seed) {
    const Corpus c = Diarized(seed);
    const auto batches = PlanEpochStage1(c, 64, seed);
    std::multiset<int64_t> seen;
    for (size_t i = 0; i < batches.size(); ++i) {
      const auto n = static_cast<int64_t>(batches[i].size());
      if (i + 1 < batches.size()) {
        CHECK(n >= 58);
        CHECK(n <= 70);
      } else {
        CHECK(n >= 1);
        CHECK(n <= 70);
      }
      for (const Bag &b : batches[i].bags) {
        seen.insert(b.recording_id);
        const Recording &r = c.recording(b.recording_id);
        CHECK(b.size() == r.clusters.size());
        CHECK(b.target == r.target);
      }
    }
    std::multiset<int64_t> expect;
    for (const Recording &r : c.recordings) expect.insert(r.recording_id);
    CHECK(seen == expect);
  }
}

TEST_CASE("unit bags give exact batches") {
  Rng rng(3);
  Corpus c;
  c.n_speakers = 2;
  c.feat_dim = 2;
  for (int i = 0; i < 37; ++i) AddRecording(c, SpeakerId::Known(i % 2), {{SpeakerId::Known(i % 2)}}, rng);
  const auto batches = PlanEpochStage1(c, 10, 4);
  REQUIRE(batches.size() == 4);
  for (size_t i = 0; i < 3; ++i) CHECK(batches[i].size() == 10);
  CHECK(batches[3].size() == 7);
}

TEST_CASE("oversized bags are rejected") {
  Rng rng(4);
  Corpus c;
  c.n_speakers = 1;
  c.feat_dim = 2;
  const SpeakerId a = SpeakerId::Known(0);
  std::vector<std::vector<SpeakerId>> clusters(80, std::vector<SpeakerId>{a});
  AddRecording(c, a, clusters, rng);
  CHECK(KindOf([&] { PlanEpochStage1(c, 64, 1); }) == ErrorKind::kBagTooLarge);
}

TEST_CASE("stage-1 plans are deterministic") {
  const Corpus c = Diarized(2);
  const auto a = PlanEpochStage1(c, 64, 9), b = PlanEpochStage1(c, 64, 9), other = PlanEpochStage1(c, 64, 10);
  auto flat = [](const std::vector<Stage1Batch> &p) {
    std::vector<int64_t> ids;
    for (const auto &batch : p)
      for (const Bag &bag : batch.bags) ids.insert(ids.end(), bag.segment_ids.begin(), bag.segment_ids.end());
    return ids;
  };
  CHECK(flat(a) == flat(b));
  CHECK(flat(a) != flat(other));
}

TEST_CASE("stage-2 batches without an unknown pool") {
  const auto rows = Rows(1000);
  const auto batches = PlanEpochStage2(rows, {}, 100, 1);
  REQUIRE(batches.size() == 10);
  std::set<int64_t> seen;
  for (const auto &b : batches) {
    CHECK(b.size() == 100);
    CHECK(b.n_unknown() == 0);
    for (const auto &r : b.rows) seen.insert(r.segment_id);
  }
  CHECK(seen.size() == 1000);
  CHECK(PlanEpochStage2(Rows(250), {}, 100, 1).back().size() == 50);
  CHECK(batches.front().rows != PlanEpochStage2(rows, {}, 100, 2).front().rows);
}

TEST_CASE("stage-2 batches mix in unknown rows") {
  const auto rows = Rows(900);
  std::vector<int64_t> pool;
  for (int64_t i = 0; i < 40; ++i) pool.push_back(5000 + i);
  const auto batches = PlanEpochStage2(rows, {pool, 0.1}, 100, 3);
  REQUIRE(batches.size() == 10);
  std::set<int64_t> known_seen;
  for (const auto &b : batches) {
    CHECK(b.size() == 100);
    CHECK(b.n_unknown() == 10);
    for (const auto &r : b.rows) {
      if (r.label.is_known()) {
        known_seen.insert(r.segment_id);
      } else {
        CHECK(r.segment_id >= 5000);
      }
    }
  }
  CHECK(known_seen.size() == 900);
}

TEST_CASE("stage-2 errors") {
  CHECK(KindOf([] { PlanEpochStage2({}, {}, 100, 1); }) == ErrorKind::kEmptySelection);
  const std::vector<int64_t> pool = {1, 2};
  const auto rows = Rows(10);
  CHECK(KindOf([&] { PlanEpochStage2(rows, {pool, 1.0}, 100, 1); }) == ErrorKind::kConfigError);
  CHECK(KindOf([] { ValidateMixFraction(1.0, 100); }) == ErrorKind::kConfigError);
  CHECK(KindOf([] { ValidateMixFraction(0.7, 1); }) == ErrorKind::kConfigError);
  CHECK_NOTHROW(ValidateMixFraction(0.1, 100));
}
