// tests/test_diarsim.cc

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
#include "weakspk/diarsim.h"
#include "weakspk/synthgen.h"

using namespace weakspk;

namespace {

std::vector<OracleSegment> MakeSegments(const std::vector<std::pair<SpeakerId, int>> &counts) {
  std::vector<OracleSegment> out;
  int64_t id = 0;
  for (const auto &[who, n] : counts)
    for (int i = 0; i < n; ++i) out.push_back({id++, who});
  return out;
}

DiarConfig Exact() {
  DiarConfig cfg;
  cfg.purity = 1.0;
  cfg.split_factor = 1.0;
  return cfg;
}

void CheckPartition(const ClusterList &clusters, const std::vector<OracleSegment> &segs, bool drop_noise) {
  std::multiset<int64_t> seen;
  for (const auto &c : clusters) {
    CHECK_FALSE(c.empty());
    seen.insert(c.begin(), c.end());
  }
  std::multiset<int64_t> expect;
  for (const auto &s : segs)
    if (!(drop_noise && s.oracle.kind() == SpeakerId::Kind::kNoise)) expect.insert(s.segment_id);
  CHECK(seen == expect);
}

}  // namespace

TEST_CASE("purity 1 and split 1 reproduce the oracle partition") {
  const auto segs = MakeSegments({{SpeakerId::Known(0), 4}, {SpeakerId::Known(3), 3}, {SpeakerId::Noise(), 2}});
  Rng rng(1);
  const ClusterList c = SimulateDiarization(segs, Exact(), rng);
  CHECK(c == ClusterList{{0, 1, 2, 3}, {4, 5, 6}, {7, 8}});
  for (double p : ClusterPurity(c, segs)) CHECK(p == 1.0);
}

TEST_CASE("cluster purity") {
  const auto segs = MakeSegments({{SpeakerId::Known(0), 3}, {SpeakerId::Known(1), 2}});
  CHECK(ClusterPurity({{0, 1, 2, 3}}, segs) == std::vector<double>{0.75});
  CHECK(ClusterPurity({{0, 3}, {1, 2, 4}}, segs) == std::vector<double>{0.5, 2.0 / 3.0});
  CHECK(ClusterPurity({{0, 1, 2}, {3, 4}}, segs) == std::vector<double>{1.0, 1.0});
  CHECK_THROWS_AS(ClusterPurity({{9}}, segs), Error);
}

TEST_CASE("splitting follows split_factor") {
  DiarConfig cfg = Exact();
  cfg.split_factor = 2.0;
  Rng rng(4);
  double clusters = 0, speakers = 0;
  for (int rec = 0; rec < 300; ++rec) {
    const auto segs = MakeSegments({{SpeakerId::Known(0), 6}, {SpeakerId::Known(1), 5}});
    const ClusterList c = SimulateDiarization(segs, cfg, rng);
    CheckPartition(c, segs, false);
    clusters += static_cast<double>(c.size());
    speakers += 2;
  }
  const double mean = clusters / speakers;
  CHECK(mean >= 1.8);
  CHECK(mean <= 2.2);
}

TEST_CASE("fractional split factors average out") {
  DiarConfig cfg = Exact();
  cfg.split_factor = 1.5;
  Rng rng(5);
  double clusters = 0;
  const int n = 2000;
  for (int rec = 0; rec < n; ++rec)
    clusters += static_cast<double>(SimulateDiarization(MakeSegments({{SpeakerId::Known(0), 8}}), cfg, rng).size());
  CHECK(clusters / n == doctest::Approx(1.5).epsilon(0.05));
}

TEST_CASE("max_clusters caps the output") {
  DiarConfig cfg = Exact();
  cfg.split_factor = 3.0;
  cfg.max_clusters = 4;
  Rng rng(6);
  const auto segs = MakeSegments(
      {{SpeakerId::Known(0), 5}, {SpeakerId::Known(1), 5}, {SpeakerId::Unknown(2), 5}, {SpeakerId::Noise(), 3}});
  for (int rec = 0; rec < 50; ++rec) {
    const ClusterList c = SimulateDiarization(segs, cfg, rng);
    CHECK(c.size() <= 4);
    CheckPartition(c, segs, false);
  }
}

TEST_CASE("purity knob sets the mean cluster purity") {
  DiarConfig cfg = Exact();
  cfg.purity = 0.8;
  Rng rng(7);
  double sum = 0;
  int64_t n = 0;
  for (int rec = 0; rec < 400; ++rec) {
    const auto segs =
        MakeSegments({{SpeakerId::Known(0), 10}, {SpeakerId::Known(1), 10}, {SpeakerId::Known(2), 10}});
    const ClusterList c = SimulateDiarization(segs, cfg, rng);
    CheckPartition(c, segs, false);
    for (double p : ClusterPurity(c, segs)) sum += p, ++n;
  }
  const double mean = sum / static_cast<double>(n);
  CHECK(mean >= 0.75);
  CHECK(mean <= 0.85);
}

TEST_CASE("drop_noise removes noise segments") {
  DiarConfig cfg = DiarConfig::Baseline();
  cfg.drop_noise = true;
  Rng rng(8);
  const auto segs = MakeSegments({{SpeakerId::Known(0), 4}, {SpeakerId::Noise(), 3}});
  const ClusterList c = SimulateDiarization(segs, cfg, rng);
  CheckPartition(c, segs, true);
  CHECK(SimulateDiarization(MakeSegments({{SpeakerId::Noise(), 3}}), cfg, rng).empty());
}

TEST_CASE("diarization errors") {
  Rng rng(1);
  CHECK_THROWS_AS(SimulateDiarization({}, Exact(), rng), Error);
  try {
    SimulateDiarization({}, Exact(), rng);
  } catch (const Error &e) {
    CHECK(e.kind() == ErrorKind::kEmptyRecording);
  }
  DiarConfig bad = Exact();
  bad.purity = 0.0;
  CHECK_THROWS_AS(bad.Validate(), Error);
  bad = Exact();
  bad.split_factor = 0.5;
  CHECK_THROWS_AS(bad.Validate(), Error);
  CHECK_THROWS_AS(DiarConfig::Preset("oracle"), Error);
}

TEST_CASE("presets") {
  const DiarConfig b = DiarConfig::Preset("baseline");
  const DiarConfig p = DiarConfig::Preset("pyannote-like");
  CHECK(b.purity < p.purity);
  CHECK(b.split_factor > p.split_factor);
  CHECK(b.max_clusters == 0);
  CHECK(p.max_clusters == 4);
  CHECK_FALSE(b.drop_noise);
  CHECK(p.drop_noise);
}

TEST_CASE("diarizing a corpus keeps it valid and deterministic") {
  SynthConfig scfg;
  scfg.n_speakers = 8;
  scfg.recordings_per_speaker = 4;
  const Corpus base = GenerateCorpus(scfg);
  for (const DiarConfig &cfg : {DiarConfig::Baseline(), DiarConfig::PyannoteLike()}) {
    Corpus a = base, b = base;
    DiarizeCorpus(a, cfg);
    DiarizeCorpus(b, cfg);
    CHECK(ValidateCorpus(a).ok());
    CHECK(FormatIndex(a) == FormatIndex(b));
    for (const Recording &r : a.recordings) {
      std::vector<OracleSegment> segs;
      for (int64_t id : r.segment_ids) segs.push_back({id, a.segment(id).oracle});
      CheckPartition(r.clusters, segs, cfg.drop_noise);
      for (size_t k = 0; k < r.clusters.size(); ++k)
        for (int64_t id : r.clusters[k]) CHECK(a.segment(id).cluster_id == static_cast<int32_t>(k));
    }
  }
}
