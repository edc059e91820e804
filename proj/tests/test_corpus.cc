// tests/test_corpus.cc

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

#include <set>

#include "doctest.h"
#include "test_util.h"
#include "weakspk/corpus.h"
#include "weakspk/diarsim.h"
#include "weakspk/io.h"
#include "weakspk/synthgen.h"

using namespace weakspk;
using weakspk::testing::AddRecording;
using weakspk::testing::TempDir;
using weakspk::testing::ToyCorpus;

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

void CheckSameCorpus(const Corpus &a, const Corpus &b) {
  REQUIRE(a.n_speakers == b.n_speakers);
  REQUIRE(a.feat_dim == b.feat_dim);
  REQUIRE(a.unknown_pool_present == b.unknown_pool_present);
  REQUIRE(a.recordings.size() == b.recordings.size());
  for (size_t i = 0; i < a.recordings.size(); ++i) {
    CHECK(a.recordings[i].recording_id == b.recordings[i].recording_id);
    CHECK(a.recordings[i].target == b.recordings[i].target);
    CHECK(a.recordings[i].clusters == b.recordings[i].clusters);
    CHECK(a.recordings[i].segment_ids == b.recordings[i].segment_ids);
  }
  REQUIRE(a.segments.size() == b.segments.size());
  for (const auto &[id, s] : a.segments) {
    const Segment &t = b.segment(id);
    CHECK(s.recording_id == t.recording_id);
    CHECK(s.cluster_id == t.cluster_id);
    CHECK(s.oracle == t.oracle);
    REQUIRE(s.features.rows() == t.features.rows());
    CHECK(std::memcmp(s.features.data(), t.features.data(), sizeof(float) * s.features.size()) == 0);
  }
}

}  // namespace

TEST_CASE("speaker id text form") {
  for (const SpeakerId &id : {SpeakerId::Known(0), SpeakerId::Known(39), SpeakerId::Unknown(3), SpeakerId::Noise()})
    CHECK(SpeakerId::Parse(id.ToString()) == id);
  CHECK(SpeakerId::Known(12).ToString() == "12");
  CHECK(SpeakerId::Unknown(3).ToString() == "U3");
  CHECK(SpeakerId::Noise().ToString() == "N");
  CHECK(KindOf([] { SpeakerId::Unknown().index(); }) == ErrorKind::kInvalidLabel);
  CHECK(KindOf([] { SpeakerId::Noise().index(); }) == ErrorKind::kInvalidLabel);
  CHECK(KindOf([] { SpeakerId::Parse("-4"); }) == ErrorKind::kInvalidLabel);
}

TEST_CASE("validation accepts a well-formed corpus") {
  const ValidationReport r = ValidateCorpus(ToyCorpus());
  CHECK(r.ok());
  CHECK(r.Summary().empty());
}

TEST_CASE("validation reports each broken invariant") {
  SUBCASE("missing target speech") {
    Corpus c = ToyCorpus();
    for (int64_t id : c.recordings[0].segment_ids) c.segments.at(id).oracle = SpeakerId::Known(1);
    CHECK(ValidateCorpus(c).Has(ErrorKind::kMissingTargetSpeech));
  }
  SUBCASE("dangling segment reference") {
    Corpus c = ToyCorpus();
    c.recordings[1].clusters[0].push_back(999);
    CHECK(ValidateCorpus(c).Has(ErrorKind::kUnresolvedReference));
  }
  SUBCASE("empty cluster") {
    Corpus c = ToyCorpus();
    c.recordings[0].clusters.push_back({});
    CHECK(ValidateCorpus(c).Has(ErrorKind::kEmptyCluster));
  }
  SUBCASE("segment in two clusters") {
    Corpus c = ToyCorpus();
    c.recordings[0].clusters[1].push_back(c.recordings[0].clusters[0][0]);
    CHECK(ValidateCorpus(c).Has(ErrorKind::kDuplicateSegment));
  }
  SUBCASE("non-finite features") {
    Corpus c = ToyCorpus();
    c.segments.begin()->second.features(0, 0) = std::numeric_limits<float>::quiet_NaN();
    CHECK(ValidateCorpus(c).Has(ErrorKind::kInvalidFeatures));
  }
  SUBCASE("known speaker that is never a target") {
    Corpus c = ToyCorpus();
    c.n_speakers = 3;
    CHECK_FALSE(ValidateCorpus(c).ok());
  }
}

TEST_CASE("default synthetic corpus validates") {
  Corpus c = GenerateCorpus(SynthConfig{});
  CHECK(ValidateCorpus(c).ok());
  DiarizeCorpus(c, DiarConfig::Baseline());
  CHECK(ValidateCorpus(c).ok());
}

TEST_CASE("manifest round trip is exact") {
  TempDir dir("manifest");
  SynthConfig cfg;
  cfg.n_speakers = 6;
  cfg.recordings_per_speaker = 3;
  Corpus c = GenerateCorpus(cfg);
  DiarizeCorpus(c, DiarConfig::PyannoteLike());  // drops noise: some cluster_id == -1
  SaveManifest(c, dir.path());
  const Corpus back = LoadManifest(dir.path());
  CheckSameCorpus(c, back);
  CHECK(FormatIndex(back) == FormatIndex(c));
  CHECK(EncodeFeatures(back) == EncodeFeatures(c));
  CHECK(ReadFileBytes(dir.path() / "corpus.idx") == FormatIndex(c));
}

TEST_CASE("index and feature file layout") {
  const Corpus c = ToyCorpus();
  const std::string idx = FormatIndex(c);
  CHECK(idx.rfind("H 2 3 1\n", 0) == 0);
  CHECK(idx.find("R 0 0 2\n") != std::string::npos);
  CHECK(idx.find("C 0 0 1\n") != std::string::npos);
  CHECK(idx.find("S 5 N 3 15\n") != std::string::npos);

  const std::string feat = EncodeFeatures(c);
  ByteReader r(feat);
  CHECK(r.GetBytes(4) == "WMLF");
  CHECK(r.GetU32() == 1);
  CHECK(r.GetU32() == 3);
  CHECK(r.GetU32() == 0);
  CHECK(r.remaining() == 6 * 3 * 3 * sizeof(float));
  CHECK(r.GetF32() == c.segment(0).features(0, 0));
}

TEST_CASE("loading rejects corrupt manifests") {
  TempDir dir("corrupt");
  const Corpus c = ToyCorpus();
  SaveManifest(c, dir.path());
  std::string feat = ReadFileBytes(dir.path() / "corpus.feat");
  WriteFileAtomic(dir.path() / "corpus.feat", "XXXX" + feat.substr(4));
  CHECK(KindOf([&] { LoadManifest(dir.path()); }) == ErrorKind::kFormatError);
  WriteFileAtomic(dir.path() / "corpus.feat", feat.substr(0, feat.size() - 4));
  CHECK(KindOf([&] { LoadManifest(dir.path()); }) == ErrorKind::kFormatError);
  CHECK(KindOf([&] { LoadManifest(dir.path() / "absent"); }) == ErrorKind::kMissingArtifacts);
}

TEST_CASE("dangling references survive loading so validation can report them") {
  TempDir dir("dangling");
  Corpus c = ToyCorpus();
  SaveManifest(c, dir.path());
  std::string idx = ReadFileBytes(dir.path() / "corpus.idx");
  const auto pos = idx.find("C 0 0 1\n");
  REQUIRE(pos != std::string::npos);
  idx.replace(pos, 8, "C 0 0 1 999\n");
  WriteFileAtomic(dir.path() / "corpus.idx", idx);
  const Corpus back = LoadManifest(dir.path());
  CHECK(ValidateCorpus(back).Has(ErrorKind::kUnresolvedReference));
}

TEST_CASE("oracle file round trip") {
  TempDir dir("oracle");
  const Corpus c = ToyCorpus();
  SaveOracle(c, dir.path() / "oracle.tsv");
  const auto oracle = LoadOracle(dir.path() / "oracle.tsv");
  REQUIRE(oracle.size() == c.segments.size());
  for (const auto &[id, s] : c.segments) CHECK(oracle.at(id) == s.oracle);
  CHECK(ReadFileBytes(dir.path() / "oracle.tsv").rfind("0\t0\n1\t0\n2\t1\n3\t1\n4\tU0\n5\tN\n", 0) == 0);
}

TEST_CASE("Without drops recordings and their segments") {
  const Corpus c = ToyCorpus();
  const Corpus d = c.Without({0});
  CHECK(d.recordings.size() == 1);
  CHECK(d.recordings[0].recording_id == 1);
  CHECK(d.segments.size() == 3);
  CHECK_FALSE(d.segments.count(0));
}

namespace {

Corpus TrialCorpus() {
  SynthConfig cfg;
  cfg.n_speakers = 6;
  cfg.recordings_per_speaker = 5;
  return GenerateCorpus(cfg);
}

}  // namespace

TEST_CASE("trial split counts and determinism") {
  const Corpus c = TrialCorpus();
  const TrialList a = SplitTrials(c, 50, 50, 7);
  const TrialList b = SplitTrials(c, 50, 50, 7);
  CHECK(a.trials.size() == 100);
  int targets = 0;
  for (const Trial &t : a.trials) targets += t.is_target;
  CHECK(targets == 50);
  CHECK(a.trials == b.trials);
  CHECK(a.heldout_recordings == b.heldout_recordings);
  CHECK_FALSE(SplitTrials(c, 50, 50, 8).trials == a.trials);
}

TEST_CASE("trials pair held-out segments across recordings with correct labels") {
  const Corpus c = TrialCorpus();
  const TrialList list = SplitTrials(c, 100, 300, 3);
  const std::set<int64_t> held(list.heldout_recordings.begin(), list.heldout_recordings.end());
  // 5 recordings per speaker -> max(2, ceil(0.2 * 5)) = 2 held out each.
  CHECK(held.size() == 12);
  std::set<std::pair<int64_t, int64_t>> seen;
  for (const Trial &t : list.trials) {
    const Segment &e = c.segment(t.enroll_segment_id), &s = c.segment(t.test_segment_id);
    CHECK(t.enroll_segment_id != t.test_segment_id);
    CHECK(e.recording_id != s.recording_id);
    CHECK(held.count(e.recording_id));
    CHECK(held.count(s.recording_id));
    CHECK(e.oracle.is_known());
    CHECK(s.oracle.is_known());
    CHECK(t.is_target == (e.oracle == s.oracle));
    CHECK(seen.insert({std::min(t.enroll_segment_id, t.test_segment_id),
                       std::max(t.enroll_segment_id, t.test_segment_id)}).second);
  }
}

TEST_CASE("trial split errors") {
  Rng rng(1);
  Corpus one;
  one.n_speakers = 1;
  one.feat_dim = 3;
  const SpeakerId a = SpeakerId::Known(0);
  for (int r = 0; r < 4; ++r) AddRecording(one, a, {{a, a}}, rng);
  CHECK(KindOf([&] { SplitTrials(one, 1, 10, 1); }) == ErrorKind::kInsufficientSegments);
  CHECK(KindOf([&] { SplitTrials(TrialCorpus(), 1000000, 10, 1); }) == ErrorKind::kInsufficientSegments);
}

TEST_CASE("trial files round trip") {
  TempDir dir("trials");
  const TrialList list = SplitTrials(TrialCorpus(), 10, 20, 5);
  SaveTrials(list, dir.path());
  const TrialList back = LoadTrials(dir.path());
  CHECK(back.trials == list.trials);
  CHECK(back.heldout_recordings == list.heldout_recordings);
  const std::string text = ReadFileBytes(dir.path() / "trials.tsv");
  const auto &t0 = list.trials[0];
  CHECK(text.rfind(std::to_string(t0.enroll_segment_id) + "\t" + std::to_string(t0.test_segment_id) + "\t" +
                       (t0.is_target ? "1" : "0") + "\n",
                   0) == 0);
}
