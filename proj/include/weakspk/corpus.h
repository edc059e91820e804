// weakspk/corpus.h

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

// Weakly-labeled corpus: recordings carry only a target-speaker label, their
// segments are grouped into diarized clusters, and per-segment oracle labels
// are kept for evaluation only.

#ifndef WEAKSPK_CORPUS_H_
#define WEAKSPK_CORPUS_H_

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "weakspk/errors.h"

namespace weakspk {

/// Speaker label.  Known speakers are dense indices 0..|T|-1 into the
/// prototype matrix.  Unknown speakers (outside T) carry a source index that
/// only distinguishes them from each other in oracle data; noise carries none.
/// Text form: "12", "U3", "N".
class SpeakerId {
 public:
  enum class Kind : uint8_t { kKnown, kUnknown, kNoise };

  SpeakerId() = default;
  static SpeakerId Known(int32_t index) { return SpeakerId(Kind::kKnown, index); }
  static SpeakerId Unknown(int32_t source = 0) { return SpeakerId(Kind::kUnknown, source); }
  static SpeakerId Noise() { return SpeakerId(Kind::kNoise, 0); }

  Kind kind() const { return kind_; }
  bool is_known() const { return kind_ == Kind::kKnown; }

  // Prototype row; only valid for known speakers.
  int32_t index() const {
    if (!is_known()) Fail(ErrorKind::kInvalidLabel, "index() of non-known speaker ", ToString());
    return value_;
  }
  int32_t raw_value() const { return value_; }

  std::string ToString() const;
  static SpeakerId Parse(std::string_view text);

  friend bool operator==(const SpeakerId &, const SpeakerId &) = default;
  friend auto operator<=>(const SpeakerId &, const SpeakerId &) = default;

 private:
  SpeakerId(Kind kind, int32_t value) : kind_(kind), value_(value) {}
  Kind kind_ = Kind::kKnown;
  int32_t value_ = 0;
};

using FeatureMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Segment {
  int64_t segment_id = 0;
  int64_t recording_id = 0;
  // Index of the cluster holding this segment, -1 when diarization dropped it.
  int32_t cluster_id = -1;
  FeatureMatrix features;  // n_frames x feat_dim
  SpeakerId oracle;

  int64_t n_frames() const { return features.rows(); }
};

struct Recording {
  int64_t recording_id = 0;
  SpeakerId target;
  // clusters[c] lists the segment ids in cluster c.
  std::vector<std::vector<int64_t>> clusters;
  // Every segment of the recording in id order, clustered or not.
  std::vector<int64_t> segment_ids;
};

struct Corpus {
  int32_t n_speakers = 0;
  int32_t feat_dim = 0;
  bool unknown_pool_present = false;
  std::vector<Recording> recordings;
  std::map<int64_t, Segment> segments;

  const Segment &segment(int64_t id) const;
  const Recording &recording(int64_t id) const;

  // Copy restricted to recordings not in `excluded`; segments of excluded
  // recordings are dropped as well.
  Corpus Without(const std::set<int64_t> &excluded) const;

  // Re-derives Segment::cluster_id from the recordings' cluster lists.
  void SyncClusterIds();
};

struct Violation {
  ErrorKind kind;
  std::string detail;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
  bool Has(ErrorKind kind) const;
  std::string Summary() const;
};

ValidationReport ValidateCorpus(const Corpus &corpus);

struct Trial {
  int64_t enroll_segment_id = 0;
  int64_t test_segment_id = 0;
  bool is_target = false;

  friend bool operator==(const Trial &, const Trial &) = default;
};

struct TrialList {
  std::vector<Trial> trials;
  // Recordings reserved for evaluation; training must exclude them.
  std::vector<int64_t> heldout_recordings;
};

struct TrialSplitConfig {
  double heldout_fraction = 0.2;
  // Lower bound on held-out recordings per speaker; two are needed for
  // cross-recording target trials.
  int min_heldout_per_speaker = 2;
};

/// Holds out ceil(heldout_fraction * n) recordings per speaker (at least
/// min_heldout_per_speaker, at most n - 1) and draws exactly n_target same
/// speaker and n_nontarget different speaker trials from the known-speaker
/// segments of the held-out recordings.  Pairs always span two recordings.
/// Throws kInsufficientSegments when the requested counts cannot be met.
TrialList SplitTrials(const Corpus &corpus, int64_t n_target, int64_t n_nontarget,
                      uint64_t seed, const TrialSplitConfig &cfg = {});

// Manifest: <dir>/corpus.idx and <dir>/corpus.feat.
void SaveManifest(const Corpus &corpus, const std::filesystem::path &dir);
Corpus LoadManifest(const std::filesystem::path &dir);

std::string FormatIndex(const Corpus &corpus);
std::string EncodeFeatures(const Corpus &corpus);

// oracle.tsv: "<segment_id>\t<oracle_label>" in segment-id order.
void SaveOracle(const Corpus &corpus, const std::filesystem::path &path);
std::map<int64_t, SpeakerId> LoadOracle(const std::filesystem::path &path);

void SaveTrials(const TrialList &trials, const std::filesystem::path &dir);
TrialList LoadTrials(const std::filesystem::path &dir);

}  // namespace weakspk

#endif  // WEAKSPK_CORPUS_H_
