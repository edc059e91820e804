// src/corpus.cc

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

#include "weakspk/corpus.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "weakspk/io.h"
#include "weakspk/rng.h"

namespace weakspk {

namespace {

constexpr char kFeatMagic[4] = {'W', 'M', 'L', 'F'};
constexpr uint32_t kFeatVersion = 1;

int64_t ParseInt(std::string_view tok, std::string_view what) {
  int64_t v = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size())
    Fail(ErrorKind::kFormatError, "bad integer '", tok, "' for ", what);
  return v;
}

std::vector<std::string_view> SplitWs(std::string_view line) {
  std::vector<std::string_view> out;
  size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

}  // namespace

std::string SpeakerId::ToString() const {
  switch (kind_) {
    case Kind::kKnown: return std::to_string(value_);
    case Kind::kUnknown: return "U" + std::to_string(value_);
    case Kind::kNoise: return "N";
  }
  return "?";
}

SpeakerId SpeakerId::Parse(std::string_view text) {
  if (text == "N") return Noise();
  if (!text.empty() && text[0] == 'U') {
    int64_t v = text.size() == 1 ? 0 : ParseInt(text.substr(1), "unknown speaker");
    return Unknown(static_cast<int32_t>(v));
  }
  int64_t v = ParseInt(text, "speaker id");
  if (v < 0) Fail(ErrorKind::kInvalidLabel, "negative speaker id ", v);
  return Known(static_cast<int32_t>(v));
}

const Segment &Corpus::segment(int64_t id) const {
  auto it = segments.find(id);
  if (it == segments.end()) Fail(ErrorKind::kUnresolvedReference, "segment ", id);
  return it->second;
}

const Recording &Corpus::recording(int64_t id) const {
  for (const Recording &r : recordings)
    if (r.recording_id == id) return r;
  Fail(ErrorKind::kUnresolvedReference, "recording ", id);
}

Corpus Corpus::Without(const std::set<int64_t> &excluded) const {
  Corpus out;
  out.n_speakers = n_speakers;
  out.feat_dim = feat_dim;
  out.unknown_pool_present = unknown_pool_present;
  for (const Recording &r : recordings) {
    if (excluded.count(r.recording_id)) continue;
    out.recordings.push_back(r);
  }
  for (const auto &[id, seg] : segments)
    if (!excluded.count(seg.recording_id)) out.segments.emplace(id, seg);
  return out;
}

void Corpus::SyncClusterIds() {
  for (auto &[id, seg] : segments) seg.cluster_id = -1;
  for (const Recording &r : recordings)
    for (size_t c = 0; c < r.clusters.size(); ++c)
      for (int64_t id : r.clusters[c]) {
        auto it = segments.find(id);
        if (it != segments.end()) it->second.cluster_id = static_cast<int32_t>(c);
      }
}

bool ValidationReport::Has(ErrorKind kind) const {
  return std::any_of(violations.begin(), violations.end(),
                     [kind](const Violation &v) { return v.kind == kind; });
}

std::string ValidationReport::Summary() const {
  std::ostringstream os;
  for (const Violation &v : violations) os << ErrorKindName(v.kind) << ": " << v.detail << "\n";
  return os.str();
}

ValidationReport ValidateCorpus(const Corpus &corpus) {
  ValidationReport report;
  auto add = [&report](ErrorKind kind, auto &&...args) {
    std::ostringstream os;
    (os << ... << args);
    report.violations.push_back({kind, os.str()});
  };

  if (corpus.n_speakers < 1) add(ErrorKind::kInvalidLabel, "corpus has no known speakers");
  if (corpus.feat_dim < 1) add(ErrorKind::kInvalidFeatures, "feat_dim ", corpus.feat_dim);

  auto label_ok = [&corpus](const SpeakerId &s) {
    return !s.is_known() || s.raw_value() < corpus.n_speakers;
  };

  std::set<int64_t> recording_ids;
  for (const Recording &r : corpus.recordings)
    if (!recording_ids.insert(r.recording_id).second)
      add(ErrorKind::kDuplicateSegment, "recording id ", r.recording_id, " repeated");

  for (const auto &[id, seg] : corpus.segments) {
    if (seg.segment_id != id) add(ErrorKind::kFormatError, "segment key ", id, " holds id ", seg.segment_id);
    if (seg.features.rows() < 1) add(ErrorKind::kInvalidFeatures, "segment ", id, " has no frames");
    if (seg.features.cols() != corpus.feat_dim)
      add(ErrorKind::kInvalidFeatures, "segment ", id, " has dim ", seg.features.cols());
    if (!seg.features.allFinite()) add(ErrorKind::kInvalidFeatures, "segment ", id, " has non-finite values");
    if (!label_ok(seg.oracle)) add(ErrorKind::kInvalidLabel, "segment ", id, " oracle ", seg.oracle.ToString());
    if (!recording_ids.count(seg.recording_id))
      add(ErrorKind::kUnresolvedReference, "segment ", id, " names missing recording ", seg.recording_id);
  }

  std::vector<int> target_count(std::max(corpus.n_speakers, 0), 0);
  for (const Recording &r : corpus.recordings) {
    if (!r.target.is_known() || !label_ok(r.target)) {
      add(ErrorKind::kInvalidLabel, "recording ", r.recording_id, " target ", r.target.ToString());
    } else {
      ++target_count[r.target.index()];
    }
    if (r.clusters.empty()) add(ErrorKind::kEmptyCluster, "recording ", r.recording_id, " has no clusters");
    std::set<int64_t> seen;
    for (size_t c = 0; c < r.clusters.size(); ++c) {
      if (r.clusters[c].empty())
        add(ErrorKind::kEmptyCluster, "recording ", r.recording_id, " cluster ", c);
      for (int64_t id : r.clusters[c]) {
        auto it = corpus.segments.find(id);
        if (it == corpus.segments.end()) {
          add(ErrorKind::kUnresolvedReference, "recording ", r.recording_id, " cluster ", c,
              " references segment ", id);
        } else if (it->second.recording_id != r.recording_id) {
          add(ErrorKind::kUnresolvedReference, "segment ", id, " clustered under recording ",
              r.recording_id, " but belongs to ", it->second.recording_id);
        }
        if (!seen.insert(id).second)
          add(ErrorKind::kDuplicateSegment, "segment ", id, " appears twice in recording ", r.recording_id);
      }
    }
    bool has_target = false;
    for (int64_t id : r.segment_ids) {
      auto it = corpus.segments.find(id);
      if (it == corpus.segments.end()) {
        add(ErrorKind::kUnresolvedReference, "recording ", r.recording_id, " lists segment ", id);
        continue;
      }
      if (it->second.oracle == r.target) has_target = true;
    }
    if (!has_target)
      add(ErrorKind::kMissingTargetSpeech, "recording ", r.recording_id, " has no segment of target ",
          r.target.ToString());
  }
  for (int32_t k = 0; k < corpus.n_speakers; ++k)
    if (target_count[k] == 0) add(ErrorKind::kMissingTargetSpeech, "speaker ", k, " is target of no recording");
  return report;
}

TrialList SplitTrials(const Corpus &corpus, int64_t n_target, int64_t n_nontarget, uint64_t seed,
                      const TrialSplitConfig &cfg) {
  Rng rng(seed);
  std::map<int32_t, std::vector<int64_t>> by_speaker;
  for (const Recording &r : corpus.recordings) by_speaker[r.target.index()].push_back(r.recording_id);

  TrialList out;
  for (auto &[spk, recs] : by_speaker) {
    std::sort(recs.begin(), recs.end());
    const int64_t n = static_cast<int64_t>(recs.size());
    int64_t n_held = static_cast<int64_t>(std::ceil(cfg.heldout_fraction * n - 1e-9));
    n_held = std::min<int64_t>(std::max<int64_t>(n_held, cfg.min_heldout_per_speaker), n - 1);
    rng.Shuffle(std::span<int64_t>(recs));
    out.heldout_recordings.insert(out.heldout_recordings.end(), recs.begin(), recs.begin() + n_held);
  }
  std::sort(out.heldout_recordings.begin(), out.heldout_recordings.end());
  const std::set<int64_t> held(out.heldout_recordings.begin(), out.heldout_recordings.end());

  std::vector<const Segment *> pool;
  for (const auto &[id, seg] : corpus.segments)
    if (held.count(seg.recording_id) && seg.oracle.is_known()) pool.push_back(&seg);

  std::vector<Trial> targets, nontargets;
  for (size_t i = 0; i < pool.size(); ++i)
    for (size_t j = i + 1; j < pool.size(); ++j) {
      if (pool[i]->recording_id == pool[j]->recording_id) continue;
      const bool same = pool[i]->oracle == pool[j]->oracle;
      (same ? targets : nontargets)
          .push_back({pool[i]->segment_id, pool[j]->segment_id, same});
    }
  if (static_cast<int64_t>(targets.size()) < n_target ||
      static_cast<int64_t>(nontargets.size()) < n_nontarget)
    Fail(ErrorKind::kInsufficientSegments, "requested ", n_target, " target / ", n_nontarget,
         " non-target trials, available ", targets.size(), " / ", nontargets.size());

  auto take = [&rng](std::vector<Trial> &from, int64_t n, std::vector<Trial> &to) {
    // Partial Fisher-Yates: the first n slots become a uniform sample.
    for (int64_t i = 0; i < n; ++i) {
      const size_t j = i + rng.UniformInt(from.size() - i);
      std::swap(from[i], from[j]);
      to.push_back(from[i]);
    }
  };
  take(targets, n_target, out.trials);
  take(nontargets, n_nontarget, out.trials);
  rng.Shuffle(std::span<Trial>(out.trials));
  return out;
}

std::string FormatIndex(const Corpus &corpus) {
  std::ostringstream os;
  os << "H " << corpus.n_speakers << ' ' << corpus.feat_dim << ' '
     << (corpus.unknown_pool_present ? 1 : 0) << '\n';
  // Frame offsets follow segment-id order of the feature file.
  std::map<int64_t, int64_t> offset;
  int64_t next = 0;
  for (const auto &[id, seg] : corpus.segments) {
    offset[id] = next;
    next += seg.n_frames();
  }
  for (const Recording &r : corpus.recordings) {
    os << "R " << r.recording_id << ' ' << r.target.ToString() << ' ' << r.clusters.size() << '\n';
    for (size_t c = 0; c < r.clusters.size(); ++c) {
      os << "C " << c;
      for (int64_t id : r.clusters[c]) os << ' ' << id;
      os << '\n';
    }
    for (int64_t id : r.segment_ids) {
      auto it = corpus.segments.find(id);
      if (it == corpus.segments.end()) continue;
      os << "S " << id << ' ' << it->second.oracle.ToString() << ' ' << it->second.n_frames() << ' '
         << offset[id] << '\n';
    }
  }
  return os.str();
}

std::string EncodeFeatures(const Corpus &corpus) {
  ByteWriter w;
  w.PutBytes(std::string_view(kFeatMagic, 4));
  w.PutU32(kFeatVersion);
  w.PutU32(static_cast<uint32_t>(corpus.feat_dim));
  w.PutU32(0);
  for (const auto &[id, seg] : corpus.segments)
    for (Eigen::Index i = 0; i < seg.features.size(); ++i) w.PutF32(seg.features.data()[i]);
  return w.Take();
}

void SaveManifest(const Corpus &corpus, const std::filesystem::path &dir) {
  WriteFileAtomic(dir / "corpus.feat", EncodeFeatures(corpus));
  WriteFileAtomic(dir / "corpus.idx", FormatIndex(corpus));
}

Corpus LoadManifest(const std::filesystem::path &dir) {
  const std::string feat = ReadFileBytes(dir / "corpus.feat");
  const std::string idx = ReadFileBytes(dir / "corpus.idx");

  ByteReader reader(feat);
  if (reader.GetBytes(4) != std::string_view(kFeatMagic, 4))
    Fail(ErrorKind::kFormatError, "corpus.feat: bad magic");
  const uint32_t version = reader.GetU32();
  if (version != kFeatVersion) Fail(ErrorKind::kFormatError, "corpus.feat: unsupported version ", version);
  const uint32_t feat_dim = reader.GetU32();
  reader.GetU32();
  const size_t header_bytes = reader.position();
  const size_t n_floats = reader.remaining() / 4;

  Corpus corpus;
  corpus.feat_dim = static_cast<int32_t>(feat_dim);
  Recording *current = nullptr;
  std::istringstream lines(idx);
  std::string line;
  int line_no = 0;
  while (std::getline(lines, line)) {
    ++line_no;
    auto tok = SplitWs(line);
    if (tok.empty() || tok[0].starts_with("#")) continue;
    const std::string_view tag = tok[0];
    if (tag == "H") {
      if (tok.size() != 4) Fail(ErrorKind::kFormatError, "corpus.idx:", line_no, ": malformed H line");
      corpus.n_speakers = static_cast<int32_t>(ParseInt(tok[1], "n_speakers"));
      if (ParseInt(tok[2], "feat_dim") != feat_dim)
        Fail(ErrorKind::kFormatError, "corpus.idx feat_dim disagrees with corpus.feat");
      corpus.unknown_pool_present = ParseInt(tok[3], "unknown flag") != 0;
    } else if (tag == "R") {
      if (tok.size() != 4) Fail(ErrorKind::kFormatError, "corpus.idx:", line_no, ": malformed R line");
      Recording r;
      r.recording_id = ParseInt(tok[1], "recording_id");
      r.target = SpeakerId::Parse(tok[2]);
      r.clusters.reserve(ParseInt(tok[3], "n_clusters"));
      corpus.recordings.push_back(std::move(r));
      current = &corpus.recordings.back();
    } else if (tag == "C") {
      if (!current || tok.size() < 2) Fail(ErrorKind::kFormatError, "corpus.idx:", line_no, ": stray C line");
      if (ParseInt(tok[1], "cluster_id") != static_cast<int64_t>(current->clusters.size()))
        Fail(ErrorKind::kFormatError, "corpus.idx:", line_no, ": cluster ids must be consecutive");
      std::vector<int64_t> members;
      for (size_t i = 2; i < tok.size(); ++i) members.push_back(ParseInt(tok[i], "segment_id"));
      current->clusters.push_back(std::move(members));
    } else if (tag == "S") {
      if (!current || tok.size() != 5) Fail(ErrorKind::kFormatError, "corpus.idx:", line_no, ": stray S line");
      Segment seg;
      seg.segment_id = ParseInt(tok[1], "segment_id");
      seg.recording_id = current->recording_id;
      seg.oracle = SpeakerId::Parse(tok[2]);
      const int64_t n_frames = ParseInt(tok[3], "n_frames");
      const int64_t offset = ParseInt(tok[4], "offset");
      if (n_frames < 0 || offset < 0 ||
          static_cast<size_t>((offset + n_frames) * feat_dim) > n_floats)
        Fail(ErrorKind::kFormatError, "corpus.idx:", line_no, ": frames out of range");
      seg.features.resize(n_frames, feat_dim);
      ByteReader frames(std::string_view(feat).substr(header_bytes + offset * feat_dim * 4));
      for (Eigen::Index i = 0; i < seg.features.size(); ++i) seg.features.data()[i] = frames.GetF32();
      current->segment_ids.push_back(seg.segment_id);
      corpus.segments.emplace(seg.segment_id, std::move(seg));
    } else {
      Fail(ErrorKind::kFormatError, "corpus.idx:", line_no, ": unknown record '", tag, "'");
    }
  }
  corpus.SyncClusterIds();
  return corpus;
}

void SaveOracle(const Corpus &corpus, const std::filesystem::path &path) {
  std::ostringstream os;
  for (const auto &[id, seg] : corpus.segments) os << id << '\t' << seg.oracle.ToString() << '\n';
  WriteFileAtomic(path, os.str());
}

std::map<int64_t, SpeakerId> LoadOracle(const std::filesystem::path &path) {
  std::map<int64_t, SpeakerId> out;
  std::istringstream is(ReadFileBytes(path));
  std::string line;
  while (std::getline(is, line)) {
    auto tok = SplitWs(line);
    if (tok.empty()) continue;
    if (tok.size() != 2) Fail(ErrorKind::kFormatError, "oracle.tsv: malformed line '", line, "'");
    out[ParseInt(tok[0], "segment_id")] = SpeakerId::Parse(tok[1]);
  }
  return out;
}

void SaveTrials(const TrialList &trials, const std::filesystem::path &dir) {
  std::ostringstream os;
  for (const Trial &t : trials.trials)
    os << t.enroll_segment_id << '\t' << t.test_segment_id << '\t' << (t.is_target ? 1 : 0) << '\n';
  WriteFileAtomic(dir / "trials.tsv", os.str());
  std::ostringstream held;
  for (int64_t id : trials.heldout_recordings) held << id << '\n';
  WriteFileAtomic(dir / "heldout.txt", held.str());
}

TrialList LoadTrials(const std::filesystem::path &dir) {
  TrialList out;
  std::istringstream is(ReadFileBytes(dir / "trials.tsv"));
  std::string line;
  while (std::getline(is, line)) {
    auto tok = SplitWs(line);
    if (tok.empty()) continue;
    if (tok.size() != 3) Fail(ErrorKind::kFormatError, "trials.tsv: malformed line '", line, "'");
    const int64_t label = ParseInt(tok[2], "trial label");
    if (label != 0 && label != 1) Fail(ErrorKind::kFormatError, "trials.tsv: label must be 0 or 1");
    out.trials.push_back({ParseInt(tok[0], "enroll"), ParseInt(tok[1], "test"), label == 1});
  }
  std::istringstream hs(ReadFileBytes(dir / "heldout.txt"));
  while (std::getline(hs, line)) {
    auto tok = SplitWs(line);
    if (!tok.empty()) out.heldout_recordings.push_back(ParseInt(tok[0], "recording_id"));
  }
  return out;
}

}  // namespace weakspk
