// src/synthgen.cc

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

#include "weakspk/synthgen.h"

#include <algorithm>
#include <cmath>
#include <map>

namespace weakspk {

namespace {

constexpr uint64_t kStreamKnown = 1;
constexpr uint64_t kStreamUnknown = 2;
constexpr uint64_t kStreamLift = 3;
constexpr uint64_t kStreamRecordings = 16;

Eigen::VectorXd RandomUnit(int32_t dim, Rng &rng) {
  Eigen::VectorXd v(dim);
  double norm = 0.0;
  do {
    for (int32_t i = 0; i < dim; ++i) v[i] = rng.Gaussian();
    norm = v.norm();
  } while (norm < 1e-12);
  return v / norm;
}

void CheckRange(const CountRange &r, int64_t min_lo, const char *name) {
  if (r.lo < min_lo || r.hi < r.lo)
    Fail(ErrorKind::kDegenerateConfig, name, " range [", r.lo, ", ", r.hi, "] invalid");
}

struct DraftSegment {
  SpeakerId oracle;
  FeatureMatrix features;
};

}  // namespace

void SynthConfig::Validate() const {
  if (n_speakers < 2) Fail(ErrorKind::kDegenerateConfig, "n_speakers must be >= 2, got ", n_speakers);
  if (latent_dim < 2) Fail(ErrorKind::kDegenerateConfig, "latent_dim must be >= 2");
  if (feat_dim < latent_dim) Fail(ErrorKind::kDegenerateConfig, "feat_dim must be >= latent_dim");
  if (recordings_per_speaker < 1) Fail(ErrorKind::kDegenerateConfig, "recordings_per_speaker must be >= 1");
  CheckRange(segments_per_recording, 1, "segments_per_recording");
  CheckRange(frames_per_segment, 1, "frames_per_segment");
  CheckRange(distractors_per_recording, 0, "distractors_per_recording");
  if (!(noise_segment_prob >= 0.0 && noise_segment_prob < 1.0))
    Fail(ErrorKind::kDegenerateConfig, "noise_segment_prob must be in [0, 1)");
  if (!(target_speech_fraction > 0.0 && target_speech_fraction <= 1.0))
    Fail(ErrorKind::kDegenerateConfig, "target_speech_fraction must be in (0, 1]");
  if (!(within_speaker_noise > 0.0)) Fail(ErrorKind::kDegenerateConfig, "within_speaker_noise must be > 0");
  if (!(lift_gain > 0.0)) Fail(ErrorKind::kDegenerateConfig, "lift_gain must be > 0");
  if (unknown_speaker_count < 0) Fail(ErrorKind::kDegenerateConfig, "unknown_speaker_count must be >= 0");
}

std::vector<VoicePrint> GenerateSpeakers(int32_t n, int32_t latent_dim, uint64_t seed) {
  if (n < 2) Fail(ErrorKind::kDegenerateConfig, "need at least 2 speakers, got ", n);
  if (latent_dim < 2) Fail(ErrorKind::kDegenerateConfig, "latent_dim must be >= 2");
  Rng rng(seed);
  std::vector<VoicePrint> out(n);
  for (auto &v : out) v.latent = RandomUnit(latent_dim, rng);
  return out;
}

Eigen::VectorXd FeatureLift::Apply(const Eigen::VectorXd &latent) const {
  return (weight * latent + bias).array().tanh().matrix();
}

FeatureLift MakeLift(const SynthConfig &cfg, uint64_t seed) {
  Rng rng(seed);
  FeatureLift lift;
  lift.weight.resize(cfg.feat_dim, cfg.latent_dim);
  const double scale = cfg.lift_gain / std::sqrt(static_cast<double>(cfg.latent_dim));
  for (int32_t i = 0; i < cfg.feat_dim; ++i)
    for (int32_t j = 0; j < cfg.latent_dim; ++j) lift.weight(i, j) = scale * rng.Gaussian();
  lift.bias.resize(cfg.feat_dim);
  for (int32_t i = 0; i < cfg.feat_dim; ++i) lift.bias[i] = 0.5 * rng.Gaussian();
  return lift;
}

FeatureMatrix RenderSegment(const VoicePrint &voice, int64_t n_frames, const SynthConfig &cfg,
                            const FeatureLift &lift, Rng &rng) {
  FeatureMatrix out(n_frames, cfg.feat_dim);
  Eigen::VectorXd latent(voice.latent.size());
  for (int64_t t = 0; t < n_frames; ++t) {
    for (Eigen::Index j = 0; j < latent.size(); ++j)
      latent[j] = voice.latent[j] + cfg.within_speaker_noise * rng.Gaussian();
    out.row(t) = lift.Apply(latent).cast<float>().transpose();
  }
  return out;
}

SynthWorld MakeWorld(const SynthConfig &cfg) {
  cfg.Validate();
  SynthWorld world;
  world.lift = MakeLift(cfg, DeriveSeed(cfg.seed, kStreamLift));
  world.known = GenerateSpeakers(cfg.n_speakers, cfg.latent_dim, DeriveSeed(cfg.seed, kStreamKnown));
  if (cfg.unknown_speaker_count > 0) {
    Rng rng(DeriveSeed(cfg.seed, kStreamUnknown));
    world.unknown.resize(cfg.unknown_speaker_count);
    for (auto &v : world.unknown) v.latent = RandomUnit(cfg.latent_dim, rng);
  }
  return world;
}

Corpus GenerateCorpus(const SynthConfig &cfg) { return GenerateCorpus(cfg, MakeWorld(cfg)); }

Corpus GenerateCorpus(const SynthConfig &cfg, const SynthWorld &world) {
  cfg.Validate();
  Corpus corpus;
  corpus.n_speakers = cfg.n_speakers;
  corpus.feat_dim = cfg.feat_dim;
  corpus.unknown_pool_present = cfg.unknown_speaker_count > 0;

  const int64_t n_recordings = static_cast<int64_t>(cfg.n_speakers) * cfg.recordings_per_speaker;
  int64_t next_segment_id = 0;
  for (int64_t rec = 0; rec < n_recordings; ++rec) {
    Rng rng(DeriveSeed(cfg.seed, kStreamRecordings + static_cast<uint64_t>(rec)));
    const int32_t target = static_cast<int32_t>(rec / cfg.recordings_per_speaker);

    // Distractors: distinct speakers other than the target, drawn 50/50 from
    // the known and unknown pools when an unknown pool exists.
    std::vector<SpeakerId> distractors;
    const int64_t n_distractors = rng.UniformRange(cfg.distractors_per_recording.lo,
                                                   cfg.distractors_per_recording.hi);
    const int64_t max_known = cfg.n_speakers - 1;
    const int64_t max_unknown = cfg.unknown_speaker_count;
    for (int64_t d = 0; d < n_distractors; ++d) {
      int64_t used_known = 0, used_unknown = 0;
      for (const SpeakerId &s : distractors) (s.is_known() ? used_known : used_unknown)++;
      const bool known_left = used_known < max_known;
      const bool unknown_left = used_unknown < max_unknown;
      if (!known_left && !unknown_left) break;
      bool pick_unknown = unknown_left && (!known_left || rng.Bernoulli(0.5));
      for (;;) {
        SpeakerId s = pick_unknown
                          ? SpeakerId::Unknown(static_cast<int32_t>(rng.UniformInt(max_unknown)))
                          : SpeakerId::Known(static_cast<int32_t>(rng.UniformInt(cfg.n_speakers)));
        if (s == SpeakerId::Known(target)) continue;
        if (std::find(distractors.begin(), distractors.end(), s) != distractors.end()) continue;
        distractors.push_back(s);
        break;
      }
    }

    const int64_t n_segments =
        rng.UniformRange(cfg.segments_per_recording.lo, cfg.segments_per_recording.hi);
    // Noise flags are i.i.d.; an all-noise draw is rejected so that at least
    // one segment can carry the target.
    std::vector<bool> is_noise(n_segments);
    for (;;) {
      bool any_speech = false;
      for (int64_t i = 0; i < n_segments; ++i) {
        is_noise[i] = rng.Bernoulli(cfg.noise_segment_prob);
        any_speech = any_speech || !is_noise[i];
      }
      if (any_speech) break;
    }
    std::vector<SpeakerId> who(n_segments);
    bool has_target = false;
    for (int64_t i = 0; i < n_segments; ++i) {
      if (is_noise[i]) {
        who[i] = SpeakerId::Noise();
      } else if (distractors.empty() || rng.Bernoulli(cfg.target_speech_fraction)) {
        who[i] = SpeakerId::Known(target);
      } else {
        who[i] = distractors[rng.UniformInt(distractors.size())];
      }
      has_target = has_target || who[i] == SpeakerId::Known(target);
    }
    if (!has_target) {
      for (int64_t i = 0; i < n_segments; ++i)
        if (!is_noise[i]) {
          who[i] = SpeakerId::Known(target);
          break;
        }
    }

    Recording recording;
    recording.recording_id = rec;
    recording.target = SpeakerId::Known(target);
    std::map<SpeakerId, size_t> cluster_of;
    for (int64_t i = 0; i < n_segments; ++i) {
      const int64_t n_frames = rng.UniformRange(cfg.frames_per_segment.lo, cfg.frames_per_segment.hi);
      VoicePrint noise_voice;
      const VoicePrint *voice = nullptr;
      switch (who[i].kind()) {
        case SpeakerId::Kind::kKnown: voice = &world.known[who[i].index()]; break;
        case SpeakerId::Kind::kUnknown: voice = &world.unknown[who[i].raw_value()]; break;
        case SpeakerId::Kind::kNoise:
          // Each noise segment is its own random source.
          noise_voice.latent = RandomUnit(cfg.latent_dim, rng);
          voice = &noise_voice;
          break;
      }
      Segment seg;
      seg.segment_id = next_segment_id++;
      seg.recording_id = rec;
      seg.oracle = who[i];
      seg.features = RenderSegment(*voice, n_frames, cfg, world.lift, rng);
      auto [it, inserted] = cluster_of.emplace(who[i], recording.clusters.size());
      if (inserted) recording.clusters.emplace_back();
      recording.clusters[it->second].push_back(seg.segment_id);
      seg.cluster_id = static_cast<int32_t>(it->second);
      recording.segment_ids.push_back(seg.segment_id);
      corpus.segments.emplace(seg.segment_id, std::move(seg));
    }
    corpus.recordings.push_back(std::move(recording));
  }
  return corpus;
}

}  // namespace weakspk
