// weakspk/synthgen.h

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

// Synthetic weakly-labeled corpus with full ground truth.
//
// Each speaker is a unit latent vector.  A frame of speaker v is
//   tanh(A (v + n) + c),   n ~ N(0, within_speaker_noise^2 I),
// where the lift (A, c) is drawn once per corpus.  A recording belongs to one
// target speaker and mixes in distractors, drawn half from the other known
// speakers and half from a pool of speakers outside the known set.

#ifndef WEAKSPK_SYNTHGEN_H_
#define WEAKSPK_SYNTHGEN_H_

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "weakspk/corpus.h"
#include "weakspk/rng.h"

namespace weakspk {

struct CountRange {
  int64_t lo = 1;
  int64_t hi = 1;
};

struct SynthConfig {
  int32_t n_speakers = 40;
  int32_t latent_dim = 16;
  int32_t feat_dim = 20;
  int32_t recordings_per_speaker = 8;
  CountRange segments_per_recording{6, 10};
  CountRange frames_per_segment{8, 24};
  CountRange distractors_per_recording{0, 3};
  double noise_segment_prob = 0.1;
  double within_speaker_noise = 0.3;
  int32_t unknown_speaker_count = 20;
  // Probability that a non-noise segment is spoken by the target rather
  // than by one of the recording's distractors.
  double target_speech_fraction = 0.5;
  // Entries of the lift matrix A are N(0, lift_gain^2 / latent_dim).
  double lift_gain = 2.0;
  uint64_t seed = 1;

  // Throws kDegenerateConfig.
  void Validate() const;
};

struct VoicePrint {
  Eigen::VectorXd latent;  // unit norm
};

// n unit vectors, deterministic in seed.  Throws kDegenerateConfig for n < 2
// or latent_dim < 2.
std::vector<VoicePrint> GenerateSpeakers(int32_t n, int32_t latent_dim, uint64_t seed);

// Frozen corpus-wide map latent_dim -> feat_dim.
struct FeatureLift {
  Eigen::MatrixXd weight;  // feat_dim x latent_dim
  Eigen::VectorXd bias;    // feat_dim

  Eigen::VectorXd Apply(const Eigen::VectorXd &latent) const;
};

FeatureLift MakeLift(const SynthConfig &cfg, uint64_t seed);

// n_frames frames of tanh(A (latent + noise) + c).
FeatureMatrix RenderSegment(const VoicePrint &voice, int64_t n_frames, const SynthConfig &cfg,
                            const FeatureLift &lift, Rng &rng);

struct SynthWorld {
  FeatureLift lift;
  std::vector<VoicePrint> known;    // indexed by SpeakerId::index()
  std::vector<VoicePrint> unknown;  // indexed by the unknown source index
};

SynthWorld MakeWorld(const SynthConfig &cfg);

/// Generates recordings_per_speaker recordings for every known speaker.
/// Recording r is produced from the substream DeriveSeed(seed, r), so the
/// result does not depend on generation order.  The emitted clusters are the
/// identity diarization: one cluster per speaker present plus one for noise.
Corpus GenerateCorpus(const SynthConfig &cfg);
Corpus GenerateCorpus(const SynthConfig &cfg, const SynthWorld &world);

}  // namespace weakspk

#endif  // WEAKSPK_SYNTHGEN_H_
