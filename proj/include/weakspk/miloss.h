// weakspk/miloss.h

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

// Multi-instance losses.
//
// Stage 1 pools segment-level cosines of a recording's bag into one
// recording-level similarity per class (max or temperature log-sum-exp) and
// applies an additive angular margin softmax to the pooled vector.  Stage 2
// applies the same margin softmax per segment.  The unknown-class extension
// appends one prototype-free logit per row: 0 for rows with a known label,
// and the batch mean of the known rows' target logits for unknown rows.

#ifndef WEAKSPK_MILOSS_H_
#define WEAKSPK_MILOSS_H_

#include <Eigen/Dense>
#include <span>
#include <string>
#include <vector>

#include "weakspk/corpus.h"

namespace weakspk {

enum class Aggregation { kMax, kLse };

const char *AggregationName(Aggregation kind);
Aggregation ParseAggregation(const std::string &name);  // "max" | "lse"

// Linear interpolation from start to end over training; start == end is a
// fixed value.
struct LinearSchedule {
  double start = 0.0;
  double end = 0.0;

  bool is_fixed() const { return start == end; }
};

struct LossConfig {
  double scale = 30.0;
  LinearSchedule margin{0.0, 0.0};
  LinearSchedule tau{0.5, 0.5};
  Aggregation aggregation = Aggregation::kMax;

  // Throws kConfigError unless scale > 0, margins in [0, 0.5], tau > 0.
  void Validate() const;
};

/// tau * ln((1/N) sum_i exp(v_i / tau)), evaluated around max(v).  The
/// result lies in [max - tau ln N, max] and above mean(v) for non-constant
/// v.  Throws kEmptyInput for empty input.
double LseTau(std::span<const double> values, double tau);

struct AggregateResult {
  Eigen::VectorXd c_rec;     // |T|
  std::vector<int> argmax;   // per class, MAX only; ties go to the lower row
};

// Pools each column of c_seg (bag_size x |T|) independently.
AggregateResult Aggregate(const Eigen::MatrixXd &c_seg, Aggregation kind, double tau);

/// dL/dc_seg given dL/dc_rec.  MAX routes each column's gradient to its
/// argmax row only; LSE spreads it with weights softmax(c_seg[., j] / tau).
Eigen::MatrixXd AggregateBackward(const Eigen::MatrixXd &c_seg, const AggregateResult &agg, Aggregation kind,
                                  double tau, const Eigen::VectorXd &grad_c_rec);

constexpr double kCosineClamp = 1.0 - 1e-7;

// cos(arccos(c) + m) = c cos m - sqrt(1 - c^2) sin m, with c clamped to
// [-kCosineClamp, kCosineClamp].
double AamMargin(double c, double m);
// d AamMargin / dc; zero outside the clamp range.
double AamMarginDerivative(double c, double m);

struct LossGrad {
  double loss = 0.0;
  Eigen::VectorXd grad;  // w.r.t. the similarity vector
};

/// Cross-entropy over logits {s psi(c_t)} U {s c_j : j != t}.  The same
/// function serves pooled recording-level similarities (stage 1) and single
/// segments (stage 2).
LossGrad MarginSoftmaxLoss(const Eigen::VectorXd &cosines, int32_t target, double scale, double margin);

inline LossGrad WeakRecordingLoss(const Eigen::VectorXd &c_rec, int32_t target, double scale, double margin) {
  return MarginSoftmaxLoss(c_rec, target, scale, margin);
}

inline LossGrad SegmentAamLoss(const Eigen::VectorXd &c, int32_t target, double scale, double margin) {
  return MarginSoftmaxLoss(c, target, scale, margin);
}

/// Appends the unknown-class column to the scaled logits L (|B| x |T|).
/// Known rows get 0; unknown rows get (1/|B_T|) sum_{i in B_T} L[i, label(i)]
/// over the known rows B_T.  Throws kNoKnownExamples when an unknown row is
/// present and B_T is empty.
Eigen::MatrixXd ExtendLogitsUnknown(const Eigen::MatrixXd &logits, std::span<const SpeakerId> labels);

struct ExtendedLossGrad {
  Eigen::VectorXd row_loss;  // |B|
  Eigen::MatrixXd grad;      // |B| x |T|, w.r.t. the original logits L
};

/// Per-row cross-entropy over the extended logits.  Known rows target their
/// label with the margin applied to that logit (psi on L/s); unknown rows
/// target the appended column without margin.  The appended column is a
/// constant: no gradient flows through it.
ExtendedLossGrad ExtendedCeLoss(const Eigen::MatrixXd &logits_ext, std::span<const SpeakerId> labels,
                                double scale, double margin);

// ln sum_j exp(v_j) without normalization or temperature.
double LogSumExp(const Eigen::VectorXd &v);

}  // namespace weakspk

#endif  // WEAKSPK_MILOSS_H_
