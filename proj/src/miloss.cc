// src/miloss.cc

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

#include "weakspk/miloss.h"

#include <algorithm>
#include <cmath>

namespace weakspk {

namespace {

// Softmax cross-entropy of `logits` against class `target`, with its
// gradient (softmax - onehot) written to `grad_logits`.  The loss is
// evaluated as log1p(sum_{j != k} exp(z_j - z_k)) + (z_k - z_t) with k the
// argmax, which keeps tiny losses accurate.
double CrossEntropy(const Eigen::VectorXd &logits, Eigen::Index target, Eigen::VectorXd &grad_logits) {
  Eigen::Index k = 0;
  const double top = logits.maxCoeff(&k);
  double rest = 0.0;
  grad_logits.resize(logits.size());
  for (Eigen::Index j = 0; j < logits.size(); ++j) {
    grad_logits[j] = std::exp(logits[j] - top);
    if (j != k) rest += grad_logits[j];
  }
  const double denom = 1.0 + rest;
  grad_logits /= denom;
  // p_t - 1 as minus the other classes' mass; 1 - p_t cancels for tiny losses.
  double others = 0.0;
  for (Eigen::Index j = 0; j < logits.size(); ++j)
    if (j != target) others += grad_logits[j];
  grad_logits[target] = -others;
  return std::log1p(rest) + (top - logits[target]);
}

}  // namespace

const char *AggregationName(Aggregation kind) { return kind == Aggregation::kMax ? "max" : "lse"; }

Aggregation ParseAggregation(const std::string &name) {
  if (name == "max") return Aggregation::kMax;
  if (name == "lse") return Aggregation::kLse;
  Fail(ErrorKind::kConfigError, "aggregation must be 'max' or 'lse', got '", name, "'");
}

void LossConfig::Validate() const {
  if (!(scale > 0.0)) Fail(ErrorKind::kConfigError, "scale must be > 0");
  for (double m : {margin.start, margin.end})
    if (!(m >= 0.0 && m <= 0.5)) Fail(ErrorKind::kConfigError, "margin ", m, " outside [0, 0.5]");
  for (double t : {tau.start, tau.end})
    if (!(t > 0.0)) Fail(ErrorKind::kConfigError, "tau must be > 0");
}

double LseTau(std::span<const double> values, double tau) {
  if (values.empty()) Fail(ErrorKind::kEmptyInput, "LSE of an empty vector");
  const double top = *std::max_element(values.begin(), values.end());
  double sum = 0.0;
  for (double v : values) sum += std::exp((v - top) / tau);
  return top + tau * (std::log(sum) - std::log(static_cast<double>(values.size())));
}

AggregateResult Aggregate(const Eigen::MatrixXd &c_seg, Aggregation kind, double tau) {
  if (c_seg.rows() < 1) Fail(ErrorKind::kEmptyInput, "empty bag");
  AggregateResult out;
  out.c_rec.resize(c_seg.cols());
  if (kind == Aggregation::kMax) {
    out.argmax.resize(c_seg.cols());
    for (Eigen::Index j = 0; j < c_seg.cols(); ++j) {
      Eigen::Index best = 0;
      for (Eigen::Index i = 1; i < c_seg.rows(); ++i)
        if (c_seg(i, j) > c_seg(best, j)) best = i;
      out.argmax[j] = static_cast<int>(best);
      out.c_rec[j] = c_seg(best, j);
    }
  } else {
    std::vector<double> column(c_seg.rows());
    for (Eigen::Index j = 0; j < c_seg.cols(); ++j) {
      for (Eigen::Index i = 0; i < c_seg.rows(); ++i) column[i] = c_seg(i, j);
      out.c_rec[j] = LseTau(column, tau);
    }
  }
  return out;
}

Eigen::MatrixXd AggregateBackward(const Eigen::MatrixXd &c_seg, const AggregateResult &agg, Aggregation kind,
                                  double tau, const Eigen::VectorXd &grad_c_rec) {
  Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(c_seg.rows(), c_seg.cols());
  for (Eigen::Index j = 0; j < c_seg.cols(); ++j) {
    if (kind == Aggregation::kMax) {
      grad(agg.argmax[j], j) = grad_c_rec[j];
      continue;
    }
    const double top = c_seg.col(j).maxCoeff();
    double sum = 0.0;
    for (Eigen::Index i = 0; i < c_seg.rows(); ++i) {
      grad(i, j) = std::exp((c_seg(i, j) - top) / tau);
      sum += grad(i, j);
    }
    grad.col(j) *= grad_c_rec[j] / sum;
  }
  return grad;
}

double AamMargin(double c, double m) {
  c = std::clamp(c, -kCosineClamp, kCosineClamp);
  return c * std::cos(m) - std::sqrt(1.0 - c * c) * std::sin(m);
}

double AamMarginDerivative(double c, double m) {
  if (c < -kCosineClamp || c > kCosineClamp) return 0.0;
  return std::cos(m) + c * std::sin(m) / std::sqrt(1.0 - c * c);
}

LossGrad MarginSoftmaxLoss(const Eigen::VectorXd &cosines, int32_t target, double scale, double margin) {
  if (target < 0 || target >= cosines.size())
    Fail(ErrorKind::kInvalidLabel, "target ", target, " outside ", cosines.size(), " classes");
  Eigen::VectorXd logits = scale * cosines;
  logits[target] = scale * AamMargin(cosines[target], margin);
  LossGrad out;
  Eigen::VectorXd grad_logits;
  out.loss = CrossEntropy(logits, target, grad_logits);
  out.grad = scale * grad_logits;
  out.grad[target] *= AamMarginDerivative(cosines[target], margin);
  return out;
}

Eigen::MatrixXd ExtendLogitsUnknown(const Eigen::MatrixXd &logits, std::span<const SpeakerId> labels) {
  if (static_cast<size_t>(logits.rows()) != labels.size())
    Fail(ErrorKind::kInvalidLabel, "labels (", labels.size(), ") do not match logit rows (", logits.rows(), ")");
  double sum = 0.0;
  int64_t n_known = 0;
  bool any_unknown = false;
  for (size_t b = 0; b < labels.size(); ++b) {
    if (labels[b].is_known()) {
      sum += logits(static_cast<Eigen::Index>(b), labels[b].index());
      ++n_known;
    } else {
      any_unknown = true;
    }
  }
  if (any_unknown && n_known == 0)
    Fail(ErrorKind::kNoKnownExamples, "batch of ", labels.size(), " rows has no known-speaker row");
  const double mean = n_known > 0 ? sum / static_cast<double>(n_known) : 0.0;

  Eigen::MatrixXd out(logits.rows(), logits.cols() + 1);
  out.leftCols(logits.cols()) = logits;
  for (size_t b = 0; b < labels.size(); ++b)
    out(static_cast<Eigen::Index>(b), logits.cols()) = labels[b].is_known() ? 0.0 : mean;
  return out;
}

ExtendedLossGrad ExtendedCeLoss(const Eigen::MatrixXd &logits_ext, std::span<const SpeakerId> labels,
                                double scale, double margin) {
  const Eigen::Index n_rows = logits_ext.rows();
  const Eigen::Index n_classes = logits_ext.cols() - 1;
  if (static_cast<size_t>(n_rows) != labels.size())
    Fail(ErrorKind::kInvalidLabel, "labels do not match logit rows");
  ExtendedLossGrad out;
  out.row_loss.resize(n_rows);
  out.grad.resize(n_rows, n_classes);
  Eigen::VectorXd row, grad_row;
  for (Eigen::Index b = 0; b < n_rows; ++b) {
    row = logits_ext.row(b).transpose();
    if (labels[b].is_known()) {
      const int32_t t = labels[b].index();
      const double c_t = row[t] / scale;
      row[t] = scale * AamMargin(c_t, margin);
      out.row_loss[b] = CrossEntropy(row, t, grad_row);
      grad_row[t] *= AamMarginDerivative(c_t, margin);
    } else {
      out.row_loss[b] = CrossEntropy(row, n_classes, grad_row);
    }
    out.grad.row(b) = grad_row.head(n_classes).transpose();
  }
  return out;
}

double LogSumExp(const Eigen::VectorXd &v) {
  const double top = v.maxCoeff();
  return top + std::log((v.array() - top).exp().sum());
}

}  // namespace weakspk
