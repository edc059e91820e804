// src/selfcheck.cc

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

#include "weakspk/selfcheck.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "weakspk/eval.h"
#include "weakspk/miloss.h"
#include "weakspk/rng.h"
#include "weakspk/trainer.h"

namespace weakspk {

Model NumericGradient(const Model &at, const std::function<double(const Model &)> &f, double step) {
  Model probe = at;
  Model grad = Model::Zeros(at.dims(), at.n_speakers());
  auto probe_t = probe.Tensors();
  auto grad_t = grad.Tensors();
  for (size_t k = 0; k < probe_t.size(); ++k) {
    for (Eigen::Index i = 0; i < probe_t[k].size(); ++i) {
      const double saved = probe_t[k][i];
      probe_t[k][i] = saved + step;
      const double up = f(probe);
      probe_t[k][i] = saved - step;
      const double down = f(probe);
      probe_t[k][i] = saved;
      grad_t[k][i] = (up - down) / (2.0 * step);
    }
  }
  return grad;
}

double GradientRelativeError(const Model &analytic, const Model &numeric) {
  const auto a = analytic.Tensors();
  const auto n = numeric.Tensors();
  double worst = 0.0;
  for (size_t k = 0; k < a.size(); ++k) {
    const double denom = a[k].norm() + n[k].norm();
    if (denom == 0.0) continue;
    worst = std::max(worst, (a[k] - n[k]).norm() / denom);
  }
  return worst;
}

const char *GradPathName(GradPath path) {
  switch (path) {
    case GradPath::kMaxBag: return "max-bag";
    case GradPath::kLseBag: return "lse-bag";
    case GradPath::kSegmentAam: return "segment-aam";
    case GradPath::kExtended: return "extended-ce";
  }
  return "?";
}

namespace {

constexpr EmbedderDims kCheckDims{6, 8, 5};
constexpr int32_t kCheckSpeakers = 7;
constexpr double kKinkGap = 1e-3;

// Random inputs whose pre-activations stay kKinkGap away from zero, with at
// least two units clearly active.  With a single active unit the embedding
// direction does not depend on W1 and b1, and their relative error is noise
// over noise.
std::vector<Eigen::VectorXd> DrawInputs(const Model &model, int n, Rng &rng) {
  std::vector<Eigen::VectorXd> out;
  while (static_cast<int>(out.size()) < n) {
    Eigen::VectorXd x(kCheckDims.feat_dim);
    for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = rng.Gaussian();
    const Eigen::VectorXd pre = model.params.w1 * x + model.params.b1;
    if (pre.cwiseAbs().minCoeff() > kKinkGap && (pre.array() > 0.1).count() >= 2) out.push_back(x);
  }
  return out;
}

// Every column's top two rows differ by more than kKinkGap.
bool ClearOfTies(const Model &model, const std::vector<Eigen::VectorXd> &inputs) {
  Eigen::MatrixXd c(static_cast<Eigen::Index>(inputs.size()), model.n_speakers());
  for (size_t i = 0; i < inputs.size(); ++i)
    c.row(static_cast<Eigen::Index>(i)) =
        CosineSimilarities(Forward(inputs[i], model.params).e, model.prototypes).transpose();
  for (Eigen::Index j = 0; j < c.cols(); ++j) {
    std::vector<double> col(c.col(j).data(), c.col(j).data() + c.rows());
    std::sort(col.rbegin(), col.rend());
    if (col.size() > 1 && col[0] - col[1] < kKinkGap) return false;
  }
  return true;
}

double FrozenExtendedObjective(const Model &model, const std::vector<Eigen::VectorXd> &inputs,
                               std::span<const SpeakerId> labels, double scale, double margin,
                               const Eigen::VectorXd &frozen) {
  Eigen::MatrixXd ext(static_cast<Eigen::Index>(inputs.size()), model.n_speakers() + 1);
  for (size_t i = 0; i < inputs.size(); ++i) {
    const auto b = static_cast<Eigen::Index>(i);
    ext.row(b).head(model.n_speakers()) =
        scale * CosineSimilarities(Forward(inputs[i], model.params).e, model.prototypes).transpose();
    ext(b, model.n_speakers()) = frozen[b];
  }
  return ExtendedCeLoss(ext, labels, scale, margin).row_loss.sum();
}

}  // namespace

double CheckGradientPath(GradPath path, uint64_t seed, double tau) {
  Rng rng(DeriveSeed(seed, 0x6C));
  const Model model = InitModel(kCheckDims, kCheckSpeakers, DeriveSeed(seed, 0x6D));
  const double scale = 30.0;
  Model analytic = Model::Zeros(kCheckDims, kCheckSpeakers);
  std::function<double(const Model &)> f;

  switch (path) {
    case GradPath::kMaxBag:
    case GradPath::kLseBag: {
      LossParams loss;
      loss.aggregation = path == GradPath::kMaxBag ? Aggregation::kMax : Aggregation::kLse;
      loss.tau = tau;
      loss.scale = scale;
      loss.margin = 0.1;
      const int32_t target = static_cast<int32_t>(rng.UniformInt(kCheckSpeakers));
      std::vector<Eigen::VectorXd> inputs;
      do {
        inputs = DrawInputs(model, 4, rng);
      } while (path == GradPath::kMaxBag && !ClearOfTies(model, inputs));
      BagObjective(model, inputs, target, loss, &analytic);
      f = [=](const Model &m) { return BagObjective(m, inputs, target, loss, nullptr); };
      break;
    }
    case GradPath::kSegmentAam:
    case GradPath::kExtended: {
      const bool extended = path == GradPath::kExtended;
      const std::vector<Eigen::VectorXd> inputs = DrawInputs(model, 6, rng);
      std::vector<SpeakerId> labels;
      for (int i = 0; i < 6; ++i) {
        // Rows 0 and 1 stay known so the extended batch always has anchors.
        if (extended && i >= 2 && rng.Bernoulli(0.5))
          labels.push_back(SpeakerId::Unknown());
        else
          labels.push_back(SpeakerId::Known(static_cast<int32_t>(rng.UniformInt(kCheckSpeakers))));
      }
      const double margin = 0.2;
      SegmentBatchObjective(model, inputs, labels, scale, margin, extended, &analytic);
      if (!extended) {
        f = [=](const Model &m) { return SegmentBatchObjective(m, inputs, labels, scale, margin, false, nullptr); };
      } else {
        // The appended column carries no gradient: hold it at its value at
        // the base point.
        Eigen::MatrixXd logits(6, kCheckSpeakers);
        for (int i = 0; i < 6; ++i)
          logits.row(i) = scale * CosineSimilarities(Forward(inputs[i], model.params).e, model.prototypes).transpose();
        const Eigen::VectorXd frozen = ExtendLogitsUnknown(logits, labels).col(kCheckSpeakers);
        f = [=](const Model &m) { return FrozenExtendedObjective(m, inputs, labels, scale, margin, frozen); };
      }
      break;
    }
  }
  return GradientRelativeError(analytic, NumericGradient(model, f));
}

namespace {

// O(n^2) sweep: every distinct score and +inf, counted from scratch.
std::vector<std::pair<double, double>> BruteForcePoints(const ScoreSet &set) {
  std::set<double> thresholds(set.scores.begin(), set.scores.end());
  thresholds.insert(std::numeric_limits<double>::infinity());
  double n_tgt = 0, n_non = 0;
  for (bool l : set.labels) (l ? n_tgt : n_non) += 1;
  std::vector<std::pair<double, double>> points;  // (p_miss, p_fa)
  for (double t : thresholds) {
    double miss = 0, fa = 0;
    for (size_t i = 0; i < set.scores.size(); ++i) {
      if (set.labels[i] && set.scores[i] < t) miss += 1;
      if (!set.labels[i] && set.scores[i] >= t) fa += 1;
    }
    points.emplace_back(miss / n_tgt, fa / n_non);
  }
  return points;
}

std::pair<double, double> BruteForceMetrics(const ScoreSet &set, double p) {
  const auto points = BruteForcePoints(set);
  double eer = 1.0;
  for (size_t k = 1; k < points.size(); ++k) {
    const double d0 = points[k - 1].first - points[k - 1].second;
    const double d1 = points[k].first - points[k].second;
    if (d0 < 0 && d1 >= 0) {
      const double t = d0 / (d0 - d1);
      eer = points[k - 1].second + t * (points[k].second - points[k - 1].second);
      break;
    }
  }
  double dcf = std::numeric_limits<double>::infinity();
  for (const auto &[miss, fa] : points) dcf = std::min(dcf, p * miss + (1 - p) * fa);
  return {eer, dcf / std::min(p, 1 - p)};
}

}  // namespace

std::vector<CheckOutcome> RunSelfChecks(uint64_t seed) {
  std::vector<CheckOutcome> out;
  auto report = [&](const std::string &name, bool ok, const std::string &detail) {
    out.push_back({name, ok, detail});
  };

  for (GradPath path : {GradPath::kMaxBag, GradPath::kLseBag, GradPath::kSegmentAam, GradPath::kExtended}) {
    double worst = 0.0;
    for (uint64_t k = 0; k < 5; ++k) {
      worst = std::max(worst, CheckGradientPath(path, DeriveSeed(seed, k), 0.5));
      if (path == GradPath::kLseBag) worst = std::max(worst, CheckGradientPath(path, DeriveSeed(seed, k), 0.1));
    }
    std::ostringstream d;
    d << "max relative error " << worst;
    report(std::string("gradient ") + GradPathName(path), worst < 1e-5, d.str());
  }

  {
    Rng rng(DeriveSeed(seed, 0x70));
    int bad = 0;
    for (int trial = 0; trial < 500; ++trial) {
      const int n = 2 + static_cast<int>(rng.UniformInt(15));
      std::vector<double> v(n);
      for (double &x : v) x = rng.Uniform() * 2.0 - 1.0;
      const double mx = *std::max_element(v.begin(), v.end());
      double mean = 0.0;
      for (double x : v) mean += x / n;
      const double tau = 0.05 + rng.Uniform();
      const double lse = LseTau(v, tau);
      if (!(mean < lse && lse <= mx + 1e-12 && mx - lse <= tau * std::log(n) + 1e-12)) ++bad;
    }
    report("pooling bounds", bad == 0, std::to_string(bad) + " violations in 500 vectors");
  }

  {
    Rng rng(DeriveSeed(seed, 0x71));
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
      ScoreSet set;
      const int n = 20 + static_cast<int>(rng.UniformInt(200));
      for (int i = 0; i < n; ++i) {
        const bool target = i == 0 || (i != 1 && rng.Bernoulli(0.3));
        // Coarse grid so that ties occur.
        set.scores.push_back(std::round((rng.Gaussian() + (target ? 1.0 : 0.0)) * 20.0) / 20.0);
        set.labels.push_back(target);
      }
      const auto [eer, dcf] = BruteForceMetrics(set, 0.05);
      worst = std::max({worst, std::abs(eer - ComputeEer(set)), std::abs(dcf - ComputeMinDcf(set))});
    }
    std::ostringstream d;
    d << "max deviation from brute-force sweep " << worst;
    report("metric oracle", worst < 1e-9, d.str());
  }
  return out;
}

}  // namespace weakspk
