// src/trainer.cc

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

#include "weakspk/trainer.h"

#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include "weakspk/io.h"
#include "weakspk/parallel.h"
#include "weakspk/rng.h"

namespace weakspk {

namespace {

constexpr char kOptimMagic[4] = {'W', 'M', 'L', 'O'};
constexpr uint64_t kInitStream = 0x1000;
constexpr uint64_t kPlanStream = 0x2000;

// Gradients are accumulated into a fixed number of shards, item i going to
// shard i % kGradShards, and the shards are summed in order.  The result is
// the same for every thread count.
constexpr size_t kGradShards = 8;

template <typename ItemFn>
void ShardedAccumulate(size_t n_items, int threads, const Model &like, Model &grad, ItemFn &&item) {
  std::vector<Model> shards(std::min(kGradShards, n_items));
  ParallelFor(shards.size(), threads, [&](size_t s) {
    shards[s] = Model::Zeros(like.dims(), like.n_speakers());
    for (size_t i = s; i < n_items; i += kGradShards) item(i, shards[s]);
  });
  for (const Model &s : shards) grad += s;
}

std::string Num(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

void CheckFinite(double loss, int64_t step) {
  if (!std::isfinite(loss)) Fail(ErrorKind::kNonFiniteGradient, "non-finite loss at step ", step);
}

OptimConfig MakeOptim(double momentum, double lr_max, double lr_final, double warmup_fraction, int64_t total) {
  OptimConfig o;
  o.momentum = momentum;
  o.lr_max = lr_max;
  o.lr_final = lr_final;
  o.total_steps = total;
  o.warmup_steps = std::llround(warmup_fraction * static_cast<double>(total));
  o.Validate();
  return o;
}

void ValidateCommon(int64_t epochs, int64_t batch_size, double lr_max, double lr_final, double warmup_fraction,
                    double momentum, const EmbedderDims &dims) {
  if (epochs < 1) Fail(ErrorKind::kConfigError, "epochs must be >= 1");
  if (batch_size < 1) Fail(ErrorKind::kConfigError, "batch_size must be >= 1");
  if (!(lr_max > 0.0 && lr_final > 0.0 && lr_final <= lr_max))
    Fail(ErrorKind::kConfigError, "need 0 < lr_final <= lr_max");
  if (!(warmup_fraction >= 0.0 && warmup_fraction <= 1.0))
    Fail(ErrorKind::kConfigError, "warmup_fraction must be in [0, 1]");
  if (!(momentum >= 0.0 && momentum < 1.0)) Fail(ErrorKind::kConfigError, "momentum must be in [0, 1)");
  if (dims.feat_dim < 1 || dims.hidden < 1 || dims.emb_dim < 2)
    Fail(ErrorKind::kConfigError, "model dimensions must be positive (emb_dim >= 2)");
}

Checkpoint StartState(const Checkpoint *resume, const EmbedderDims &dims, int32_t n_speakers, uint64_t seed,
                      uint64_t hash) {
  if (resume) {
    if (resume->config_hash != hash)
      Fail(ErrorKind::kConfigError, "checkpoint was written by a different configuration");
    if (!(resume->model.dims() == dims) || resume->model.n_speakers() != n_speakers)
      Fail(ErrorKind::kConfigError, "checkpoint shape does not match the configuration");
    return *resume;
  }
  Checkpoint c;
  c.model = InitModel(dims, n_speakers, DeriveSeed(seed, kInitStream));
  c.velocity = Model::Zeros(dims, n_speakers);
  c.config_hash = hash;
  return c;
}

}  // namespace

void OptimConfig::Validate() const {
  if (!(momentum >= 0.0 && momentum < 1.0)) Fail(ErrorKind::kConfigError, "momentum must be in [0, 1)");
  if (!(lr_max > 0.0 && lr_final > 0.0 && lr_final <= lr_max))
    Fail(ErrorKind::kConfigError, "need 0 < lr_final <= lr_max");
  if (warmup_steps < 0 || total_steps < warmup_steps)
    Fail(ErrorKind::kConfigError, "need 0 <= warmup_steps <= total_steps");
}

double LrAt(int64_t step, const OptimConfig &cfg) {
  if (step < cfg.warmup_steps)
    return cfg.lr_max * static_cast<double>(step) / static_cast<double>(cfg.warmup_steps);
  if (step == cfg.warmup_steps || cfg.total_steps == cfg.warmup_steps) return cfg.lr_max;
  if (step >= cfg.total_steps) return cfg.lr_final;
  const double progress = static_cast<double>(step - cfg.warmup_steps) /
                          static_cast<double>(cfg.total_steps - cfg.warmup_steps);
  return cfg.lr_max * std::pow(cfg.lr_final / cfg.lr_max, progress);
}

double ScheduleValue(int64_t epoch, int64_t n_epochs, const LinearSchedule &schedule) {
  if (schedule.is_fixed()) return schedule.start;
  if (n_epochs <= 1 || epoch >= n_epochs - 1) return schedule.end;
  if (epoch <= 0) return schedule.start;
  return schedule.start +
         (schedule.end - schedule.start) * static_cast<double>(epoch) / static_cast<double>(n_epochs - 1);
}

void SgdStep(Model &model, const Model &grad, Model &velocity, double lr, double momentum) {
  if (!grad.AllFinite()) Fail(ErrorKind::kNonFiniteGradient, "gradient has non-finite entries");
  auto p = model.Tensors();
  auto g = grad.Tensors();
  auto v = velocity.Tensors();
  for (size_t i = 0; i < p.size(); ++i) {
    v[i] = momentum * v[i] - lr * g[i];
    p[i] += v[i];
  }
  RenormalizePrototypes(model.prototypes);
}

double BagObjective(const Model &model, std::span<const Eigen::VectorXd> inputs, int32_t target,
                    const LossParams &loss, Model *grad) {
  const Eigen::Index n = static_cast<Eigen::Index>(inputs.size());
  std::vector<ForwardCache> caches;
  caches.reserve(inputs.size());
  Eigen::MatrixXd c_seg(n, model.n_speakers());
  for (Eigen::Index i = 0; i < n; ++i) {
    caches.push_back(Forward(inputs[i], model.params));
    c_seg.row(i) = CosineSimilarities(caches.back().e, model.prototypes).transpose();
  }
  const AggregateResult agg = Aggregate(c_seg, loss.aggregation, loss.tau);
  const LossGrad lg = WeakRecordingLoss(agg.c_rec, target, loss.scale, loss.margin);
  if (grad) {
    const Eigen::MatrixXd g_seg = AggregateBackward(c_seg, agg, loss.aggregation, loss.tau, lg.grad);
    for (Eigen::Index i = 0; i < n; ++i) {
      const Eigen::VectorXd g_e =
          SimilarityBackward(caches[i].e, model.prototypes, g_seg.row(i).transpose(), grad->prototypes);
      Backward(caches[i], model.params, g_e, grad->params);
    }
  }
  return lg.loss;
}

double SegmentBatchObjective(const Model &model, std::span<const Eigen::VectorXd> inputs,
                             std::span<const SpeakerId> labels, double scale, double margin, bool extended,
                             Model *grad, int threads) {
  const size_t n = inputs.size();
  if (labels.size() != n) Fail(ErrorKind::kInvalidLabel, "labels do not match inputs");
  std::vector<ForwardCache> caches(n);
  Eigen::MatrixXd cos(static_cast<Eigen::Index>(n), model.n_speakers());
  ParallelFor(n, threads, [&](size_t i) {
    caches[i] = Forward(inputs[i], model.params);
    cos.row(static_cast<Eigen::Index>(i)) = CosineSimilarities(caches[i].e, model.prototypes).transpose();
  });

  double total = 0.0;
  Eigen::MatrixXd grad_cos(cos.rows(), cos.cols());
  if (extended) {
    const Eigen::MatrixXd logits = scale * cos;
    const ExtendedLossGrad res = ExtendedCeLoss(ExtendLogitsUnknown(logits, labels), labels, scale, margin);
    for (Eigen::Index b = 0; b < res.row_loss.size(); ++b) total += res.row_loss[b];
    grad_cos = scale * res.grad;
  } else {
    for (size_t b = 0; b < n; ++b) {
      if (!labels[b].is_known())
        Fail(ErrorKind::kInvalidLabel, "unknown row in a batch without the unknown class");
      const LossGrad lg = SegmentAamLoss(cos.row(static_cast<Eigen::Index>(b)).transpose(),
                                         labels[b].index(), scale, margin);
      total += lg.loss;
      grad_cos.row(static_cast<Eigen::Index>(b)) = lg.grad.transpose();
    }
  }
  if (grad) {
    ShardedAccumulate(n, threads, model, *grad, [&](size_t i, Model &acc) {
      const Eigen::VectorXd g_e = SimilarityBackward(
          caches[i].e, model.prototypes, grad_cos.row(static_cast<Eigen::Index>(i)).transpose(), acc.prototypes);
      Backward(caches[i], model.params, g_e, acc.params);
    });
  }
  return total;
}

void Stage1Config::Validate() const {
  loss.Validate();
  ValidateCommon(epochs, batch_size, lr_max, lr_final, warmup_fraction, momentum, dims);
}

void Stage2Config::Validate() const {
  if (!(scale > 0.0)) Fail(ErrorKind::kConfigError, "scale must be > 0");
  for (double m : {margin.start, margin.end})
    if (!(m >= 0.0 && m <= 0.5)) Fail(ErrorKind::kConfigError, "margin ", m, " outside [0, 0.5]");
  ValidateCommon(epochs, batch_size, lr_max, lr_final, warmup_fraction, momentum, dims);
  if (unknown.enabled) {
    ValidateMixFraction(unknown.mix_fraction, batch_size);
    if (UnknownStartEpoch() >= epochs)
      Fail(ErrorKind::kConfigError, "unknown class starts after the last epoch");
  }
}

uint64_t ConfigHash(const Stage1Config &c) {
  std::ostringstream os;
  os << "stage1|" << Num(c.loss.scale) << '|' << Num(c.loss.margin.start) << '|' << Num(c.loss.margin.end) << '|'
     << Num(c.loss.tau.start) << '|' << Num(c.loss.tau.end) << '|' << AggregationName(c.loss.aggregation) << '|'
     << c.dims.feat_dim << '|' << c.dims.hidden << '|' << c.dims.emb_dim << '|' << c.epochs << '|'
     << c.batch_size << '|' << Num(c.lr_max) << '|' << Num(c.lr_final) << '|' << Num(c.warmup_fraction) << '|'
     << Num(c.momentum);
  return Fnv1a(os.str());
}

uint64_t ConfigHash(const Stage2Config &c) {
  std::ostringstream os;
  os << "stage2|" << Num(c.scale) << '|' << Num(c.margin.start) << '|' << Num(c.margin.end) << '|'
     << c.dims.feat_dim << '|' << c.dims.hidden << '|' << c.dims.emb_dim << '|' << c.epochs << '|'
     << c.batch_size << '|' << Num(c.lr_max) << '|' << Num(c.lr_final) << '|' << Num(c.warmup_fraction) << '|'
     << Num(c.momentum) << '|' << c.unknown.enabled << '|' << c.unknown.on_at_epoch << '|'
     << Num(c.unknown.mix_fraction);
  return Fnv1a(os.str());
}

void SaveCheckpoint(const Checkpoint &ckpt, const std::filesystem::path &path) {
  ByteWriter w;
  EncodeModel(ckpt.model, w);
  w.PutBytes(std::string_view(kOptimMagic, 4));
  w.PutU64(static_cast<uint64_t>(ckpt.step));
  w.PutU64(ckpt.config_hash);
  for (const auto &t : ckpt.velocity.Tensors())
    for (Eigen::Index i = 0; i < t.size(); ++i) w.PutF64(t[i]);
  WriteFileAtomic(path, w.data());
}

Checkpoint LoadCheckpoint(const std::filesystem::path &path) {
  const std::string bytes = ReadFileBytes(path);
  ByteReader r(bytes);
  Checkpoint c;
  c.model = DecodeModel(r);
  c.velocity = Model::Zeros(c.model.dims(), c.model.n_speakers());
  if (r.remaining() == 0) return c;  // model-only file
  if (r.GetBytes(4) != std::string_view(kOptimMagic, 4))
    Fail(ErrorKind::kFormatError, "checkpoint: bad optimizer section magic");
  c.step = static_cast<int64_t>(r.GetU64());
  c.config_hash = r.GetU64();
  for (auto t : c.velocity.Tensors())
    for (Eigen::Index i = 0; i < t.size(); ++i) t[i] = r.GetF64();
  return c;
}

std::string FormatMetricsCsv(std::span<const MetricsRow> rows) {
  std::ostringstream os;
  os << "step,epoch,lr,margin,tau,loss\n";
  for (const MetricsRow &r : rows)
    os << r.step << ',' << r.epoch << ',' << Num(r.lr) << ',' << Num(r.margin) << ','
       << (std::isnan(r.tau) ? std::string("nan") : Num(r.tau)) << ',' << Num(r.loss) << '\n';
  return os.str();
}

std::map<int64_t, Eigen::VectorXd> ComputeFrameMeans(const Corpus &corpus) {
  std::map<int64_t, Eigen::VectorXd> out;
  for (const auto &[id, seg] : corpus.segments) out.emplace(id, FrameMean(seg.features));
  return out;
}

TrainResult TrainStage1(const Corpus &corpus, const Stage1Config &cfg, uint64_t seed, const TrainOptions &opts) {
  cfg.Validate();
  if (cfg.dims.feat_dim != corpus.feat_dim)
    Fail(ErrorKind::kConfigError, "model feat_dim ", cfg.dims.feat_dim, " != corpus feat_dim ", corpus.feat_dim);
  const auto means = ComputeFrameMeans(corpus);

  std::vector<std::vector<Stage1Batch>> plans;
  int64_t total = 0;
  for (int64_t e = 0; e < cfg.epochs; ++e) {
    plans.push_back(PlanEpochStage1(corpus, cfg.batch_size, DeriveSeed(seed, kPlanStream + e)));
    total += static_cast<int64_t>(plans.back().size());
  }
  const OptimConfig optim = MakeOptim(cfg.momentum, cfg.lr_max, cfg.lr_final, cfg.warmup_fraction, total);

  TrainResult result;
  result.checkpoint = StartState(opts.resume, cfg.dims, corpus.n_speakers, seed, ConfigHash(cfg));
  Checkpoint &state = result.checkpoint;
  Model grad = Model::Zeros(cfg.dims, corpus.n_speakers);

  int64_t index = 0;
  for (int64_t e = 0; e < cfg.epochs; ++e) {
    LossParams loss;
    loss.aggregation = cfg.loss.aggregation;
    loss.scale = cfg.loss.scale;
    loss.margin = ScheduleValue(e, cfg.epochs, cfg.loss.margin);
    loss.tau = ScheduleValue(e, cfg.epochs, cfg.loss.tau);
    for (const Stage1Batch &batch : plans[e]) {
      if (index++ < state.step) continue;
      if (opts.stop_after_step >= 0 && state.step >= opts.stop_after_step) return result;

      std::vector<double> bag_loss(batch.bags.size());
      grad.SetZero();
      ShardedAccumulate(batch.bags.size(), opts.threads, state.model, grad, [&](size_t b, Model &acc) {
        const Bag &bag = batch.bags[b];
        std::vector<Eigen::VectorXd> inputs;
        for (int64_t id : bag.segment_ids) inputs.push_back(means.at(id));
        bag_loss[b] = BagObjective(state.model, inputs, bag.target.index(), loss, &acc);
      });
      double mean_loss = 0.0;
      for (double l : bag_loss) mean_loss += l;
      mean_loss /= static_cast<double>(batch.bags.size());
      grad *= 1.0 / static_cast<double>(batch.bags.size());
      CheckFinite(mean_loss, state.step);

      const double lr = LrAt(state.step + 1, optim);
      SgdStep(state.model, grad, state.velocity, lr, cfg.momentum);
      ++state.step;
      result.metrics.push_back({state.step, e, lr, loss.margin, loss.tau, mean_loss, false});
    }
  }
  return result;
}

TrainResult TrainStage2(const Corpus &corpus, std::span<const Stage2Row> selected,
                        std::span<const int64_t> unknown_pool, const Stage2Config &cfg, uint64_t seed,
                        const TrainOptions &opts) {
  cfg.Validate();
  if (selected.empty()) Fail(ErrorKind::kEmptySelection, "stage 2 needs a non-empty selection");
  if (cfg.unknown.enabled && unknown_pool.empty())
    Fail(ErrorKind::kConfigError, "unknown class enabled but the unknown pool is empty");
  if (cfg.dims.feat_dim != corpus.feat_dim)
    Fail(ErrorKind::kConfigError, "model feat_dim ", cfg.dims.feat_dim, " != corpus feat_dim ", corpus.feat_dim);
  for (const Stage2Row &row : selected)
    if (!row.label.is_known() || row.label.index() >= corpus.n_speakers)
      Fail(ErrorKind::kInvalidLabel, "selected segment ", row.segment_id, " has label ", row.label.ToString());

  std::map<int64_t, Eigen::VectorXd> means;
  for (const Stage2Row &row : selected) means.emplace(row.segment_id, FrameMean(corpus.segment(row.segment_id).features));
  for (int64_t id : unknown_pool) means.emplace(id, FrameMean(corpus.segment(id).features));

  const int64_t unknown_from = cfg.UnknownStartEpoch();
  std::vector<std::vector<Stage2Batch>> plans;
  std::vector<bool> extended;
  int64_t total = 0;
  for (int64_t e = 0; e < cfg.epochs; ++e) {
    const bool mix = cfg.unknown.enabled && e >= unknown_from;
    UnknownMix unknown;
    if (mix) unknown = {unknown_pool, cfg.unknown.mix_fraction};
    plans.push_back(PlanEpochStage2(selected, unknown, cfg.batch_size, DeriveSeed(seed, kPlanStream + e)));
    extended.push_back(mix);
    total += static_cast<int64_t>(plans.back().size());
  }
  const OptimConfig optim = MakeOptim(cfg.momentum, cfg.lr_max, cfg.lr_final, cfg.warmup_fraction, total);

  TrainResult result;
  result.checkpoint = StartState(opts.resume, cfg.dims, corpus.n_speakers, seed, ConfigHash(cfg));
  Checkpoint &state = result.checkpoint;
  Model grad = Model::Zeros(cfg.dims, corpus.n_speakers);

  int64_t index = 0;
  for (int64_t e = 0; e < cfg.epochs; ++e) {
    const double margin = ScheduleValue(e, cfg.epochs, cfg.margin);
    for (const Stage2Batch &batch : plans[e]) {
      if (index++ < state.step) continue;
      if (opts.stop_after_step >= 0 && state.step >= opts.stop_after_step) return result;

      std::vector<Eigen::VectorXd> inputs;
      std::vector<SpeakerId> labels;
      for (const Stage2Row &row : batch.rows) {
        inputs.push_back(means.at(row.segment_id));
        labels.push_back(row.label);
      }
      grad.SetZero();
      const double sum = SegmentBatchObjective(state.model, inputs, labels, cfg.scale, margin, extended[e], &grad,
                                               opts.threads);
      const double mean_loss = sum / static_cast<double>(batch.rows.size());
      grad *= 1.0 / static_cast<double>(batch.rows.size());
      CheckFinite(mean_loss, state.step);

      const double lr = LrAt(state.step + 1, optim);
      SgdStep(state.model, grad, state.velocity, lr, cfg.momentum);
      ++state.step;
      result.metrics.push_back(
          {state.step, e, lr, margin, std::numeric_limits<double>::quiet_NaN(), mean_loss, extended[e]});
    }
  }
  return result;
}

std::vector<AblationRun> Stage1AblationGrid(double scale) {
  std::vector<AblationRun> grid;
  int n = 0;
  for (double m : {0.1, 0.0}) {
    const LinearSchedule margin{m, m};
    grid.push_back({"m" + std::to_string(++n), {scale, margin, {0.5, 0.5}, Aggregation::kMax}});
    grid.push_back({"m" + std::to_string(++n), {scale, margin, {0.5, 0.5}, Aggregation::kLse}});
    grid.push_back({"m" + std::to_string(++n), {scale, margin, {0.5, 0.1}, Aggregation::kLse}});
  }
  return grid;
}

}  // namespace weakspk
