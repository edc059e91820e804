// weakspk/trainer.h

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

// Training loops.  Stage 1 learns from recording bags and their weak labels;
// stage 2 is ordinary per-segment training on self-labeled segments, with an
// optional unknown class switched on part way through.

#ifndef WEAKSPK_TRAINER_H_
#define WEAKSPK_TRAINER_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "weakspk/batching.h"
#include "weakspk/corpus.h"
#include "weakspk/embedder.h"
#include "weakspk/miloss.h"

namespace weakspk {

struct OptimConfig {
  double momentum = 0.9;
  double lr_max = 0.05;
  double lr_final = 1e-4;
  int64_t warmup_steps = 0;
  int64_t total_steps = 0;

  void Validate() const;
};

/// Linear warm-up 0 -> lr_max over warmup_steps, then exponential decay
/// lr_max * (lr_final / lr_max)^((step - warmup) / (total - warmup)).
/// Hits lr_max at step == warmup_steps and lr_final at step == total_steps
/// exactly.  The k-th update (0-based) uses LrAt(k + 1).
double LrAt(int64_t step, const OptimConfig &cfg);

// start + (end - start) * epoch / (n_epochs - 1); the last epoch gets `end`.
double ScheduleValue(int64_t epoch, int64_t n_epochs, const LinearSchedule &schedule);

/// v <- momentum * v - lr * g;  p <- p + v;  prototype rows renormalized.
/// Throws kNonFiniteGradient (leaving model and velocity untouched) if the
/// gradient has a non-finite entry.
void SgdStep(Model &model, const Model &grad, Model &velocity, double lr, double momentum);

struct LossParams {
  Aggregation aggregation = Aggregation::kMax;
  double tau = 0.5;
  double scale = 30.0;
  double margin = 0.0;
};

/// Weak recording loss of one bag given the frame means of its segments.
/// When grad is non-null the gradient is added to it.
double BagObjective(const Model &model, std::span<const Eigen::VectorXd> inputs, int32_t target,
                    const LossParams &loss, Model *grad);

/// Summed per-segment loss of a stage-2 batch.  With `extended` set the
/// unknown-class column is appended; otherwise every label must be known.
/// Per-row work runs on `threads` threads; results are independent of it.
double SegmentBatchObjective(const Model &model, std::span<const Eigen::VectorXd> inputs,
                             std::span<const SpeakerId> labels, double scale, double margin, bool extended,
                             Model *grad, int threads = 1);

struct Stage1Config {
  LossConfig loss;
  EmbedderDims dims;
  int64_t epochs = 60;
  int64_t batch_size = 64;
  // Pilot-tuned: 0.05 makes the first epoch's loss rise before it falls.
  double lr_max = 0.02;
  double lr_final = 1e-4;
  double warmup_fraction = 0.05;
  double momentum = 0.9;

  void Validate() const;
};

struct UnknownClassConfig {
  bool enabled = false;
  int64_t on_at_epoch = -1;  // -1: epochs / 2
  double mix_fraction = 0.1;
};

struct Stage2Config {
  double scale = 30.0;
  LinearSchedule margin{0.1, 0.3};
  EmbedderDims dims;
  int64_t epochs = 30;
  int64_t batch_size = 128;
  double lr_max = 0.05;
  double lr_final = 1e-4;
  double warmup_fraction = 0.05;
  double momentum = 0.9;
  UnknownClassConfig unknown;

  int64_t UnknownStartEpoch() const { return unknown.on_at_epoch < 0 ? epochs / 2 : unknown.on_at_epoch; }
  void Validate() const;
};

uint64_t ConfigHash(const Stage1Config &cfg);
uint64_t ConfigHash(const Stage2Config &cfg);

struct MetricsRow {
  int64_t step = 0;
  int64_t epoch = 0;
  double lr = 0.0;
  double margin = 0.0;
  double tau = 0.0;  // NaN when the stage has no temperature
  double loss = 0.0;
  bool extended = false;  // unknown-class loss in use
};

struct Checkpoint {
  Model model;
  Model velocity;
  int64_t step = 0;  // updates applied
  uint64_t config_hash = 0;
};

// Model section (see EncodeModel), then "WMLO", step u64, config hash u64
// and the velocity tensors as little-endian f64 in model order.
void SaveCheckpoint(const Checkpoint &ckpt, const std::filesystem::path &path);
Checkpoint LoadCheckpoint(const std::filesystem::path &path);

// "step,epoch,lr,margin,tau,loss" with round-trip precision.
std::string FormatMetricsCsv(std::span<const MetricsRow> rows);

struct TrainOptions {
  int threads = 1;
  // Stop once this many updates have been applied (-1: train to the end).
  int64_t stop_after_step = -1;
  // Continue from a checkpoint of the same configuration.
  const Checkpoint *resume = nullptr;
};

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<MetricsRow> metrics;
};

// Frame means of every segment in the corpus.
std::map<int64_t, Eigen::VectorXd> ComputeFrameMeans(const Corpus &corpus);

/// Stage 1: for each epoch, PlanEpochStage1 batches are pushed through
/// forward -> cosines -> Aggregate -> weak margin loss -> backward; the batch
/// gradient is the mean over bags.  Margin and tau follow their schedules
/// per epoch.  Deterministic in seed for any thread count.
TrainResult TrainStage1(const Corpus &corpus, const Stage1Config &cfg, uint64_t seed,
                        const TrainOptions &opts = {});

/// Stage 2: per-segment margin softmax on the selected rows with the margin
/// schedule.  With the unknown class enabled, epochs from UnknownStartEpoch()
/// mix unknown-pool rows into every batch and use ExtendedCeLoss.
TrainResult TrainStage2(const Corpus &corpus, std::span<const Stage2Row> selected,
                        std::span<const int64_t> unknown_pool, const Stage2Config &cfg, uint64_t seed,
                        const TrainOptions &opts = {});

struct AblationRun {
  std::string name;
  LossConfig loss;
};

// Named stage-1 runs m1..m6: {MAX, LSE tau 0.5, LSE tau 0.5 -> 0.1} with
// margin 0.1 (m1-m3) and 0 (m4-m6).
std::vector<AblationRun> Stage1AblationGrid(double scale = 30.0);

}  // namespace weakspk

#endif  // WEAKSPK_TRAINER_H_
