// src/pipeline.cc

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

#include "weakspk/pipeline.h"

#include <functional>
#include <iomanip>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <type_traits>

#include "weakspk/io.h"
#include "weakspk/rng.h"

namespace weakspk {

using nlohmann::json;
namespace fs = std::filesystem;

uint64_t StageSeed(const RunConfig &cfg, Stage stage) {
  if (stage == Stage::kSynth) return cfg.seed;
  return DeriveSeed(cfg.seed, static_cast<uint64_t>(stage));
}

namespace {

struct Field {
  SchemaEntry entry;
  std::function<json(const RunConfig &)> get;
  std::function<void(RunConfig &, const json &)> set;
};

[[noreturn]] void BadValue(const std::string &key, const char *want, const json &v) {
  Fail(ErrorKind::kConfigError, "config key ", key, ": expected ", want, ", got ", v.dump());
}

template <typename Access>
Field Bind(const std::string &key, const std::string &origin, const std::string &doc, Access access) {
  using T = std::remove_reference_t<decltype(access(std::declval<RunConfig &>()))>;
  Field f;
  f.entry.key = key;
  f.entry.origin = origin;
  f.entry.doc = doc;
  if constexpr (std::is_same_v<T, bool>)
    f.entry.type = "bool";
  else if constexpr (std::is_integral_v<T>)
    f.entry.type = "int";
  else if constexpr (std::is_floating_point_v<T>)
    f.entry.type = "float";
  else
    f.entry.type = "string";
  f.get = [access](const RunConfig &c) { return json(access(const_cast<RunConfig &>(c))); };
  f.set = [access, key](RunConfig &c, const json &v) {
    T &slot = access(c);
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) BadValue(key, "bool", v);
      slot = v.get<bool>();
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) BadValue(key, "integer", v);
      if (v.is_number_unsigned()) {
        const auto u = v.get<uint64_t>();
        if (u > static_cast<uint64_t>(std::numeric_limits<T>::max())) BadValue(key, "integer in range", v);
        slot = static_cast<T>(u);
      } else {
        const auto i = v.get<int64_t>();
        if (std::is_unsigned_v<T> && i < 0) BadValue(key, "non-negative integer", v);
        if (!std::is_unsigned_v<T> && (i < static_cast<int64_t>(std::numeric_limits<T>::min()) ||
                                       i > static_cast<int64_t>(std::numeric_limits<T>::max())))
          BadValue(key, "integer in range", v);
        slot = static_cast<T>(i);
      }
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) BadValue(key, "number", v);
      slot = v.get<double>();
    } else {
      if (!v.is_string()) BadValue(key, "string", v);
      slot = v.get<std::string>();
    }
  };
  return f;
}

Field AggregationField(const std::string &key, const std::string &doc) {
  Field f;
  f.entry = {key, "max|lse", "", "method", doc};
  f.get = [](const RunConfig &c) { return json(AggregationName(c.stage1.loss.aggregation)); };
  f.set = [key](RunConfig &c, const json &v) {
    if (!v.is_string()) BadValue(key, "\"max\" or \"lse\"", v);
    c.stage1.loss.aggregation = ParseAggregation(v.get<std::string>());
  };
  return f;
}

Field PresetField() {
  Field f;
  f.entry = {"diar.preset", "baseline|pyannote-like", "", "method",
             "Starting point for the diar section; applied before the other diar keys."};
  f.get = [](const RunConfig &c) { return json(c.diar_preset); };
  f.set = [](RunConfig &c, const json &v) {
    if (!v.is_string()) BadValue("diar.preset", "preset name", v);
    c.diar = DiarConfig::Preset(v.get<std::string>());
    c.diar_preset = v.get<std::string>();
  };
  return f;
}

const std::vector<Field> &Fields() {
  static const std::vector<Field> fields = [] {
    std::vector<Field> v;
    auto add = [&](Field f) { v.push_back(std::move(f)); };
    add(Bind("seed", "plumbing", "Global seed; every stage derives its stream from it.",
             [](RunConfig &c) -> auto & { return c.seed; }));
    add(Bind("out", "plumbing", "Run directory.", [](RunConfig &c) -> auto & { return c.out; }));

    add(Bind("synth.n_speakers", "desk-scale", "Known speakers |T|.",
             [](RunConfig &c) -> auto & { return c.synth.n_speakers; }));
    add(Bind("synth.latent_dim", "desk-scale", "Dimension of the speaker latent space.",
             [](RunConfig &c) -> auto & { return c.synth.latent_dim; }));
    add(Bind("synth.feat_dim", "desk-scale", "Frame feature dimension.",
             [](RunConfig &c) -> auto & { return c.synth.feat_dim; }));
    add(Bind("synth.recordings_per_speaker", "desk-scale", "Recordings labeled with each known speaker.",
             [](RunConfig &c) -> auto & { return c.synth.recordings_per_speaker; }));
    add(Bind("synth.segments_per_recording.lo", "desk-scale", "Fewest segments per recording.",
             [](RunConfig &c) -> auto & { return c.synth.segments_per_recording.lo; }));
    add(Bind("synth.segments_per_recording.hi", "desk-scale", "Most segments per recording.",
             [](RunConfig &c) -> auto & { return c.synth.segments_per_recording.hi; }));
    add(Bind("synth.frames_per_segment.lo", "desk-scale", "Fewest frames per segment.",
             [](RunConfig &c) -> auto & { return c.synth.frames_per_segment.lo; }));
    add(Bind("synth.frames_per_segment.hi", "desk-scale", "Most frames per segment.",
             [](RunConfig &c) -> auto & { return c.synth.frames_per_segment.hi; }));
    add(Bind("synth.distractors_per_recording.lo", "desk-scale", "Fewest non-target speakers per recording.",
             [](RunConfig &c) -> auto & { return c.synth.distractors_per_recording.lo; }));
    add(Bind("synth.distractors_per_recording.hi", "desk-scale", "Most non-target speakers per recording.",
             [](RunConfig &c) -> auto & { return c.synth.distractors_per_recording.hi; }));
    add(Bind("synth.noise_segment_prob", "desk-scale", "Probability that a segment is noise.",
             [](RunConfig &c) -> auto & { return c.synth.noise_segment_prob; }));
    add(Bind("synth.within_speaker_noise", "desk-scale", "Std of per-frame latent noise.",
             [](RunConfig &c) -> auto & { return c.synth.within_speaker_noise; }));
    add(Bind("synth.unknown_speaker_count", "desk-scale", "Speakers outside T used as distractors.",
             [](RunConfig &c) -> auto & { return c.synth.unknown_speaker_count; }));
    add(Bind("synth.target_speech_fraction", "desk-scale",
             "Probability that a speech segment belongs to the recording target.",
             [](RunConfig &c) -> auto & { return c.synth.target_speech_fraction; }));
    add(Bind("synth.lift_gain", "desk-scale", "Gain of the latent-to-feature map.",
             [](RunConfig &c) -> auto & { return c.synth.lift_gain; }));

    add(PresetField());
    add(Bind("diar.purity", "desk-scale", "Probability a segment stays with its own speaker's cluster.",
             [](RunConfig &c) -> auto & { return c.diar.purity; }));
    add(Bind("diar.split_factor", "desk-scale", "Expected clusters per speaker present.",
             [](RunConfig &c) -> auto & { return c.diar.split_factor; }));
    add(Bind("diar.max_clusters", "desk-scale", "Cluster cap per recording, 0 for none.",
             [](RunConfig &c) -> auto & { return c.diar.max_clusters; }));
    add(Bind("diar.drop_noise", "desk-scale", "Remove noise segments before clustering.",
             [](RunConfig &c) -> auto & { return c.diar.drop_noise; }));

    add(AggregationField("stage1.loss.aggregation", "Bag pooling of per-segment similarities."));
    add(Bind("stage1.loss.scale", "method", "Logit scale s.", [](RunConfig &c) -> auto & {
      return c.stage1.loss.scale;
    }));
    add(Bind("stage1.loss.margin.start", "method", "Additive angular margin at the first epoch.",
             [](RunConfig &c) -> auto & { return c.stage1.loss.margin.start; }));
    add(Bind("stage1.loss.margin.end", "method", "Additive angular margin at the last epoch.",
             [](RunConfig &c) -> auto & { return c.stage1.loss.margin.end; }));
    add(Bind("stage1.loss.tau.start", "method", "LSE temperature at the first epoch.",
             [](RunConfig &c) -> auto & { return c.stage1.loss.tau.start; }));
    add(Bind("stage1.loss.tau.end", "method", "LSE temperature at the last epoch.",
             [](RunConfig &c) -> auto & { return c.stage1.loss.tau.end; }));
    add(Bind("stage1.dims.hidden", "desk-scale", "Hidden width of the embedder.",
             [](RunConfig &c) -> auto & { return c.stage1.dims.hidden; }));
    add(Bind("stage1.dims.emb_dim", "desk-scale", "Embedding dimension.",
             [](RunConfig &c) -> auto & { return c.stage1.dims.emb_dim; }));
    add(Bind("stage1.epochs", "desk-scale", "Training epochs.", [](RunConfig &c) -> auto & {
      return c.stage1.epochs;
    }));
    add(Bind("stage1.batch_size", "desk-scale", "Target segments per batch; batches vary within 10%.",
             [](RunConfig &c) -> auto & { return c.stage1.batch_size; }));
    add(Bind("stage1.lr_max", "desk-scale", "Learning rate after warm-up.",
             [](RunConfig &c) -> auto & { return c.stage1.lr_max; }));
    add(Bind("stage1.lr_final", "desk-scale", "Learning rate at the last step.",
             [](RunConfig &c) -> auto & { return c.stage1.lr_final; }));
    add(Bind("stage1.warmup_fraction", "desk-scale", "Share of steps spent in linear warm-up.",
             [](RunConfig &c) -> auto & { return c.stage1.warmup_fraction; }));
    add(Bind("stage1.momentum", "method", "SGD momentum.", [](RunConfig &c) -> auto & {
      return c.stage1.momentum;
    }));

    add(Bind("select.top_k", "method", "Pool candidates whose target ranks this high are discarded.",
             [](RunConfig &c) -> auto & { return c.select.top_k; }));
    add(Bind("select.fraction", "method", "Share of filtered candidates kept in the unknown pool.",
             [](RunConfig &c) -> auto & { return c.select.fraction; }));

    add(Bind("stage2.scale", "method", "Logit scale s.", [](RunConfig &c) -> auto & { return c.stage2.scale; }));
    add(Bind("stage2.margin.start", "method", "Margin at the first epoch.",
             [](RunConfig &c) -> auto & { return c.stage2.margin.start; }));
    add(Bind("stage2.margin.end", "method", "Margin at the last epoch.",
             [](RunConfig &c) -> auto & { return c.stage2.margin.end; }));
    add(Bind("stage2.dims.hidden", "desk-scale", "Hidden width of the embedder.",
             [](RunConfig &c) -> auto & { return c.stage2.dims.hidden; }));
    add(Bind("stage2.dims.emb_dim", "desk-scale", "Embedding dimension.",
             [](RunConfig &c) -> auto & { return c.stage2.dims.emb_dim; }));
    add(Bind("stage2.epochs", "desk-scale", "Training epochs.", [](RunConfig &c) -> auto & {
      return c.stage2.epochs;
    }));
    add(Bind("stage2.batch_size", "desk-scale", "Segments per batch.", [](RunConfig &c) -> auto & {
      return c.stage2.batch_size;
    }));
    add(Bind("stage2.lr_max", "desk-scale", "Learning rate after warm-up.",
             [](RunConfig &c) -> auto & { return c.stage2.lr_max; }));
    add(Bind("stage2.lr_final", "desk-scale", "Learning rate at the last step.",
             [](RunConfig &c) -> auto & { return c.stage2.lr_final; }));
    add(Bind("stage2.warmup_fraction", "desk-scale", "Share of steps spent in linear warm-up.",
             [](RunConfig &c) -> auto & { return c.stage2.warmup_fraction; }));
    add(Bind("stage2.momentum", "method", "SGD momentum.", [](RunConfig &c) -> auto & {
      return c.stage2.momentum;
    }));
    add(Bind("stage2.unknown.enabled", "method", "Add the unknown class part way through training.",
             [](RunConfig &c) -> auto & { return c.stage2.unknown.enabled; }));
    add(Bind("stage2.unknown.on_at_epoch", "method", "First epoch with the unknown class; -1 for epochs/2.",
             [](RunConfig &c) -> auto & { return c.stage2.unknown.on_at_epoch; }));
    add(Bind("stage2.unknown.mix_fraction", "desk-scale", "Share of each batch drawn from the unknown pool.",
             [](RunConfig &c) -> auto & { return c.stage2.unknown.mix_fraction; }));

    add(Bind("eval.n_target_trials", "desk-scale", "Same-speaker trials.",
             [](RunConfig &c) -> auto & { return c.eval.n_target_trials; }));
    add(Bind("eval.n_nontarget_trials", "desk-scale", "Different-speaker trials.",
             [](RunConfig &c) -> auto & { return c.eval.n_nontarget_trials; }));
    add(Bind("eval.heldout_fraction", "desk-scale", "Share of each speaker's recordings held out for trials.",
             [](RunConfig &c) -> auto & { return c.eval.split.heldout_fraction; }));
    add(Bind("eval.min_heldout_per_speaker", "desk-scale", "Lower bound on held-out recordings per speaker.",
             [](RunConfig &c) -> auto & { return c.eval.split.min_heldout_per_speaker; }));
    add(Bind("eval.p_target", "method", "Target prior of the detection cost.",
             [](RunConfig &c) -> auto & { return c.eval.dcf.p_target; }));
    add(Bind("eval.c_miss", "plumbing", "Cost of a miss.", [](RunConfig &c) -> auto & {
      return c.eval.dcf.c_miss;
    }));
    add(Bind("eval.c_fa", "plumbing", "Cost of a false alarm.", [](RunConfig &c) -> auto & {
      return c.eval.dcf.c_fa;
    }));

    const RunConfig defaults;
    for (Field &f : v) f.entry.default_value = f.get(defaults).dump();
    return v;
  }();
  return fields;
}

void FlattenInto(const json &node, const std::string &prefix, std::map<std::string, json> &out) {
  if (!node.is_object()) {
    if (prefix.empty()) Fail(ErrorKind::kConfigError, "config must be a JSON object");
    out[prefix] = node;
    return;
  }
  for (const auto &[k, v] : node.items()) FlattenInto(v, prefix.empty() ? k : prefix + "." + k, out);
}

void WriteSnapshot(const RunConfig &cfg, const fs::path &dir) {
  WriteFileAtomic(dir / "config.json", RunConfigToJson(cfg).dump(2) + "\n");
}

void WriteJson(const json &doc, const fs::path &path) { WriteFileAtomic(path, doc.dump(2) + "\n"); }

std::string Hex(uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

Corpus LoadCheckedCorpus(const fs::path &dir) {
  Corpus corpus = LoadManifest(dir);
  const ValidationReport report = ValidateCorpus(corpus);
  if (!report.ok()) Fail(report.violations.front().kind, "corpus ", dir.string(), ": ", report.Summary());
  return corpus;
}

// The corpus without its held-out recordings.
Corpus TrainingCorpus(const fs::path &corpus_dir) {
  const Corpus full = LoadCheckedCorpus(corpus_dir);
  const TrialList trials = LoadTrials(corpus_dir);
  return full.Without(std::set<int64_t>(trials.heldout_recordings.begin(), trials.heldout_recordings.end()));
}

json ScheduleJson(const LinearSchedule &s) { return json{{"start", s.start}, {"end", s.end}}; }

}  // namespace

std::vector<SchemaEntry> ConfigSchema() {
  std::vector<SchemaEntry> out;
  for (const Field &f : Fields()) out.push_back(f.entry);
  return out;
}

std::string FormatSchema() {
  std::ostringstream os;
  os << "# weakspk run configuration\n"
     << "#\n"
     << "# JSON object; nested keys follow the dotted paths below.  Unknown keys\n"
     << "# are rejected.  origin: method = setting of the training recipe,\n"
     << "# desk-scale = chosen for the synthetic setup, plumbing = tool behaviour.\n"
     << "#\n"
     << "# key\ttype\tdefault\torigin\tdescription\n";
  for (const Field &f : Fields())
    os << f.entry.key << '\t' << f.entry.type << '\t' << f.entry.default_value << '\t' << f.entry.origin << '\t'
       << f.entry.doc << '\n';
  return os.str();
}

RunConfig ParseRunConfig(const json &doc) {
  std::map<std::string, json> flat;
  FlattenInto(doc, "", flat);
  RunConfig cfg;
  for (const Field &f : Fields()) {
    auto it = flat.find(f.entry.key);
    if (it == flat.end()) continue;
    f.set(cfg, it->second);
    flat.erase(it);
  }
  if (!flat.empty()) Fail(ErrorKind::kConfigError, "unknown config key: ", flat.begin()->first);
  return cfg;
}

RunConfig LoadRunConfig(const fs::path &path) {
  json doc;
  try {
    doc = json::parse(ReadFileBytes(path));
  } catch (const json::exception &e) {
    Fail(ErrorKind::kConfigError, path.string(), ": ", e.what());
  } catch (const Error &e) {
    Fail(ErrorKind::kConfigError, e.what());
  }
  return ParseRunConfig(doc);
}

json RunConfigToJson(const RunConfig &cfg) {
  json flat = json::object();
  for (const Field &f : Fields()) {
    std::string pointer = "/" + f.entry.key;
    for (char &ch : pointer)
      if (ch == '.') ch = '/';
    flat[pointer] = f.get(cfg);
  }
  return flat.unflatten();
}

void FinalizeRunConfig(RunConfig &cfg) {
  cfg.synth.seed = StageSeed(cfg, Stage::kSynth);
  cfg.diar.seed = StageSeed(cfg, Stage::kDiar);
  cfg.stage1.dims.feat_dim = cfg.synth.feat_dim;
  cfg.stage2.dims.feat_dim = cfg.synth.feat_dim;
  try {
    cfg.synth.Validate();
    cfg.diar.Validate();
    cfg.stage1.Validate();
    cfg.stage2.Validate();
  } catch (const Error &e) {
    Fail(ErrorKind::kConfigError, e.what());
  }
  if (cfg.select.top_k < 1) Fail(ErrorKind::kConfigError, "select.top_k must be >= 1");
  if (!(cfg.select.fraction > 0.0 && cfg.select.fraction <= 1.0))
    Fail(ErrorKind::kConfigError, "select.fraction must be in (0, 1]");
  if (cfg.eval.n_target_trials < 1 || cfg.eval.n_nontarget_trials < 1)
    Fail(ErrorKind::kConfigError, "eval needs at least one trial of each kind");
  if (!(cfg.eval.split.heldout_fraction > 0.0 && cfg.eval.split.heldout_fraction < 1.0))
    Fail(ErrorKind::kConfigError, "eval.heldout_fraction must be in (0, 1)");
  if (cfg.eval.split.min_heldout_per_speaker < 2)
    Fail(ErrorKind::kConfigError, "eval.min_heldout_per_speaker must be >= 2");
  const DcfParams &d = cfg.eval.dcf;
  if (!(d.p_target > 0.0 && d.p_target < 1.0 && d.c_miss > 0.0 && d.c_fa > 0.0))
    Fail(ErrorKind::kConfigError, "eval needs p_target in (0, 1) and positive costs");
  if (cfg.stage2.unknown.enabled && cfg.synth.n_speakers <= cfg.select.top_k)
    Fail(ErrorKind::kConfigError, "the unknown class needs more than select.top_k speakers");
}

void CmdGen(const RunConfig &cfg, const fs::path &corpus_dir) {
  const Corpus corpus = GenerateCorpus(cfg.synth);
  const TrialList trials = SplitTrials(corpus, cfg.eval.n_target_trials, cfg.eval.n_nontarget_trials,
                                       StageSeed(cfg, Stage::kTrials), cfg.eval.split);
  SaveManifest(corpus, corpus_dir);
  SaveOracle(corpus, corpus_dir / "oracle.tsv");
  SaveTrials(trials, corpus_dir);
  WriteSnapshot(cfg, corpus_dir);
}

void CmdDiar(const RunConfig &cfg, const fs::path &corpus_dir) {
  Corpus corpus = LoadManifest(corpus_dir);
  DiarizeCorpus(corpus, cfg.diar);
  SaveManifest(corpus, corpus_dir);
  WriteSnapshot(cfg, corpus_dir);
}

void CmdTrain1(const RunConfig &cfg, const fs::path &corpus_dir, const fs::path &run_dir, const std::string &name,
               int threads) {
  const Corpus corpus = TrainingCorpus(corpus_dir);
  TrainOptions opts;
  opts.threads = threads;
  const TrainResult result = TrainStage1(corpus, cfg.stage1, StageSeed(cfg, Stage::kStage1), opts);
  SaveCheckpoint(result.checkpoint, run_dir / "checkpoint.bin");
  WriteFileAtomic(run_dir / "metrics.csv", FormatMetricsCsv(result.metrics));
  const LossConfig &loss = cfg.stage1.loss;
  json run{{"stage", 1},
           {"name", name},
           {"seed", cfg.seed},
           {"diarization", cfg.diar_preset},
           {"aggregation", AggregationName(loss.aggregation)},
           {"margin", ScheduleJson(loss.margin)},
           {"steps", result.checkpoint.step},
           {"config_hash", Hex(result.checkpoint.config_hash)}};
  run["tau"] = loss.aggregation == Aggregation::kLse ? ScheduleJson(loss.tau) : json(nullptr);
  WriteJson(run, run_dir / "run.json");
  WriteSnapshot(cfg, run_dir);
}

SelectionStats CmdSelect(const RunConfig &cfg, const fs::path &corpus_dir, const fs::path &stage1_dir,
                         const fs::path &selection_dir) {
  const Corpus corpus = TrainingCorpus(corpus_dir);
  const Model model = LoadCheckpoint(stage1_dir / "checkpoint.bin").model;
  if (model.n_speakers() != corpus.n_speakers)
    Fail(ErrorKind::kConfigError, "checkpoint has ", model.n_speakers(), " prototypes, corpus ", corpus.n_speakers,
         " speakers");
  const SelectionResult selection = SelfLabel(corpus, model);
  UnknownPool pool;
  if (corpus.n_speakers > cfg.select.top_k)
    pool = SelectUnknownPool(corpus, model, selection,
                             {cfg.select.top_k, cfg.select.fraction, cfg.stage1.loss.scale});
  SaveSelection(selection.selected, selection_dir / "selection.jsonl");
  SaveUnknownPool(pool, selection_dir / "unknown_pool.jsonl");
  json stats = StatsToJson(selection.stats);
  stats["unknown_pool"] = {{"size", pool.members.size()},
                           {"candidates", pool.n_candidates},
                           {"survivors", pool.n_survivors}};
  WriteJson(stats, selection_dir / "selection_stats.json");
  WriteSnapshot(cfg, selection_dir);
  return selection.stats;
}

void CmdTrain2(const RunConfig &cfg, const fs::path &corpus_dir, const fs::path &selection_dir,
               const fs::path &run_dir, const std::string &name, int threads) {
  const std::vector<SelectedSegment> selected = LoadSelection(selection_dir / "selection.jsonl");
  std::vector<int64_t> pool;
  if (cfg.stage2.unknown.enabled) pool = PoolSegmentIds(LoadUnknownPool(selection_dir / "unknown_pool.jsonl"));
  const Corpus corpus = TrainingCorpus(corpus_dir);
  TrainOptions opts;
  opts.threads = threads;
  const std::vector<Stage2Row> rows = ToStage2Rows(selected);
  const TrainResult result = TrainStage2(corpus, rows, pool, cfg.stage2, StageSeed(cfg, Stage::kStage2), opts);
  SaveCheckpoint(result.checkpoint, run_dir / "checkpoint.bin");
  WriteFileAtomic(run_dir / "metrics.csv", FormatMetricsCsv(result.metrics));
  json run{{"stage", 2},
           {"name", name},
           {"seed", cfg.seed},
           {"diarization", cfg.diar_preset},
           {"margin", ScheduleJson(cfg.stage2.margin)},
           {"unknown_class", cfg.stage2.unknown.enabled},
           {"n_selected", selected.size()},
           {"n_unknown_pool", pool.size()},
           {"steps", result.checkpoint.step},
           {"config_hash", Hex(result.checkpoint.config_hash)}};
  run["unknown_start_epoch"] = cfg.stage2.unknown.enabled ? json(cfg.stage2.UnknownStartEpoch()) : json(nullptr);
  WriteJson(run, run_dir / "run.json");
  WriteSnapshot(cfg, run_dir);
}

EvalSummary CmdEval(const RunConfig &cfg, const fs::path &corpus_dir, const fs::path &run_dir, int threads) {
  const Corpus corpus = LoadCheckedCorpus(corpus_dir);
  const TrialList trials = LoadTrials(corpus_dir);
  const Model model = LoadCheckpoint(run_dir / "checkpoint.bin").model;
  const ScoreSet scores = ScoreTrials(model, corpus, trials, threads);
  SaveScores(trials, scores, run_dir / "scores.tsv");
  EvalSummary summary{ComputeEer(scores), ComputeMinDcf(scores, cfg.eval.dcf),
                      static_cast<int64_t>(scores.scores.size())};
  WriteJson(json{{"eer", summary.eer},
                 {"min_dcf", summary.min_dcf},
                 {"n_trials", summary.n_trials},
                 {"p_target", cfg.eval.dcf.p_target},
                 {"c_miss", cfg.eval.dcf.c_miss},
                 {"c_fa", cfg.eval.dcf.c_fa}},
            run_dir / "eval.json");
  return summary;
}

json CmdReport(const fs::path &root) {
  const json report = MakeReport(root);
  WriteJson(report, root / "report.json");
  return report;
}

void RunPipeline(const RunConfig &cfg, int threads) {
  const fs::path root = cfg.out;
  CmdGen(cfg, root / "corpus");
  CmdDiar(cfg, root / "corpus");
  CmdTrain1(cfg, root / "corpus", root / "stage1", "stage1", threads);
  CmdSelect(cfg, root / "corpus", root / "stage1", root / "selection");
  CmdTrain2(cfg, root / "corpus", root / "selection", root / "stage2",
            cfg.stage2.unknown.enabled ? "stage2+unknown" : "stage2", threads);
  for (const char *run : {"stage1", "stage2"}) CmdEval(cfg, root / "corpus", root / run, threads);
  CmdReport(root);
  WriteSnapshot(cfg, root);
}

void CmdAblate(const RunConfig &cfg, const fs::path &root, int threads) {
  CmdGen(cfg, root / "corpus");
  CmdDiar(cfg, root / "corpus");

  RunConfig pyannote = cfg;
  pyannote.diar = DiarConfig::PyannoteLike();
  pyannote.diar.seed = cfg.diar.seed;
  pyannote.diar_preset = "pyannote-like";
  CmdGen(pyannote, root / "corpus_p");
  CmdDiar(pyannote, root / "corpus_p");

  std::vector<fs::path> runs;
  LossConfig m4;
  for (const AblationRun &a : Stage1AblationGrid(cfg.stage1.loss.scale)) {
    RunConfig run = cfg;
    run.stage1.loss = a.loss;
    if (a.name == "m4") m4 = a.loss;
    runs.push_back(root / ("stage1_" + a.name));
    CmdTrain1(run, root / "corpus", runs.back(), a.name, threads);
  }
  pyannote.stage1.loss = m4;
  runs.push_back(root / "stage1_p");
  CmdTrain1(pyannote, root / "corpus_p", runs.back(), "p", threads);

  RunConfig from_m4 = cfg;
  from_m4.stage1.loss = m4;
  CmdSelect(from_m4, root / "corpus", root / "stage1_m4", root / "selection");
  for (bool unknown : {false, true}) {
    RunConfig run = from_m4;
    run.stage2.unknown.enabled = unknown;
    runs.push_back(root / (unknown ? "stage2_unknown" : "stage2"));
    CmdTrain2(run, root / "corpus", root / "selection", runs.back(), unknown ? "stage2+unknown" : "stage2",
              threads);
  }
  for (const fs::path &run : runs) CmdEval(cfg, root / "corpus", run, threads);
  CmdReport(root);
  WriteSnapshot(cfg, root);
}

}  // namespace weakspk
