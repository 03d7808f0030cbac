// Copyright 2026 The tvret Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "tvr/cli.hpp"

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "tvr/checkpoint.hpp"
#include "tvr/config.hpp"
#include "tvr/dataset.hpp"
#include "tvr/gradcheck_suite.hpp"
#include "tvr/retrieval.hpp"
#include "tvr/synthetic.hpp"
#include "tvr/trainer.hpp"

namespace tvr {
namespace {

struct SynthArgs {
  std::string out;
  SyntheticConfig cfg;
  std::uint32_t format_version = kEmbeddingVersionChecked;
};

struct TrainArgs {
  std::string data, out, config, log;
  std::optional<int> epochs, batch, heads, layers, centers, frames;
  std::optional<long> steps;
  std::optional<double> lr, w;
  std::optional<Eigen::Index> dim;
  std::optional<std::string> tdb_variant, tab_variant;
  std::optional<std::uint64_t> seed;
  bool keep_diff = false, literal_eq7 = false;
};

struct EvalArgs {
  std::string checkpoint, data, out, split = "test", label;
  double w = kDefaultFusionWeight;
  bool validate_only = false, pessimistic = false;
};

int run_synth(const SynthArgs& a, std::ostream& out) {
  SyntheticData data = synthesize_dataset(a.cfg);
  data.videos.version = a.format_version;
  data.texts.version = a.format_version;
  write_dataset(a.out, data);
  out << "wrote " << data.videos.records.size() << " videos, " << data.texts.records.size() << " texts to " << a.out
      << "\n";
  return 0;
}

bool file_sets(const std::string& path, const std::string& key) {
  if (path.empty()) return false;
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    std::string k = line.substr(0, eq);
    k.erase(k.find_last_not_of(" \t") + 1);
    k.erase(0, k.find_first_not_of(" \t"));
    if (k == key) return true;
  }
  return false;
}

int run_train(const TrainArgs& a, std::ostream& out) {
  TrainConfig cfg = a.config.empty() ? TrainConfig{} : TrainConfig::load(a.config);
  seed_from_env(cfg.seed);
  if (a.seed) cfg.seed = *a.seed;
  if (a.epochs) cfg.epochs = *a.epochs;
  if (a.batch) cfg.batch_size = *a.batch;
  if (a.steps) cfg.max_steps = *a.steps;
  if (a.lr) cfg.adam.lr = *a.lr;
  if (a.w) cfg.w = *a.w;
  if (a.heads) cfg.model.heads = *a.heads;
  if (a.layers) cfg.model.temporal_layers = *a.layers;
  if (a.centers) cfg.model.centers = *a.centers;
  if (a.tdb_variant) cfg.model.tdb_variant = parse_tdb_variant(*a.tdb_variant);
  if (a.tab_variant) cfg.model.tab_variant = parse_tab_variant(*a.tab_variant);
  if (a.keep_diff) cfg.model.keep_difference_tokens = true;
  if (a.literal_eq7) cfg.model.literal_eq7 = true;
  cfg.data = a.data;
  cfg.checkpoint = a.out;

  const Dataset data = Dataset::load(a.data);
  // Sizes not given explicitly follow the data.
  if (a.dim) {
    cfg.model.dim = *a.dim;
  } else if (!file_sets(a.config, "dim")) {
    cfg.model.dim = data.dim();
  }
  if (a.frames) {
    cfg.model.frames = *a.frames;
  } else if (!file_sets(a.config, "frames")) {
    int longest = 0;
    for (const VideoItem& v : data.videos) longest = std::max(longest, static_cast<int>(v.frames.rows()));
    cfg.model.frames = longest;
  }
  if (!data.texts.empty()) cfg.tokens = static_cast<int>(data.texts.front().tokens.rows());
  cfg.validate();

  std::ofstream log_file;
  std::ostream* log = &out;
  if (!a.log.empty()) {
    log_file.open(a.log, std::ios::trunc);
    if (!log_file) throw std::runtime_error("cannot write log " + a.log);
    log = &log_file;
  }
  Trainer trainer(cfg, data);
  trainer.run(log);
  save_checkpoint(a.out, cfg, trainer.model(), trainer.optimizer());
  out << "saved checkpoint " << a.out << " after " << trainer.optimizer().steps() << " steps\n";
  return 0;
}

int run_eval(const EvalArgs& a, std::ostream& out) {
  if (a.validate_only) {
    const DataPaths p = DataPaths::in(a.data);
    const EmbeddingFile videos = read_embeddings(p.videos);
    const EmbeddingFile texts = read_embeddings(p.texts);
    const Dataset data = Dataset::from_files(videos, texts, read_manifest(p.manifest));
    out << "valid: " << videos.records.size() << " videos (seq_len " << videos.seq_len << ", dim " << videos.dim
        << "), " << texts.records.size() << " texts (seq_len " << texts.seq_len << "), " << data.pairs.size()
        << " pairs\n";
    return 0;
  }
  if (a.checkpoint.empty()) throw CLI::RequiredError("--checkpoint");
  check_fusion_weight(a.w);
  Checkpoint ck = load_checkpoint(a.checkpoint);
  const Dataset data = Dataset::load(a.data);
  const Split split = parse_split(a.split);
  const EvalSubset subset = data.has_split(split) ? select_split(data, split) : select_all(data);
  const Eigen::MatrixXd s = build_similarity_matrix(ck.model, data, subset, a.w);
  const TieRule rule = a.pessimistic ? TieRule::Pessimistic : TieRule::Optimistic;
  const RetrievalReport t2v = evaluate_t2v(s, subset.pairing, rule);
  const RetrievalReport v2t = evaluate_v2t(s, subset.pairing, rule);
  write_table(out, t2v, v2t, a.label);
  if (!a.out.empty()) {
    std::ofstream rec(a.out, std::ios::trunc);
    if (!rec) throw std::runtime_error("cannot write " + a.out);
    write_record(rec, t2v);
    write_record(rec, v2t);
  } else {
    write_record(out, t2v);
    write_record(out, v2t);
  }
  return 0;
}

int run_report(const std::string& in_path, const std::string& label, std::ostream& out) {
  std::vector<RetrievalReport> reports;
  if (in_path == "-") {
    reports = read_record(std::cin);
  } else {
    std::ifstream in(in_path);
    if (!in) throw std::runtime_error("cannot open " + in_path);
    reports = read_record(in);
  }
  RetrievalReport t2v, v2t;
  v2t.direction = Direction::VideoToText;
  for (const RetrievalReport& r : reports) (r.direction == Direction::TextToVideo ? t2v : v2t) = r;
  write_table(out, t2v, v2t, label);
  return 0;
}

}  // namespace

int cli_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Video-text retrieval engine over precomputed frame and token embeddings", "tvr"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "Write a seeded synthetic paired-embedding dataset");
  s->add_option("--out", synth.out, "Output directory")->required();
  s->add_option("--pairs", synth.cfg.num_pairs, "Number of text-video pairs");
  s->add_option("--concepts", synth.cfg.num_concepts, "Concept vocabulary size");
  s->add_option("--frames", synth.cfg.frames, "Frames per video");
  s->add_option("--tokens", synth.cfg.tokens, "Token rows per caption");
  s->add_option("--dim", synth.cfg.dim, "Embedding dimension");
  s->add_option("--noise", synth.cfg.noise, "Noise norm");
  s->add_option("--segments", synth.cfg.segments, "Concepts per pair");
  s->add_option("--order-weight", synth.cfg.order_weight, "Weight of the order term in [CLS]");
  s->add_option("--test-fraction", synth.cfg.test_fraction, "Fraction of pairs in the test split");
  s->add_option("--seed", synth.cfg.seed, "Generator seed");
  s->add_option("--format-version", synth.format_version, "Embedding file version (1 plain, 2 checksummed)")
      ->check(CLI::IsMember({1u, 2u}));
  s->add_flag("--order-discriminative", synth.cfg.order_discriminative, "Emit time-reversed sibling pairs");

  TrainArgs train;
  auto* t = app.add_subcommand("train", "Train the temporal encoder and alignment block");
  t->add_option("--data", train.data, "Data directory (videos.tvem, texts.tvem, manifest.tsv)")->required();
  t->add_option("--out", train.out, "Checkpoint path")->required();
  t->add_option("--config", train.config, "key = value config file");
  t->add_option("--log", train.log, "Training log path (default stdout)");
  t->add_option("--epochs", train.epochs);
  t->add_option("--batch", train.batch);
  t->add_option("--steps", train.steps, "Stop after this many updates");
  t->add_option("--lr", train.lr);
  t->add_option("--w", train.w, "Global/aligned loss weight");
  t->add_option("--dim", train.dim);
  t->add_option("--heads", train.heads);
  t->add_option("--layers", train.layers, "Temporal transformer layers");
  t->add_option("--centers", train.centers, "Shared centers K");
  t->add_option("--frames", train.frames, "Longest frame sequence");
  t->add_option("--tdb-variant", train.tdb_variant, "tdb, tdb-sub, tdb-mlp, tdb-all, meanpool, temporal-transformer");
  t->add_option("--tab-variant", train.tab_variant, "none, base, temporal, transformer, tdb");
  t->add_option("--seed", train.seed, "Seed (overrides TVE_SEED and the config file)");
  t->add_flag("--keep-diff-tokens", train.keep_diff, "Keep difference tokens in the half-rate alignment path");
  t->add_flag("--literal-eq7", train.literal_eq7, "Fix the logit scale at 1");

  EvalArgs eval;
  auto* e = app.add_subcommand("eval", "Retrieval metrics for both directions");
  e->add_option("--checkpoint", eval.checkpoint, "Checkpoint path");
  e->add_option("--data", eval.data, "Data directory")->required();
  e->add_option("--w", eval.w, "Fusion weight of the global similarity");
  e->add_option("--split", eval.split, "Split to evaluate (all pairs if absent)");
  e->add_option("--out", eval.out, "Write the metrics record here instead of stdout");
  e->add_option("--label", eval.label, "Row label in the table");
  e->add_flag("--pessimistic-ties", eval.pessimistic, "Count tied candidates as ranked above the truth");
  e->add_flag("--validate-only", eval.validate_only, "Only validate the data files");

  std::uint64_t gc_seed = 1;
  auto* g = app.add_subcommand("gradcheck", "Finite-difference gradient checks at toy sizes");
  g->add_option("--seed", gc_seed);

  std::string report_in = "-", report_label;
  auto* r = app.add_subcommand("report", "Format a metrics record as a table");
  r->add_option("--in", report_in, "Metrics record file, - for stdin");
  r->add_option("--label", report_label);

  std::vector<const char*> argv;
  for (const std::string& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& ex) {
    return app.exit(ex, out, err) == 0 ? 0 : 2;
  }

  try {
    if (s->parsed()) return run_synth(synth, out);
    if (t->parsed()) return run_train(train, out);
    if (e->parsed()) return run_eval(eval, out);
    if (g->parsed()) {
      const auto entries = run_gradient_suite(gc_seed);
      write_gradcheck_table(out, entries);
      for (const GradCheckEntry& entry : entries) {
        if (!entry.passed()) return 1;
      }
      return 0;
    }
    if (r->parsed()) return run_report(report_in, report_label, out);
  } catch (const CLI::ParseError& ex) {
    return app.exit(ex, out, err) == 0 ? 0 : 2;
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << "\n";
    return 2;
  }
  return 2;
}

}  // namespace tvr
