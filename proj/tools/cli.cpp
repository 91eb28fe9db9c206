// Copyright 2026 The descatter Authors
// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"

#include <CLI11.hpp>
#include <filesystem>
#include <limits>

#include "descatter/bytes.hpp"
#include "descatter/checkpoint.hpp"
#include "descatter/dataset.hpp"
#include "descatter/experiment.hpp"
#include "descatter/figures.hpp"
#include "descatter/train.hpp"

namespace descatter::cli {

namespace fs = std::filesystem;

namespace {

constexpr int kIntMax = std::numeric_limits<int>::max();

struct GenArgs {
  std::string channel;
  int n = 64;
  int count = 0;
  std::uint64_t seed = 0;
  std::string source = "glyphs";
  std::string symbols = "digits";
  std::string out;
  std::uint64_t channel_seed = 1;
  double rotation_deg = 0.0;
  double rotation_step = 0.0;
  int shift = 0;
  double corr_len = DiffuserParams{}.corr_len_px;
  double z = DiffuserParams{}.z;
  int modes = MmfParams{}.modes;
};

struct TrainArgs {
  std::vector<std::string> data;
  std::vector<std::string> test;
  int epochs = 0;
  double lr = 1e-3;
  std::uint64_t seed = 0;
  std::string ckpt;
  std::string csv;
  int base_filters = UNetConfig{}.base_filters;
  int depth = UNetConfig{}.depth;
  int batch_size = 4;
  int checkpoint_every = 1;
  bool deterministic = false;
};

struct EvalArgs {
  std::string ckpt, data, csv;
};

struct PredictArgs {
  std::string ckpt, input, out;
};

struct PlotArgs {
  std::string csv, out;
};

struct ExperimentArgs {
  std::string kind, config;
};

std::string under_root(const std::string& name) { return (fs::path(default_data_root()) / name).string(); }

int cmd_gen(const GenArgs& a, std::ostream& out) {
  DatasetManifest m;
  m.n = a.n;
  m.count = a.count;
  m.master_seed = a.seed;
  m.source = a.source;
  m.symbols = a.symbols;
  m.rotation_step_deg = a.rotation_step;
  m.shift_px = a.shift;
  m.channel_config.kind = parse_channel_kind(a.channel);
  m.channel_config.seed = a.channel_seed;
  m.channel_config.diffuser.rotation_deg = a.rotation_deg;
  m.channel_config.diffuser.corr_len_px = a.corr_len;
  m.channel_config.diffuser.z = a.z;
  m.channel_config.mmf.modes = a.modes;
  const std::string dir = a.out.empty() ? under_root(a.channel) : a.out;
  write_dataset(generate_dataset(m), dir);
  out << "wrote " << a.count << " " << m.label() << " pairs to " << dir << "\n";
  return kExitOk;
}

std::vector<TestSet> load_tests(const std::vector<std::string>& dirs) {
  std::vector<TestSet> tests;
  for (const auto& dir : dirs) {
    Dataset ds = read_dataset(dir);
    tests.push_back({ds.manifest.label(), std::move(ds.pairs)});
  }
  return tests;
}

int cmd_train(const TrainArgs& a, std::ostream& out) {
  std::vector<std::string> data_dirs = a.data;
  if (data_dirs.empty()) data_dirs = {under_root("diffuser"), under_root("mmf")};
  if (data_dirs.size() > 2) throw ConfigError("--data takes one or two directories");

  std::vector<Dataset> sets;
  for (const auto& dir : data_dirs) sets.push_back(read_dataset(dir));
  std::vector<SamplePair> pairs;
  if (sets.size() == 2) {
    pairs = blend_datasets(sets[0].pairs, sets[1].pairs, a.seed);
  } else {
    pairs = std::move(sets[0].pairs);
  }
  if (pairs.empty()) throw ConfigError("training data is empty");
  const std::vector<TestSet> tests = load_tests(a.test);

  UNetConfig mc;
  mc.n = pairs.front().object.n();
  mc.depth = a.depth;
  mc.base_filters = a.base_filters;
  TrainConfig tc;
  tc.epochs = a.epochs;
  tc.batch_size = a.batch_size;
  tc.adam.lr = a.lr;
  tc.seed = a.seed;
  tc.checkpoint_every = a.checkpoint_every;
  tc.deterministic = a.deterministic;
  tc.validate();

  const std::string csv = a.csv.empty() ? (fs::path(a.ckpt) / "metrics.csv").string() : a.csv;
  std::vector<MetricsRecord> history;
  TrainOptions opts;
  opts.checkpoint_dir = a.ckpt;
  opts.on_epoch = [&](int epoch, std::span<const MetricsRecord> rows) {
    history.insert(history.end(), rows.begin(), rows.end());
    write_file_atomic(csv, std::string_view(metrics_csv(history)));
    out << "epoch " << epoch << "/" << tc.epochs;
    for (const auto& r : rows) out << "  " << r.split << "/" << r.channel << " corr " << r.corr;
    out << "\n";
  };
  UNetModel<float> model(mc, a.seed);
  train(model, pairs, tests, tc, opts);
  save_checkpoint(model, (fs::path(a.ckpt) / "model.ckpt").string());
  out << "final model: " << (fs::path(a.ckpt) / "model.ckpt").string() << "\nmetrics: " << csv << "\n";
  return kExitOk;
}

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  const Dataset ds = read_dataset(a.data);
  const UNetModel<float> model = load_checkpoint(a.ckpt);
  if (ds.manifest.n != model.config().n) {
    throw ShapeError("dataset n=" + std::to_string(ds.manifest.n) + " does not match model n=" +
                     std::to_string(model.config().n));
  }
  const Evaluation ev = evaluate(model, ds.pairs);
  write_file_atomic(a.csv, std::string_view(evaluation_csv(ev)));
  out << "mean mse " << ev.mean_mse << " corr " << ev.mean_corr << " over " << ev.samples.size() << " samples\n";
  if (ev.degenerate > 0) out << "warning: " << ev.degenerate << " constant reconstructions scored corr 0\n";
  return kExitOk;
}

int cmd_predict(const PredictArgs& a, std::ostream& out) {
  const UNetModel<float> model = load_checkpoint(a.ckpt);
  const SamplePair pair = read_pair_file(a.input);
  if (pair.speckle.n() != model.config().n) {
    throw ShapeError("input side " + std::to_string(pair.speckle.n()) + " does not match model n=" +
                     std::to_string(model.config().n));
  }
  const std::vector<Image> recon = ModelPredictor(model).predict(std::span<const Image>(&pair.speckle, 1));
  write_file_atomic(a.out, encode_pgm(recon.front()));
  out << "wrote " << recon.front().n() << "x" << recon.front().n() << " prediction to " << a.out << "\n";
  return kExitOk;
}

int cmd_plot(const PlotArgs& a, std::ostream& out) {
  const std::vector<char> bytes = read_file(a.csv);
  const auto rows = parse_metrics_csv(std::string(bytes.begin(), bytes.end()));
  write_file_atomic(a.out, std::string_view(metrics_svg(rows)));
  out << "wrote " << a.out << "\n";
  return kExitOk;
}

int cmd_experiment(const ExperimentArgs& a, std::ostream& out) {
  const ExperimentKind kind = parse_experiment_kind(a.kind);
  const KeyValues recipe = KeyValues::load(a.config);
  const KeyValues report = run_experiment(kind, recipe, &out);
  out << report.to_text();
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Simulated scattering-media datasets and U-net reconstruction"};
  app.name("descatter");
  app.require_subcommand(1);

  GenArgs gen;
  auto* g = app.add_subcommand("gen", "Generate a speckle/object dataset");
  g->add_option("--channel", gen.channel, "free, diffuser or mmf")
      ->required()
      ->check(CLI::IsMember({"free", "diffuser", "mmf"}));
  g->add_option("--n", gen.n, "Image side")->check(CLI::Range(8, 4096));
  g->add_option("--count", gen.count, "Number of pairs")->required()->check(CLI::Range(1, kIntMax));
  g->add_option("--seed", gen.seed, "Master seed for source images");
  g->add_option("--source", gen.source, "glyphs or idx:PATH");
  g->add_option("--symbols", gen.symbols, "Glyph alphabet")->check(CLI::IsMember({"digits", "letters"}));
  g->add_option("--out", gen.out, "Output directory (default: $DESCATTER_DATA/<channel>)");
  g->add_option("--channel-seed", gen.channel_seed, "Seed of the scattering medium");
  g->add_option("--rotation-deg", gen.rotation_deg, "Diffuser screen rotation");
  g->add_option("--rotation-step", gen.rotation_step, "Extra rotation per sample index");
  g->add_option("--shift", gen.shift, "Max random placement offset in pixels")->check(CLI::Range(0, 1024));
  g->add_option("--corr-len", gen.corr_len, "Diffuser phase correlation length in pixels");
  g->add_option("--z", gen.z, "Diffuser propagation distance in metres");
  g->add_option("--modes", gen.modes, "MMF mode count (perfect square)");

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Train a U-net on one or two datasets");
  t->add_option("--data", tr.data, "DIR[,DIR2] (default: $DESCATTER_DATA/{diffuser,mmf})")->delimiter(',');
  t->add_option("--test", tr.test, "DIR[,DIR2] evaluated after every epoch")->delimiter(',');
  t->add_option("--epochs", tr.epochs, "Epochs")->required()->check(CLI::Range(1, kIntMax));
  t->add_option("--lr", tr.lr, "Adam learning rate")->check(CLI::PositiveNumber);
  t->add_option("--seed", tr.seed, "Initialization and shuffle seed");
  t->add_option("--ckpt", tr.ckpt, "Checkpoint directory")->required();
  t->add_option("--csv", tr.csv, "Metrics CSV (default: <ckpt>/metrics.csv)");
  t->add_option("--base-filters", tr.base_filters, "Channels of the first block")->check(CLI::Range(1, 1024));
  t->add_option("--depth", tr.depth, "Pooling levels")->check(CLI::Range(1, 12));
  t->add_option("--batch-size", tr.batch_size, "Mini-batch size")->check(CLI::Range(1, kIntMax));
  t->add_option("--checkpoint-every", tr.checkpoint_every, "Epochs between checkpoints")
      ->check(CLI::Range(1, kIntMax));
  t->add_flag("--deterministic", tr.deterministic, "Require bitwise-reproducible training");

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Score a checkpoint on a dataset");
  e->add_option("--ckpt", ev.ckpt, "Checkpoint file")->required();
  e->add_option("--data", ev.data, "Dataset directory")->required();
  e->add_option("--csv", ev.csv, "Output CSV")->required();

  PredictArgs pr;
  auto* p = app.add_subcommand("predict", "Reconstruct one pair file to a PGM");
  p->add_option("--ckpt", pr.ckpt, "Checkpoint file")->required();
  p->add_option("--input", pr.input, "Pair file")->required();
  p->add_option("--out", pr.out, "Output .pgm")->required();

  PlotArgs pl;
  auto* l = app.add_subcommand("plot", "Render a metrics CSV as SVG");
  l->add_option("--csv", pl.csv, "Metrics CSV")->required();
  l->add_option("--out", pl.out, "Output .svg")->required();

  ExperimentArgs ex;
  auto* x = app.add_subcommand("experiment", "Run an experiment recipe");
  x->add_option("--kind", ex.kind, "Experiment")
      ->required()
      ->check(CLI::IsMember({"hybrid", "cross_control", "letters", "rotated_diffuser"}));
  x->add_option("--config", ex.config, "Recipe file (key = value)")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& pe) {
    err << "error: " << pe.what() << "\n";
    const auto subs = app.get_subcommands();
    err << (subs.empty() ? app.help() : subs.front()->help());
    return kExitUsage;
  }

  try {
    if (g->parsed()) return cmd_gen(gen, out);
    if (t->parsed()) return cmd_train(tr, out);
    if (e->parsed()) return cmd_eval(ev, out);
    if (p->parsed()) return cmd_predict(pr, out);
    if (l->parsed()) return cmd_plot(pl, out);
    if (x->parsed()) return cmd_experiment(ex, out);
  } catch (const MissingKeysError& mk) {
    err << "error: " << mk.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& ex2) {
    err << "error: " << ex2.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace descatter::cli
