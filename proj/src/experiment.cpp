// Copyright 2026 The descatter Authors
// SPDX-License-Identifier: Apache-2.0

#include "descatter/experiment.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <map>
#include <memory>

#include "descatter/bytes.hpp"
#include "descatter/checkpoint.hpp"
#include "descatter/figures.hpp"

namespace descatter {

namespace fs = std::filesystem;

namespace {

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& s : items) out += (out.empty() ? "" : ", ") + s;
  return out;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

ChannelConfig channel_from(const KeyValues& kv, const std::string& prefix, ChannelKind kind,
                           std::uint64_t default_seed) {
  KeyValues sub;
  sub.set("channel.kind", to_string(kind));
  sub.set("channel.seed", std::to_string(default_seed));
  for (const auto& [key, value] : kv.entries()) {
    if (key.rfind(prefix + ".", 0) == 0) {
      const std::string rest = key.substr(prefix.size() + 1);
      sub.set(rest == "seed" ? "channel.seed" : "channel." + prefix + "." + rest, value);
    }
  }
  return ChannelConfig::from(sub);
}

void write_text(const std::string& path, const std::string& text) {
  write_file_atomic(path, std::string_view(text));
}

std::string manifest_header(DatasetManifest m) {
  m.source_ids.clear();
  m.checksums.clear();
  return m.to_text();
}

const std::string& dataset_name(ChannelKind kind) {
  static const std::string d = "diffuser", m = "mmf";
  return kind == ChannelKind::mmf ? m : d;
}

struct Context {
  ExperimentKind kind;
  ExperimentRecipe recipe;
  std::string fingerprint;
  std::ostream* log;

  fs::path data_dir() const { return fs::path(recipe.out_dir) / "data"; }
  fs::path stage_dir(const std::string& name) const { return fs::path(recipe.out_dir) / name; }

  Dataset dataset(const DatasetManifest& m, const std::string& name) const {
    return ensure_dataset(m, (data_dir() / name).string(), log);
  }
};

void epoch_logger(std::ostream* log, const std::string& tag, int epochs, TrainOptions& opts) {
  if (!log) return;
  auto start = std::make_shared<std::chrono::steady_clock::time_point>(std::chrono::steady_clock::now());
  opts.on_epoch = [log, tag, epochs, start](int epoch, std::span<const MetricsRecord> rows) {
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - *start).count();
    *log << "[" << tag << "] epoch " << epoch << "/" << epochs;
    for (const auto& r : rows) {
      if (r.split == "test") *log << "  " << r.channel << " corr " << r.corr << " mse " << r.mse;
    }
    *log << "  (" << static_cast<int>(secs) << " s)\n";
    log->flush();
  };
}

/// Per-channel epoch-1, final and best test values of a training history.
void summarize(const std::vector<MetricsRecord>& history, KeyValues& report) {
  std::map<std::string, std::vector<const MetricsRecord*>> by_channel;
  for (const auto& r : history) {
    if (r.split == "test") by_channel[r.channel].push_back(&r);
  }
  for (const auto& [channel, rows] : by_channel) {
    const MetricsRecord* best_corr = rows.front();
    const MetricsRecord* best_mse = rows.front();
    for (const auto* r : rows) {
      if (r->corr > best_corr->corr) best_corr = r;
      if (r->mse < best_mse->mse) best_mse = r;
    }
    report.set("epoch1." + channel + ".corr", format_double(rows.front()->corr));
    report.set("epoch1." + channel + ".mse", format_double(rows.front()->mse));
    report.set("final." + channel + ".corr", format_double(rows.back()->corr));
    report.set("final." + channel + ".mse", format_double(rows.back()->mse));
    report.set("best." + channel + ".corr", format_double(best_corr->corr));
    report.set("best." + channel + ".corr_epoch", std::to_string(best_corr->epoch));
    report.set("best." + channel + ".mse", format_double(best_mse->mse));
    report.set("best." + channel + ".mse_epoch", std::to_string(best_mse->epoch));
  }
}

TrainResult train_stage(const Context& ctx, const std::string& tag, UNetModel<float>& model,
                        std::span<const SamplePair> data, std::span<const TestSet> tests, int epochs,
                        const fs::path& dir) {
  TrainConfig cfg = ctx.recipe.train;
  cfg.epochs = epochs;
  TrainOptions opts;
  opts.checkpoint_dir = (dir / "checkpoints").string();
  epoch_logger(ctx.log, tag, epochs, opts);
  TrainResult result = train(model, data, tests, cfg, opts);
  write_text((dir / "metrics.csv").string(), metrics_csv(result.history));
  write_text((dir / "metrics.svg").string(), metrics_svg(result.history));
  save_checkpoint(model, (dir / "model.ckpt").string());
  return result;
}

void write_predictions(const fs::path& dir, const Evaluation& ev) {
  fs::create_directories(dir);
  for (std::size_t i = 0; i < ev.reconstructions.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "pred_%03zu.pgm", i);
    write_file_atomic((dir / name).string(), encode_pgm(ev.reconstructions[i]));
  }
}

UNetModel<float> load_hybrid(const Context& ctx) {
  const fs::path path = ctx.stage_dir("hybrid") / "model.ckpt";
  if (!fs::exists(path)) {
    throw ConfigError("missing " + path.string() + ": run the hybrid experiment with this recipe first");
  }
  return load_checkpoint(path.string(), ctx.recipe.model);
}

KeyValues run_hybrid(const Context& ctx) {
  const ExperimentRecipe& r = ctx.recipe;
  const Dataset train_d = ctx.dataset(r.train_manifest(ChannelKind::diffuser), "train_diffuser");
  const Dataset train_m = ctx.dataset(r.train_manifest(ChannelKind::mmf), "train_mmf");
  const std::vector<TestSet> tests = {
      {"diffuser", ctx.dataset(r.test_manifest(ChannelKind::diffuser), "test_diffuser").pairs},
      {"mmf", ctx.dataset(r.test_manifest(ChannelKind::mmf), "test_mmf").pairs}};
  const std::vector<SamplePair> blended = blend_datasets(train_d.pairs, train_m.pairs, r.train.seed);

  const fs::path dir = ctx.stage_dir("hybrid");
  UNetModel<float> model(r.model, r.train.seed);
  const TrainResult result = train_stage(ctx, "hybrid", model, blended, tests, r.train.epochs, dir);

  KeyValues report;
  report.set("train_pairs", std::to_string(blended.size()));
  report.set("epochs", std::to_string(r.train.epochs));
  report.set("steps", std::to_string(result.steps));
  report.set("parameters", std::to_string(model.parameter_count()));
  report.set("model", (dir / "model.ckpt").string());
  report.set("metrics", (dir / "metrics.csv").string());
  report.set("plot", (dir / "metrics.svg").string());
  report.set("checkpoint.count", std::to_string(result.checkpoints.size()));
  for (std::size_t i = 0; i < result.checkpoints.size(); ++i) {
    report.set("checkpoint." + std::to_string(i + 1), result.checkpoints[i]);
  }
  summarize(result.history, report);
  return report;
}

KeyValues run_cross_control(const Context& ctx) {
  const ExperimentRecipe& r = ctx.recipe;
  const int epochs = r.control_epochs > 0 ? r.control_epochs : r.train.epochs;
  const std::vector<TestSet> tests = {
      {"diffuser", ctx.dataset(r.test_manifest(ChannelKind::diffuser), "test_diffuser").pairs},
      {"mmf", ctx.dataset(r.test_manifest(ChannelKind::mmf), "test_mmf").pairs}};
  KeyValues report;
  report.set("epochs", std::to_string(epochs));
  for (ChannelKind train_kind : {ChannelKind::diffuser, ChannelKind::mmf}) {
    const std::string& name = dataset_name(train_kind);
    const Dataset data = ctx.dataset(r.train_manifest(train_kind), "train_" + name);
    const fs::path dir = ctx.stage_dir("cross_control") / name;
    UNetModel<float> model(r.model, r.train.seed);
    train_stage(ctx, "control-" + name, model, data.pairs, tests, epochs, dir);
    report.set("model." + name, (dir / "model.ckpt").string());
    for (const auto& test : tests) {
      const Evaluation ev = evaluate(model, test.pairs);
      report.set("grid." + name + "." + test.label + ".corr", format_double(ev.mean_corr));
      report.set("grid." + name + "." + test.label + ".mse", format_double(ev.mean_mse));
    }
  }
  return report;
}

KeyValues evaluate_against_aligned(const Context& ctx, const std::string& label, const DatasetManifest& manifest,
                                   const std::string& dataset, const std::string& aligned_label) {
  const ExperimentRecipe& r = ctx.recipe;
  const UNetModel<float> model = load_hybrid(ctx);
  const Dataset target = ctx.dataset(manifest, dataset);
  const Dataset aligned = ctx.dataset(r.test_manifest(ChannelKind::diffuser), "test_diffuser");
  const Evaluation ev = evaluate(model, target.pairs);
  const Evaluation ref = evaluate(model, aligned.pairs);
  write_predictions(ctx.stage_dir(to_string(ctx.kind)) / "predictions", ev);

  KeyValues report;
  report.set("model", (ctx.stage_dir("hybrid") / "model.ckpt").string());
  report.set(label + ".corr", format_double(ev.mean_corr));
  report.set(label + ".mse", format_double(ev.mean_mse));
  report.set(label + ".degenerate", std::to_string(ev.degenerate));
  report.set(aligned_label + ".corr", format_double(ref.mean_corr));
  report.set(aligned_label + ".mse", format_double(ref.mean_mse));
  report.set("ratio", format_double(ref.mean_corr != 0.0 ? ev.mean_corr / ref.mean_corr : 0.0));
  for (std::size_t i = 0; i < ev.samples.size(); ++i) {
    const std::string key = "sample." + std::to_string(i);
    report.set(key + ".source", ev.samples[i].source_id);
    report.set(key + ".corr", format_double(ev.samples[i].corr));
    report.set(key + ".mse", format_double(ev.samples[i].mse));
  }
  return report;
}

}  // namespace

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::hybrid: return "hybrid";
    case ExperimentKind::cross_control: return "cross_control";
    case ExperimentKind::letters: return "letters";
    case ExperimentKind::rotated_diffuser: return "rotated_diffuser";
  }
  return "?";
}

ExperimentKind parse_experiment_kind(const std::string& text) {
  for (auto k : {ExperimentKind::hybrid, ExperimentKind::cross_control, ExperimentKind::letters,
                 ExperimentKind::rotated_diffuser}) {
    if (to_string(k) == text) return k;
  }
  throw ConfigError("unknown experiment kind '" + text +
                    "' (expected hybrid, cross_control, letters or rotated_diffuser)");
}

MissingKeysError::MissingKeysError(std::vector<std::string> keys)
    : ConfigError("recipe is missing required keys: " + join(keys)), keys_(std::move(keys)) {}

ExperimentRecipe ExperimentRecipe::from(const KeyValues& kv, ExperimentKind kind) {
  std::vector<std::string> missing;
  for (const char* key : {"out_dir", "epochs"}) {
    if (!kv.has(key)) missing.emplace_back(key);
  }
  if (kind == ExperimentKind::letters && !kv.has("letter_source")) missing.emplace_back("letter_source");
  if (!missing.empty()) throw MissingKeysError(std::move(missing));

  ExperimentRecipe r;
  r.out_dir = kv.get("out_dir");
  r.n = kv.get_int_or("n", r.n);
  r.train_count = kv.get_int_or("train_count", r.train_count);
  r.test_count = kv.get_int_or("test_count", r.test_count);
  r.data_seed = kv.get_u64_or("data_seed", r.data_seed);
  r.test_seed = kv.get_u64_or("test_seed", r.test_seed);
  r.shift_px = kv.get_int_or("shift_px", r.shift_px);
  r.diffuser = channel_from(kv, "diffuser", ChannelKind::diffuser, 11);
  r.mmf = channel_from(kv, "mmf", ChannelKind::mmf, 12);
  r.letter_source = kv.get_or("letter_source", "");
  r.rotation_step_deg = kv.get_double_or("rotation_step_deg", r.rotation_step_deg);
  r.model.n = r.n;
  r.model.depth = kv.get_int_or("depth", r.model.depth);
  r.model.base_filters = kv.get_int_or("base_filters", r.model.base_filters);
  r.train = TrainConfig::from(kv);
  r.control_epochs = kv.get_int_or("control_epochs", 0);

  if (r.train_count < 1 || r.test_count < 1) throw ConfigError("train_count and test_count must be >= 1");
  if (r.control_epochs < 0) throw ConfigError("control_epochs must be >= 0");
  if (!r.letter_source.empty() && r.letter_source != "glyphs" && r.letter_source.rfind("idx:", 0) != 0) {
    throw ConfigError("letter_source must be glyphs or idx:PATH, got '" + r.letter_source + "'");
  }
  r.model.validate();
  r.train.validate();
  r.diffuser.validate(r.n);
  r.mmf.validate(r.n);
  return r;
}

DatasetManifest ExperimentRecipe::train_manifest(ChannelKind channel) const {
  DatasetManifest m;
  m.n = n;
  m.count = train_count;
  m.channel_config = channel == ChannelKind::mmf ? mmf : diffuser;
  // Distinct source objects per channel.
  m.master_seed = channel == ChannelKind::mmf ? data_seed + 1 : data_seed;
  m.shift_px = shift_px;
  return m;
}

DatasetManifest ExperimentRecipe::test_manifest(ChannelKind channel) const {
  DatasetManifest m = train_manifest(channel);
  m.count = test_count;
  m.master_seed = test_seed;
  return m;
}

DatasetManifest ExperimentRecipe::letters_manifest() const {
  DatasetManifest m = test_manifest(ChannelKind::diffuser);
  if (letter_source == "glyphs") {
    m.symbols = "letters";
  } else {
    m.source = letter_source;
  }
  m.master_seed = test_seed + 1;
  return m;
}

DatasetManifest ExperimentRecipe::rotated_manifest() const {
  DatasetManifest m = test_manifest(ChannelKind::diffuser);
  m.rotation_step_deg = rotation_step_deg;
  return m;
}

Dataset ensure_dataset(const DatasetManifest& manifest, const std::string& dir, std::ostream* log) {
  if (fs::exists(fs::path(dir) / "manifest")) {
    try {
      Dataset existing = read_dataset(dir);
      if (manifest_header(existing.manifest) == manifest_header(manifest)) return existing;
    } catch (const Error&) {
      // Unreadable or stale: regenerate below.
    }
  }
  if (log) *log << "generating " << manifest.count << " " << manifest.label() << " pairs into " << dir << "\n";
  Dataset ds = generate_dataset(manifest);
  write_dataset(ds, dir);
  return ds;
}

KeyValues run_experiment(ExperimentKind kind, const KeyValues& recipe, std::ostream* log) {
  Context ctx{kind, ExperimentRecipe::from(recipe, kind), hex64(fnv1a64(recipe.to_text())), log};
  const fs::path dir = ctx.stage_dir(to_string(kind));
  fs::create_directories(dir);

  KeyValues body;
  switch (kind) {
    case ExperimentKind::hybrid: body = run_hybrid(ctx); break;
    case ExperimentKind::cross_control: body = run_cross_control(ctx); break;
    case ExperimentKind::letters:
      body = evaluate_against_aligned(ctx, "letters", ctx.recipe.letters_manifest(), "test_letters", "digits");
      break;
    case ExperimentKind::rotated_diffuser:
      body = evaluate_against_aligned(ctx, "rotated", ctx.recipe.rotated_manifest(), "test_rotated", "aligned");
      break;
  }
  KeyValues report;
  report.set("kind", to_string(kind));
  report.set("recipe_fingerprint", ctx.fingerprint);
  for (const auto& [key, value] : body.entries()) report.set(key, value);
  write_text((dir / "report.txt").string(), report.to_text());
  return report;
}

}  // namespace descatter
