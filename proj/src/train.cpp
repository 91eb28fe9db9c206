// Copyright 2026 The descatter Authors
// SPDX-License-Identifier: Apache-2.0

#include "descatter/train.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <numeric>
#include <sstream>

#include "descatter/checkpoint.hpp"
#include "descatter/metrics.hpp"
#include "descatter/rng.hpp"

#if defined(__SSE2__)
#include <pmmintrin.h>
#include <xmmintrin.h>
#endif

namespace descatter {

namespace {

// Flushes subnormal floats to zero for its lifetime. Late in training,
// gradients decay into the subnormal range, where x86 arithmetic is several
// times slower.
class FlushSubnormals {
 public:
#if defined(__SSE2__)
  FlushSubnormals() : saved_(_mm_getcsr()) { _mm_setcsr(saved_ | _MM_FLUSH_ZERO_ON | _MM_DENORMALS_ZERO_ON); }
  ~FlushSubnormals() { _mm_setcsr(saved_); }

 private:
  unsigned int saved_;
#else
  FlushSubnormals() = default;
#endif
  FlushSubnormals(const FlushSubnormals&) = delete;
  FlushSubnormals& operator=(const FlushSubnormals&) = delete;
};

struct Accumulator {
  double mse = 0.0, corr = 0.0, loss = 0.0;
  int count = 0;

  void add(double m, double c, double l) {
    mse += m;
    corr += c;
    loss += l;
    ++count;
  }
  MetricsRecord record(int epoch, const std::string& split, const std::string& channel) const {
    const double k = count > 0 ? static_cast<double>(count) : 1.0;
    return {epoch, split, channel, mse / k, corr / k, loss / k};
  }
};

}  // namespace

void TrainConfig::validate(bool allow_zero_epochs) const {
  if (epochs < (allow_zero_epochs ? 0 : 1)) throw ConfigError("epochs must be >= 1, got " + std::to_string(epochs));
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1, got " + std::to_string(batch_size));
  if (checkpoint_every < 1) {
    throw ConfigError("checkpoint_every must be >= 1, got " + std::to_string(checkpoint_every));
  }
  adam.validate();
}

TrainConfig TrainConfig::from(const KeyValues& kv) {
  TrainConfig c;
  c.epochs = kv.get_int_or("epochs", c.epochs);
  c.batch_size = kv.get_int_or("batch_size", c.batch_size);
  c.adam.lr = kv.get_double_or("lr", c.adam.lr);
  c.adam.beta1 = kv.get_double_or("beta1", c.adam.beta1);
  c.adam.beta2 = kv.get_double_or("beta2", c.adam.beta2);
  c.adam.epsilon = kv.get_double_or("epsilon", c.adam.epsilon);
  c.seed = kv.get_u64_or("seed", c.seed);
  c.checkpoint_every = kv.get_int_or("checkpoint_every", c.checkpoint_every);
  c.deterministic = kv.get_bool_or("deterministic", c.deterministic);
  return c;
}

Tensor<float> stack_images(std::span<const Image* const> images) {
  if (images.empty()) throw ShapeError("cannot stack an empty batch");
  const int n = images.front()->n();
  const std::size_t per = static_cast<std::size_t>(n) * n;
  Tensor<float> out({static_cast<int>(images.size()), 1, n, n});
  for (std::size_t b = 0; b < images.size(); ++b) {
    if (images[b]->n() != n) {
      throw ShapeError("batch mixes image sides " + std::to_string(n) + " and " + std::to_string(images[b]->n()));
    }
    std::copy(images[b]->pixels().begin(), images[b]->pixels().end(), out.values().begin() + b * per);
  }
  return out;
}

std::vector<Image> ModelPredictor::predict(std::span<const Image> speckles) const {
  const FlushSubnormals flush;
  std::vector<Image> out;
  out.reserve(speckles.size());
  const std::size_t step = static_cast<std::size_t>(std::max(batch_, 1));
  for (std::size_t start = 0; start < speckles.size(); start += step) {
    const std::size_t end = std::min(speckles.size(), start + step);
    std::vector<const Image*> ptrs;
    for (std::size_t i = start; i < end; ++i) ptrs.push_back(&speckles[i]);
    const Tensor<float> pred = model_.predict(stack_images(ptrs));
    const int n = pred.dim(2);
    const std::size_t per = static_cast<std::size_t>(n) * n;
    for (std::size_t b = 0; b < ptrs.size(); ++b) {
      auto first = pred.values().begin() + b * per;
      out.emplace_back(n, std::vector<float>(first, first + per));
    }
  }
  return out;
}

Evaluation evaluate(const Predictor& predictor, std::span<const SamplePair> pairs) {
  if (pairs.empty()) throw ConfigError("cannot evaluate an empty set of pairs");
  std::vector<Image> speckles;
  speckles.reserve(pairs.size());
  for (const auto& p : pairs) speckles.push_back(p.speckle);
  Evaluation ev;
  ev.reconstructions = predictor.predict(speckles);
  if (ev.reconstructions.size() != pairs.size()) {
    throw ShapeError("predictor returned " + std::to_string(ev.reconstructions.size()) + " images for " +
                     std::to_string(pairs.size()) + " speckles");
  }
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const Image& recon = ev.reconstructions[i];
    const Image& obj = pairs[i].object;
    SampleMetrics s;
    s.source_id = pairs[i].source_id;
    s.mse = mse(recon, obj);
    const CorrResult c = corr_checked(recon, obj);
    s.corr = c.value;
    s.corr_degenerate = c.degenerate;
    s.loss = bce(recon.pixels(), obj.pixels());
    ev.mean_mse += s.mse;
    ev.mean_corr += s.corr;
    ev.mean_loss += s.loss;
    ev.degenerate += c.degenerate ? 1 : 0;
    ev.samples.push_back(std::move(s));
  }
  const double k = static_cast<double>(pairs.size());
  ev.mean_mse /= k;
  ev.mean_corr /= k;
  ev.mean_loss /= k;
  return ev;
}

Evaluation evaluate(const UNetModel<float>& model, std::span<const SamplePair> pairs) {
  return evaluate(ModelPredictor(model), pairs);
}

std::vector<SamplePair> blend_datasets(std::span<const SamplePair> a, std::span<const SamplePair> b,
                                       std::uint64_t seed) {
  if (!a.empty() && !b.empty() && a.front().object.n() != b.front().object.n()) {
    throw ShapeError("cannot blend datasets with image sides " + std::to_string(a.front().object.n()) + " and " +
                     std::to_string(b.front().object.n()));
  }
  std::vector<SamplePair> out(a.begin(), a.end());
  out.insert(out.end(), b.begin(), b.end());
  RandomStream rng(mix64(seed ^ 0x3c6ef372fe94f82bULL));
  rng.shuffle(std::span<SamplePair>(out));
  return out;
}

std::string checkpoint_path(const std::string& dir, int epoch) {
  char name[32];
  std::snprintf(name, sizeof(name), "epoch_%04d.ckpt", epoch);
  return (std::filesystem::path(dir) / name).string();
}

TrainResult train(UNetModel<float>& model, std::span<const SamplePair> data, std::span<const TestSet> tests,
                  const TrainConfig& cfg, const TrainOptions& options) {
  cfg.validate(true);
  if (data.empty()) throw ConfigError("training dataset is empty");
  const FlushSubnormals flush;
  const int n = model.config().n;
  for (const auto& p : data) {
    if (p.object.n() != n || p.speckle.n() != n) {
      throw ShapeError("training pair side " + std::to_string(p.speckle.n()) + " does not match model n=" +
                       std::to_string(n));
    }
  }
  if (!options.checkpoint_dir.empty()) std::filesystem::create_directories(options.checkpoint_dir);

  Adam<float> adam(cfg.adam);
  TrainResult result;
  std::vector<std::size_t> order(data.size());
  const std::size_t per = static_cast<std::size_t>(n) * n;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    RandomStream rng = derive_rng(cfg.seed, static_cast<std::uint64_t>(epoch));
    rng.shuffle(std::span<std::size_t>(order));

    std::map<std::string, Accumulator> train_acc;
    double loss_sum = 0.0;
    int batches = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      std::vector<const Image*> speckles, objects;
      for (std::size_t i = start; i < end; ++i) {
        speckles.push_back(&data[order[i]].speckle);
        objects.push_back(&data[order[i]].object);
      }
      const Tensor<float> target = stack_images(objects);

      Graph<float> graph;
      Var<float> logits = model.forward_logits(graph, graph.constant(stack_images(speckles)));
      Var<float> loss = bce_with_logits(logits, target);
      const Var<float> out = sigmoid(logits);
      const double value = loss.value()[0];
      if (!std::isfinite(value)) {
        std::ostringstream msg;
        msg << "non-finite loss " << value << " at epoch " << epoch << ", batch " << batches + 1;
        throw NumericError(msg.str());
      }
      graph.backward(loss);
      adam.step(model.param_span());
      ++result.steps;
      loss_sum += value;
      ++batches;

      const auto pred = out.value().values();
      for (std::size_t b = 0; b < objects.size(); ++b) {
        const auto p = pred.subspan(b * per, per);
        const auto t = objects[b]->pixels();
        train_acc[to_string(data[order[start + b]].channel)].add(mse(p, t), corr_checked(p, t).value, bce(p, t));
      }
    }
    result.epoch_loss.push_back(loss_sum / batches);

    std::vector<MetricsRecord> rows;
    for (const auto& [channel, acc] : train_acc) rows.push_back(acc.record(epoch, "train", channel));
    for (const auto& test : tests) {
      if (test.pairs.empty()) continue;
      const Evaluation ev = evaluate(model, test.pairs);
      rows.push_back({epoch, "test", test.label, ev.mean_mse, ev.mean_corr, ev.mean_loss});
    }
    if (!options.checkpoint_dir.empty() && (epoch % cfg.checkpoint_every == 0 || epoch == cfg.epochs)) {
      result.checkpoints.push_back(checkpoint_path(options.checkpoint_dir, epoch));
      save_checkpoint(model, result.checkpoints.back());
    }
    if (options.on_epoch) options.on_epoch(epoch, rows);
    result.history.insert(result.history.end(), rows.begin(), rows.end());
  }
  return result;
}

}  // namespace descatter
