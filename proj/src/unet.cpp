// Copyright 2026 The descatter Authors
// SPDX-License-Identifier: Apache-2.0

#include "descatter/unet.hpp"

#include <cmath>
#include <sstream>

#include "descatter/kv.hpp"
#include "descatter/rng.hpp"

namespace descatter {

namespace {

bool is_power_of_two(int v) { return v > 0 && (v & (v - 1)) == 0; }

}  // namespace

void UNetConfig::validate() const {
  if (kernel != 3) throw ConfigError("unet: kernel must be 3, got " + std::to_string(kernel));
  if (depth < 1) throw ConfigError("unet: depth must be >= 1, got " + std::to_string(depth));
  if (base_filters < 1) {
    throw ConfigError("unet: base_filters must be >= 1, got " + std::to_string(base_filters));
  }
  if (!is_power_of_two(n)) throw ConfigError("unet: n must be a power of two, got " + std::to_string(n));
  if (depth >= 30 || (n >> depth) < 1) {
    throw ConfigError("unet: n must be divisible by 2^depth (n=" + std::to_string(n) +
                      ", depth=" + std::to_string(depth) + ")");
  }
}

std::map<std::string, std::string> UNetConfig::fields() const {
  return {{"n", std::to_string(n)},
          {"depth", std::to_string(depth)},
          {"base_filters", std::to_string(base_filters)},
          {"kernel", std::to_string(kernel)}};
}

std::string UNetConfig::to_text() const {
  std::ostringstream os;
  os << "arch = unet\n"
     << "n = " << n << "\n"
     << "depth = " << depth << "\n"
     << "base_filters = " << base_filters << "\n"
     << "kernel = " << kernel << "\n";
  return os.str();
}

UNetConfig UNetConfig::from_text(const std::string& text) {
  const KeyValues kv = KeyValues::parse(text);
  if (kv.get_or("arch", "unet") != "unet") throw ConfigError("unet: unknown arch '" + kv.get("arch") + "'");
  UNetConfig c;
  c.n = kv.get_int("n");
  c.depth = kv.get_int("depth");
  c.base_filters = kv.get_int("base_filters");
  c.kernel = kv.get_int("kernel");
  return c;
}

template <typename T>
UNetModel<T>::UNetModel(UNetConfig config) : config_(config) {
  config_.validate();
  declare_params();
}

template <typename T>
UNetModel<T> UNetModel<T>::zeroed(UNetConfig config) {
  return UNetModel(config);
}

template <typename T>
UNetModel<T>::UNetModel(UNetConfig config, std::uint64_t seed) : UNetModel(config) {
  RandomStream rng(mix64(seed));
  for (auto& p : params_) {
    if (p.value.rank() != 4) continue;  // biases stay zero
    const int fan_in = p.value.dim(1) * p.value.dim(2) * p.value.dim(3);
    const double bound = std::sqrt(6.0 / fan_in);
    for (auto& v : p.value.storage()) v = static_cast<T>(rng.uniform(-bound, bound));
  }
}

template <typename T>
void UNetModel<T>::declare_params() {
  const int k = config_.kernel;
  auto conv = [&](const std::string& name, int cin, int cout, int ksize) {
    params_.emplace_back(name + ".weight", Tensor<T>({cout, cin, ksize, ksize}));
    params_.emplace_back(name + ".bias", Tensor<T>({cout}));
  };
  int cin = 1;
  for (int i = 0; i < config_.depth; ++i) {
    const int c = config_.channels(i);
    conv("enc" + std::to_string(i) + ".conv1", cin, c, k);
    conv("enc" + std::to_string(i) + ".conv2", c, c, k);
    cin = c;
  }
  const int cb = config_.channels(config_.depth);
  conv("bottleneck.conv1", cin, cb, k);
  conv("bottleneck.conv2", cb, cb, k);
  for (int i = config_.depth - 1; i >= 0; --i) {
    const int c = config_.channels(i);
    const std::string pre = "dec" + std::to_string(i);
    conv(pre + ".up", config_.channels(i + 1), c, k);
    conv(pre + ".conv1", 2 * c, c, k);
    conv(pre + ".conv2", c, c, k);
  }
  conv("head", config_.channels(0), 1, 1);
}

template <typename T>
std::size_t UNetModel<T>::parameter_count() const {
  std::size_t total = 0;
  for (const auto& p : params_) total += p.value.numel();
  return total;
}

template <typename T>
Parameter<T>* UNetModel<T>::find(const std::string& name) {
  for (auto& p : params_) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

template <typename T>
void UNetModel<T>::check_input(const Shape& shape) const {
  if (shape.size() != 4 || shape[1] != 1 || shape[2] != config_.n || shape[3] != config_.n) {
    throw ShapeError("unet: expected input [B,1," + std::to_string(config_.n) + "," +
                     std::to_string(config_.n) + "], got " + shape_to_string(shape));
  }
}

template <typename T>
template <typename Leaf>
Var<T> UNetModel<T>::run([[maybe_unused]] Graph<T>& g, Var<T> x, Leaf&& leaf,
                         std::vector<SkipRecord>* skips) const {
  check_input(x.shape());
  const int k = config_.kernel;
  const int pad = (k - 1) / 2;
  std::size_t next = 0;
  auto conv = [&](Var<T> in, int padding) {
    Var<T> w = leaf(next++);
    Var<T> b = leaf(next++);
    return conv2d(in, w, b, padding);
  };

  if (skips) skips->clear();
  std::vector<Var<T>> encoder;
  for (int i = 0; i < config_.depth; ++i) {
    x = relu(conv(x, pad));
    x = relu(conv(x, pad));
    encoder.push_back(x);
    x = maxpool2d(x);
  }
  x = relu(conv(x, pad));
  x = relu(conv(x, pad));
  for (int i = config_.depth - 1; i >= 0; --i) {
    x = conv(upsample_nearest2x(x), pad);
    const Var<T>& skip = encoder[static_cast<std::size_t>(i)];
    if (skips) skips->push_back({i, skip.shape()[1], x.shape()[1]});
    x = concat_channels(skip, x);
    x = relu(conv(x, pad));
    x = relu(conv(x, pad));
  }
  return conv(x, 0);
}

template <typename T>
Var<T> UNetModel<T>::forward_logits(Graph<T>& graph, Var<T> input) {
  return run(graph, input, [&](std::size_t i) { return graph.parameter(params_[i]); },
             &skips_);
}

template <typename T>
Var<T> UNetModel<T>::forward(Graph<T>& graph, Var<T> input) {
  return sigmoid(forward_logits(graph, input));
}

template <typename T>
Tensor<T> UNetModel<T>::predict(const Tensor<T>& batch) const {
  Graph<T> graph;
  Var<T> out = sigmoid(run(graph, graph.constant(batch),
                           [&](std::size_t i) { return graph.constant(params_[i].value); }, nullptr));
  return out.value();
}

template class UNetModel<float>;
template class UNetModel<double>;

}  // namespace descatter
