#pragma once

// Test-only helpers: finite-difference oracle, small random networks,
// in-memory datasets and temp files.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "probident/probident.hpp"

namespace probident::testing {

/// Loss of `net` on (x, y) with dropout masks replayed from `mask_seed`.
inline double replay_loss(const Network& net, const Tensor& x, const Tensor& y, std::uint64_t mask_seed) {
  std::mt19937_64 rng(mask_seed);
  return loss_value(net.loss, y, forward(net, x, true, &rng));
}

/// Central differences of the loss with respect to every parameter entry.
inline Gradients finite_difference_gradients(Network net, const Tensor& x, const Tensor& y,
                                             std::uint64_t mask_seed, double step = 1e-5) {
  Gradients out;
  for (Tensor* p : net.parameters()) {
    Tensor g(p->shape());
    for (std::size_t i = 0; i < p->size(); ++i) {
      const double saved = (*p)[i];
      (*p)[i] = saved + step;
      const double up = replay_loss(net, x, y, mask_seed);
      (*p)[i] = saved - step;
      const double down = replay_loss(net, x, y, mask_seed);
      (*p)[i] = saved;
      g[i] = (up - down) / (2.0 * step);
    }
    out.push_back(std::move(g));
  }
  return out;
}

inline Gradients analytic_gradients(const Network& net, const Tensor& x, const Tensor& y, std::uint64_t mask_seed) {
  std::mt19937_64 rng(mask_seed);
  Gradients g;
  loss_and_gradients(net, x, y, true, &rng, g);
  return g;
}

inline double relative_error(double a, double b, double floor = 1e-6) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

/// Largest relative error over all gradient entries.
inline double max_relative_error(const Gradients& a, const Gradients& b) {
  double worst = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    for (std::size_t i = 0; i < a[k].size(); ++i) worst = std::max(worst, relative_error(a[k][i], b[k][i]));
  }
  return worst;
}

inline Tensor random_tensor(const Shape& shape, std::mt19937_64& rng, double stddev = 1.0) {
  return init_weights(shape, 0.0, stddev, rng);
}

inline Tensor random_one_hot(std::size_t rows, std::size_t width, std::mt19937_64& rng) {
  Tensor t({rows, width}, 0.0);
  std::uniform_int_distribution<std::size_t> pick(0, width - 1);
  for (std::size_t r = 0; r < rows; ++r) t.at(r, pick(rng)) = 1.0;
  return t;
}

/// Narrow layers and larger weights so gradient checks see small, well-scaled networks.
inline NnParams small_params() {
  NnParams p;
  p.hidden_units = 4;
  p.conv_filters = 2;
  p.init_std = 0.5;
  return p;
}

inline RawTable make_table(std::vector<std::vector<double>> features, std::vector<double> targets,
                           std::optional<ImageShape> image = std::nullopt) {
  RawTable t;
  const std::size_t f = features.front().size();
  std::vector<double> flat;
  for (auto& row : features) flat.insert(flat.end(), row.begin(), row.end());
  for (std::size_t j = 0; j < f; ++j) t.feature_names.push_back("x" + std::to_string(j));
  t.features = Tensor({features.size(), f}, std::move(flat));
  t.targets = std::move(targets);
  t.image_shape = image;
  return t;
}

inline RawTable synthetic_table(const SynthSpec& spec, std::size_t n, std::uint64_t seed) {
  auto synth = generate_synthetic(spec, n, seed);
  std::vector<std::vector<double>> features;
  std::vector<double> targets;
  for (auto& row : synth.rows) {
    targets.push_back(row.back());
    row.pop_back();
    features.push_back(row);
  }
  return make_table(std::move(features), std::move(targets), synth.image_shape);
}

struct GradientCase {
  Network net;
  Tensor x;
  Tensor y;
  std::uint64_t mask_seed = 0;
};

/// A random valid network of at most `max_params` parameters with a small
/// batch of inputs and targets. CCE cases use softmax or sigmoid outputs so
/// predictions stay inside the clipping range.
inline GradientCase random_gradient_case(std::mt19937_64& rng, InputKind kind, LossKind loss,
                                         std::size_t max_params = 500) {
  const NnParams params = small_params();
  const InputSpec input = kind == InputKind::flat ? InputSpec{kind, {3}} : InputSpec{kind, {4, 4, 2}};
  const std::span<const LayerCode> codes =
      kind == InputKind::flat ? std::span<const LayerCode>(kFlatLayerCodes) : std::span<const LayerCode>(kAllLayerCodes);
  constexpr std::size_t batch = 3, classes = 3;
  while (true) {
    Chromosome c;
    c.loss = loss;
    c.configuration = random_configuration(rng, codes);
    if (loss == LossKind::cce) {
      c.units = classes;
      c.activation = std::bernoulli_distribution(0.5)(rng) ? Activation::softmax : Activation::sigmoid;
    } else {
      c.units = std::bernoulli_distribution(0.5)(rng) ? 1 : classes;
      c.activation = random_activation(rng);
    }
    BuildResult built = build_network(c, input, params, rng);
    auto* net = std::get_if<Network>(&built);
    if (net == nullptr || net->parameter_count() > max_params) continue;
    // Zero biases put units fed by all-zero activations exactly on the relu
    // kink, where central differences are meaningless.
    for (Tensor* t : net->parameters()) {
      if (t->rank() == 1) *t = random_tensor(t->shape(), rng, 0.5);
    }
    GradientCase gc;
    Shape xs{batch};
    xs.insert(xs.end(), input.sample_shape.begin(), input.sample_shape.end());
    gc.x = random_tensor(xs, rng);
    gc.y = loss == LossKind::cce ? random_one_hot(batch, c.units, rng) : random_tensor({batch, c.units}, rng);
    gc.net = std::move(*net);
    gc.mask_seed = rng();
    return gc;
  }
}

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("probident_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string write(const std::string& name, const std::string& content) const {
    const auto p = path_ / name;
    std::ofstream(p) << content;
    return p.string();
  }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

}  // namespace probident::testing
