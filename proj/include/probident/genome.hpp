#pragma once

#include <cctype>
#include <charconv>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "probident/data.hpp"
#include "probident/nn.hpp"

namespace probident {

enum class LayerCode : std::uint8_t { convolution = 0, fully_connected = 1, dropout = 2, max_pooling = 3 };

inline constexpr bool is_spatial(LayerCode c) noexcept {
  return c == LayerCode::convolution || c == LayerCode::max_pooling;
}

using Configuration = std::vector<LayerCode>;

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();
inline constexpr std::size_t kMinConfigLength = 5;
inline constexpr std::size_t kMaxConfigLength = 15;

/// Gene positions, in chromosome order.
enum class Gene : std::size_t { loss = 0, units = 1, activation = 2, configuration = 3 };
inline constexpr std::size_t kGeneCount = 4;

struct Chromosome {
  LossKind loss = LossKind::mse;
  std::size_t units = 1;
  Activation activation = Activation::linear;
  Configuration configuration;
  double fitness = kInfinity;

  /// Gene equality; fitness is not part of the genotype.
  bool same_genes(const Chromosome& o) const {
    return loss == o.loss && units == o.units && activation == o.activation && configuration == o.configuration;
  }
};

inline constexpr Activation kActivations[] = {Activation::linear, Activation::relu, Activation::sigmoid,
                                              Activation::softmax};

inline constexpr LayerCode kAllLayerCodes[] = {LayerCode::convolution, LayerCode::fully_connected,
                                               LayerCode::dropout, LayerCode::max_pooling};
inline constexpr LayerCode kFlatLayerCodes[] = {LayerCode::fully_connected, LayerCode::dropout};

/// Value sets the genes are drawn from. Flat inputs draw configurations from
/// the non-spatial codes only, unless `all_codes_on_flat` is set.
struct GeneSpace {
  std::size_t unique_count = 1;
  std::span<const LayerCode> layer_codes = kAllLayerCodes;

  static GeneSpace for_input(std::size_t unique_count, InputKind kind, bool all_codes_on_flat = false) {
    if (kind == InputKind::flat && !all_codes_on_flat) return {unique_count, kFlatLayerCodes};
    return {unique_count, kAllLayerCodes};
  }
};

inline Configuration random_configuration(std::mt19937_64& rng,
                                          std::span<const LayerCode> codes = kAllLayerCodes) {
  std::uniform_int_distribution<std::size_t> length(kMinConfigLength, kMaxConfigLength);
  std::uniform_int_distribution<std::size_t> pick(0, codes.size() - 1);
  Configuration config(length(rng));
  for (auto& c : config) c = codes[pick(rng)];
  return config;
}

inline LossKind random_loss(std::mt19937_64& rng) {
  return std::bernoulli_distribution(0.5)(rng) ? LossKind::cce : LossKind::mse;
}

inline std::size_t random_units(std::size_t unique_count, std::mt19937_64& rng) {
  return std::bernoulli_distribution(0.5)(rng) ? unique_count : 1;
}

inline Activation random_activation(std::mt19937_64& rng) {
  return kActivations[std::uniform_int_distribution<std::size_t>(0, 3)(rng)];
}

inline Chromosome random_chromosome(const GeneSpace& space, std::mt19937_64& rng) {
  if (space.unique_count < 1) throw std::invalid_argument("random_chromosome: U must be >= 1");
  Chromosome c;
  c.loss = random_loss(rng);
  c.units = random_units(space.unique_count, rng);
  c.activation = random_activation(rng);
  c.configuration = random_configuration(rng, space.layer_codes);
  return c;
}

inline Chromosome random_chromosome(std::size_t unique_count, std::mt19937_64& rng) {
  return random_chromosome(GeneSpace{unique_count}, rng);
}

// ---------------------------------------------------------------------------
// Text form: "Units: 1, Loss: MSE, Activation: relu, Configuration: [1, 2, 1, 1]"

inline std::string describe_configuration(const Configuration& config) {
  std::string s = "[";
  for (std::size_t i = 0; i < config.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(static_cast<int>(config[i]));
  }
  return s + "]";
}

inline std::string describe(const Chromosome& c) {
  return "Units: " + std::to_string(c.units) + ", Loss: " + std::string(to_string(c.loss)) +
         ", Activation: " + std::string(to_string(c.activation)) +
         ", Configuration: " + describe_configuration(c.configuration);
}

/// Inverse of describe(). Whitespace around tokens is ignored.
inline Chromosome parse_chromosome(std::string_view text) {
  auto fail = [&](const std::string& why) -> Chromosome {
    throw std::invalid_argument("parse_chromosome: " + why + " in '" + std::string(text) + "'");
  };
  auto field = [&](std::string_view key) -> std::string_view {
    const auto pos = text.find(key);
    if (pos == std::string_view::npos) fail("missing '" + std::string(key) + "'");
    std::string_view rest = text.substr(pos + key.size());
    const auto colon = rest.find(':');
    if (colon == std::string_view::npos) fail("missing ':' after " + std::string(key));
    rest = rest.substr(colon + 1);
    const auto end = key == "Configuration" ? rest.find(']') + 1 : rest.find(',');
    return detail::trim(rest.substr(0, end));
  };

  Chromosome c;
  const auto units = field("Units");
  auto [ptr, ec] = std::from_chars(units.data(), units.data() + units.size(), c.units);
  if (ec != std::errc{} || ptr != units.data() + units.size() || c.units == 0) fail("bad unit count");
  const auto loss = parse_loss(field("Loss"));
  if (!loss) fail("unknown loss");
  c.loss = *loss;
  const auto act = parse_activation(field("Activation"));
  if (!act) fail("unknown activation");
  c.activation = *act;

  auto list = field("Configuration");
  if (list.size() < 2 || list.front() != '[' || list.back() != ']') fail("configuration must be a [..] list");
  list = list.substr(1, list.size() - 2);
  std::size_t start = 0;
  for (std::size_t i = 0; i <= list.size(); ++i) {
    if (i == list.size() || list[i] == ',') {
      auto item = detail::trim(list.substr(start, i - start));
      int code = -1;
      auto [p, e] = std::from_chars(item.data(), item.data() + item.size(), code);
      if (e != std::errc{} || p != item.data() + item.size() || code < 0 || code > 3) fail("bad layer code");
      c.configuration.push_back(static_cast<LayerCode>(code));
      start = i + 1;
    }
  }
  return c;
}

// ---------------------------------------------------------------------------
// Chromosome -> network

enum class InvalidReason { spatial_on_flat, cce_single_output, spatial_after_flatten, spatial_too_small };

inline constexpr std::string_view to_string(InvalidReason r) noexcept {
  switch (r) {
    case InvalidReason::spatial_on_flat: return "spatial-on-flat";
    case InvalidReason::cce_single_output: return "cce-single-output";
    case InvalidReason::spatial_after_flatten: return "spatial-after-flatten";
    case InvalidReason::spatial_too_small: return "spatial-too-small";
  }
  return "?";
}

struct InvalidNetwork {
  InvalidReason reason;
  std::size_t position = 0;  // configuration index that triggered it, where applicable
};

using BuildResult = std::variant<Network, InvalidNetwork>;

/// Per-sample input description needed to compile a chromosome.
struct InputSpec {
  InputKind kind = InputKind::flat;
  Shape sample_shape;  // {F} or {H, W, C}
};

/// Instantiates the configuration in order, inserting a flatten step before
/// the first fully-connected layer that follows spatial data, then appends
/// the output layer. Weights are drawn from `rng`.
inline BuildResult build_network(const Chromosome& c, const InputSpec& input, const NnParams& p,
                                 std::mt19937_64& rng) {
  if (c.loss == LossKind::cce && c.units == 1) return InvalidNetwork{InvalidReason::cce_single_output};

  // Validate before drawing any weights.
  Shape shape = input.sample_shape;
  bool spatial = input.kind == InputKind::image;
  bool flattened = false;
  for (std::size_t i = 0; i < c.configuration.size(); ++i) {
    const LayerCode code = c.configuration[i];
    if (is_spatial(code)) {
      if (input.kind == InputKind::flat) return InvalidNetwork{InvalidReason::spatial_on_flat, i};
      if (flattened) return InvalidNetwork{InvalidReason::spatial_after_flatten, i};
      if (shape[0] < kKernelSize || shape[1] < kKernelSize) return InvalidNetwork{InvalidReason::spatial_too_small, i};
      shape[0] -= kKernelSize - 1;
      shape[1] -= kKernelSize - 1;
    } else if (code == LayerCode::fully_connected && spatial) {
      spatial = false;
      flattened = true;
    }
  }

  Network net;
  net.input_shape = input.sample_shape;
  net.loss = c.loss;
  shape = input.sample_shape;
  auto flatten = [&] {
    net.layers.emplace_back(Flatten{});
    shape = Shape{shape_product(shape)};
  };
  for (const LayerCode code : c.configuration) {
    switch (code) {
      case LayerCode::convolution:
        net.layers.emplace_back(make_convolution(shape[2], p.conv_filters, p, rng));
        shape = Shape{shape[0] - 1, shape[1] - 1, p.conv_filters};
        break;
      case LayerCode::max_pooling:
        net.layers.emplace_back(MaxPooling{});
        shape = Shape{shape[0] - 1, shape[1] - 1, shape[2]};
        break;
      case LayerCode::dropout:
        net.layers.emplace_back(Dropout{p.keep_probability});
        break;
      case LayerCode::fully_connected:
        if (shape.size() != 1) flatten();
        net.layers.emplace_back(make_dense(shape[0], p.hidden_units, Activation::relu, false, p, rng));
        shape = Shape{p.hidden_units};
        break;
    }
  }
  if (shape.size() != 1) flatten();
  net.layers.emplace_back(make_dense(shape[0], c.units, c.activation, true, p, rng));
  output_shape(net);  // throws on an internal inconsistency
  return net;
}

inline InputSpec input_spec(const Dataset& ds) { return {ds.input_kind, ds.sample_shape()}; }

inline BuildResult build_network(const Chromosome& c, const Dataset& ds, const NnParams& p, std::mt19937_64& rng) {
  return build_network(c, input_spec(ds), p, rng);
}

}  // namespace probident
