#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <random>

#include "appendix.hpp"
#include "probident/genome.hpp"
#include "support.hpp"

using namespace probident;
using namespace probident::testing;

namespace {
Configuration codes(std::initializer_list<int> list) {
  Configuration c;
  for (int v : list) c.push_back(static_cast<LayerCode>(v));
  return c;
}

// |observed - expected| within 3 standard deviations of a binomial count.
void expect_binomial(std::size_t count, std::size_t trials, double p, const std::string& what) {
  const double mean = trials * p;
  const double sd = std::sqrt(trials * p * (1 - p));
  EXPECT_LE(std::abs(static_cast<double>(count) - mean), 3 * sd) << what << ": " << count << " of " << trials;
}
}  // namespace

TEST(Chromosome, DefaultFitnessIsInfinity) {
  EXPECT_TRUE(std::isinf(Chromosome{}.fitness));
}

TEST(RandomConfiguration, LengthAndCodeFrequencies) {
  std::mt19937_64 rng(1);
  std::array<std::size_t, 16> lengths{};
  std::array<std::size_t, 4> code_counts{};
  std::size_t total_codes = 0;
  constexpr std::size_t draws = 10000;
  for (std::size_t i = 0; i < draws; ++i) {
    const Configuration c = random_configuration(rng);
    ASSERT_GE(c.size(), kMinConfigLength);
    ASSERT_LE(c.size(), kMaxConfigLength);
    ++lengths[c.size()];
    for (LayerCode code : c) ++code_counts[static_cast<std::size_t>(code)];
    total_codes += c.size();
  }
  EXPECT_GT(lengths[5], 0u);
  EXPECT_GT(lengths[15], 0u);
  for (std::size_t len = 5; len <= 15; ++len) expect_binomial(lengths[len], draws, 1.0 / 11, "length");
  for (std::size_t code = 0; code < 4; ++code) expect_binomial(code_counts[code], total_codes, 0.25, "code");
}

TEST(RandomConfiguration, DeterministicAndRestrictedAlphabet) {
  std::mt19937_64 a(9), b(9);
  EXPECT_EQ(random_configuration(a), random_configuration(b));
  std::mt19937_64 rng(2);
  for (int i = 0; i < 1000; ++i) {
    for (LayerCode code : random_configuration(rng, kFlatLayerCodes)) EXPECT_FALSE(is_spatial(code));
  }
}

TEST(RandomChromosome, GeneFrequencies) {
  std::mt19937_64 rng(3);
  constexpr std::size_t draws = 10000, u = 7;
  std::size_t cce = 0, u_units = 0;
  std::array<std::size_t, 4> acts{};
  for (std::size_t i = 0; i < draws; ++i) {
    const Chromosome c = random_chromosome(u, rng);
    ASSERT_TRUE(c.units == 1 || c.units == u);
    ASSERT_TRUE(std::isinf(c.fitness));
    cce += c.loss == LossKind::cce;
    u_units += c.units == u;
    ++acts[static_cast<std::size_t>(c.activation)];
  }
  expect_binomial(cce, draws, 0.5, "CCE loss");
  expect_binomial(u_units, draws, 0.5, "U units");
  for (std::size_t a = 0; a < 4; ++a) expect_binomial(acts[a], draws, 0.25, "activation");
}

TEST(RandomChromosome, GeneSpaceForInput) {
  EXPECT_EQ(GeneSpace::for_input(3, InputKind::flat).layer_codes.size(), 2u);
  EXPECT_EQ(GeneSpace::for_input(3, InputKind::flat, true).layer_codes.size(), 4u);
  EXPECT_EQ(GeneSpace::for_input(3, InputKind::image).layer_codes.size(), 4u);
  std::mt19937_64 rng(0);
  EXPECT_THROW(random_chromosome(GeneSpace{0}, rng), std::invalid_argument);
}

// ---------------------------------------------------------------------------
// Text form

TEST(Describe, WorkedExamples) {
  const Chromosome fig{LossKind::mse, 1, Activation::relu, codes({1, 2, 1, 1})};
  EXPECT_EQ(describe(fig), "Units: 1, Loss: MSE, Activation: relu, Configuration: [1, 2, 1, 1]");
  const Chromosome cifar{LossKind::cce, 10, Activation::linear, codes({3, 3, 0, 0, 2, 3, 3, 0, 0, 0, 1})};
  EXPECT_EQ(describe(cifar),
            "Units: 10, Loss: CCE, Activation: linear, Configuration: [3, 3, 0, 0, 2, 3, 3, 0, 0, 0, 1]");
}

TEST(Describe, RoundTripsRandomChromosomes) {
  std::mt19937_64 rng(4);
  for (int i = 0; i < 500; ++i) {
    const Chromosome c = random_chromosome(1 + i % 50, rng);
    EXPECT_TRUE(parse_chromosome(describe(c)).same_genes(c)) << describe(c);
  }
}

TEST(ParseChromosome, RejectsMalformedText) {
  EXPECT_THROW(parse_chromosome("Units: 1, Loss: MAE, Activation: relu, Configuration: [1]"), std::invalid_argument);
  EXPECT_THROW(parse_chromosome("Units: 1, Loss: MSE, Activation: tanh, Configuration: [1]"), std::invalid_argument);
  EXPECT_THROW(parse_chromosome("Units: 0, Loss: MSE, Activation: relu, Configuration: [1]"), std::invalid_argument);
  EXPECT_THROW(parse_chromosome("Units: 1, Loss: MSE, Activation: relu, Configuration: [4]"), std::invalid_argument);
  EXPECT_THROW(parse_chromosome("Units: 1, Loss: MSE, Activation: relu"), std::invalid_argument);
}

// ---------------------------------------------------------------------------
// build_network

TEST(BuildNetwork, FigureOneLayerSequence) {
  const Chromosome c{LossKind::cce, 10, Activation::softmax, codes({2, 0, 3, 3, 0, 0, 1, 2, 1, 1})};
  std::mt19937_64 rng(5);
  const BuildResult built = build_network(c, InputSpec{InputKind::image, {32, 32, 3}}, NnParams{}, rng);
  ASSERT_TRUE(std::holds_alternative<Network>(built));
  const auto& net = std::get<Network>(built);
  using K = LayerKind;
  EXPECT_EQ(net.kinds(), (std::vector<K>{K::dropout, K::convolution, K::max_pooling, K::max_pooling, K::convolution,
                                         K::convolution, K::flatten, K::fully_connected, K::dropout,
                                         K::fully_connected, K::fully_connected, K::output_dense}));
  // 32 shrinks by one per 2x2 stride-1 step: five spatial layers leave 27x27x10.
  EXPECT_EQ(output_shape(net), (Shape{10}));
  const auto& first_conv = std::get<Convolution>(net.layers[1]);
  EXPECT_EQ(first_conv.weight.shape(), (Shape{2, 2, 3, 10}));
  EXPECT_EQ(std::get<Dense>(net.layers[7]).weight.shape(), (Shape{27 * 27 * 10, 100}));
  EXPECT_DOUBLE_EQ(std::get<Dropout>(net.layers[0]).keep_probability, 0.8);
}

TEST(BuildNetwork, InvalidReasons) {
  std::mt19937_64 rng(6);
  const InputSpec flat{InputKind::flat, {13}};
  const InputSpec image{InputKind::image, {4, 4, 1}};
  auto reason = [&](const Chromosome& c, const InputSpec& in) -> std::optional<InvalidReason> {
    const BuildResult r = build_network(c, in, NnParams{}, rng);
    if (const auto* bad = std::get_if<InvalidNetwork>(&r)) return bad->reason;
    return std::nullopt;
  };
  EXPECT_EQ(reason({LossKind::mse, 1, Activation::relu, codes({1, 1, 0, 1, 1})}, flat), InvalidReason::spatial_on_flat);
  EXPECT_EQ(reason({LossKind::mse, 1, Activation::relu, codes({3, 1, 1, 1, 1})}, flat), InvalidReason::spatial_on_flat);
  EXPECT_EQ(reason({LossKind::cce, 1, Activation::softmax, codes({1, 1, 1, 1, 1})}, flat),
            InvalidReason::cce_single_output);
  EXPECT_EQ(reason({LossKind::mse, 1, Activation::relu, codes({0, 1, 0, 2, 2})}, image),
            InvalidReason::spatial_after_flatten);
  EXPECT_EQ(reason({LossKind::mse, 1, Activation::relu, codes({0, 0, 0, 0, 2})}, image),
            InvalidReason::spatial_too_small);
  EXPECT_EQ(reason({LossKind::mse, 1, Activation::relu, codes({0, 0, 0, 2, 2})}, image), std::nullopt);
}

TEST(BuildNetwork, AnySpatialCodeOnFlatInputIsInvalid) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 2000; ++i) {
    Chromosome c = random_chromosome(5, rng);
    c.loss = LossKind::mse;
    bool spatial = false;
    for (LayerCode code : c.configuration) spatial |= is_spatial(code);
    const BuildResult r = build_network(c, InputSpec{InputKind::flat, {13}}, small_params(), rng);
    EXPECT_EQ(std::holds_alternative<InvalidNetwork>(r), spatial);
    if (spatial) {
      EXPECT_EQ(std::get<InvalidNetwork>(r).reason, InvalidReason::spatial_on_flat);
    }
  }
}

TEST(BuildNetwork, IsTotalAndOutputMatchesGenes) {
  std::mt19937_64 rng(8);
  const std::array<InputSpec, 4> inputs = {InputSpec{InputKind::flat, {3}}, InputSpec{InputKind::image, {8, 8, 1}},
                                           InputSpec{InputKind::image, {3, 3, 2}},
                                           InputSpec{InputKind::image, {6, 5, 3}}};
  std::size_t valid = 0;
  for (int i = 0; i < 4000; ++i) {
    const Chromosome c = random_chromosome(1 + i % 4, rng);
    const InputSpec& in = inputs[i % inputs.size()];
    BuildResult r;
    ASSERT_NO_THROW(r = build_network(c, in, small_params(), rng)) << describe(c);
    if (auto* net = std::get_if<Network>(&r)) {
      ++valid;
      EXPECT_EQ(output_shape(*net), (Shape{c.units}));
      const auto& out = std::get<Dense>(net->layers.back());
      EXPECT_EQ(out.activation, c.activation);
      Shape xs{2};
      xs.insert(xs.end(), in.sample_shape.begin(), in.sample_shape.end());
      EXPECT_EQ(predict(*net, random_tensor(xs, rng)).shape(), (Shape{2, c.units}));
    }
  }
  EXPECT_GT(valid, 0u);
}

TEST(BuildNetwork, WeightInitialisationFollowsNnParams) {
  const Chromosome c{LossKind::mse, 1, Activation::linear, codes({1, 1, 1, 1, 1})};
  std::mt19937_64 rng(10);
  const auto net = std::get<Network>(build_network(c, InputSpec{InputKind::flat, {50}}, NnParams{}, rng));
  double sum = 0.0, sq = 0.0;
  std::size_t n = 0;
  for (const Tensor* p : net.parameters()) {
    if (p->rank() == 1) {
      for (double v : p->values()) EXPECT_EQ(v, 0.0);
      continue;
    }
    for (double v : p->values()) {
      sum += v;
      sq += v * v;
      ++n;
    }
  }
  EXPECT_NEAR(sum / n, 0.0, 0.001);
  EXPECT_NEAR(std::sqrt(sq / n), 0.01, 0.0005);
}

TEST(BuildNetwork, PublishedChromosomesBuildOnTheirInputs) {
  for (const auto& p : published_chromosomes()) {
    EXPECT_EQ(check_published(p), "") << p.dataset;
  }
}
