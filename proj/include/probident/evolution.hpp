#pragma once

// Generational GA over chromosomes: tournament selection, one-gene swap
// crossover, one-gene mutation, full replacement, global best tracking.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <mutex>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <thread>
#include <utility>
#include <vector>

#include "probident/genome.hpp"

namespace probident {

struct GaParams {
  std::size_t population_size = 50;
  std::size_t generations = 10;
  std::size_t tournament_size = 5;
  double crossover_rate = 0.70;
  double mutation_rate = 0.30;
  bool all_codes_on_flat = false;  // draw spatial layer codes even for flat inputs

  void validate() const {
    if (population_size < 1) throw std::invalid_argument("population size must be >= 1");
    if (tournament_size < 1) throw std::invalid_argument("tournament size must be >= 1");
    if (crossover_rate < 0.0 || mutation_rate < 0.0 || std::abs(crossover_rate + mutation_rate - 1.0) > 1e-9) {
      throw std::invalid_argument("crossover and mutation rates must be non-negative and sum to 1");
    }
  }
};

/// Fitness callback: (chromosome, sub-seed) -> fitness, lower is better.
template <class F>
concept Evaluator = std::invocable<F&, const Chromosome&, std::uint64_t> &&
                    std::convertible_to<std::invoke_result_t<F&, const Chromosome&, std::uint64_t>, double>;

/// Deterministic per-evaluation seed, independent of evaluation order.
inline std::uint64_t sub_seed(std::uint64_t seed, std::uint64_t generation, std::uint64_t index) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(mix(seed) ^ generation) ^ index);
}

/// Evaluates every member, in parallel when jobs > 1. Results land by index,
/// so the outcome does not depend on `jobs`.
template <Evaluator F>
void evaluate_population(std::vector<Chromosome>& members, F& evaluator, std::uint64_t seed,
                         std::uint64_t generation, std::size_t jobs = 1) {
  const std::size_t n = members.size();
  jobs = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(n, 1));
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) members[i].fitness = evaluator(members[i], sub_seed(seed, generation, i));
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        members[i].fitness = evaluator(members[i], sub_seed(seed, generation, i));
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < jobs; ++t) pool.emplace_back(work);
  }
  if (failure) std::rethrow_exception(failure);
}

// ---------------------------------------------------------------------------
// Operators

/// Samples k members with replacement and returns the index of the fittest;
/// ties are broken uniformly among the tied draws.
inline std::size_t tournament_select(std::span<const Chromosome> population, std::size_t k, std::mt19937_64& rng) {
  if (population.empty()) throw std::invalid_argument("tournament_select: empty population");
  if (k < 1) throw std::invalid_argument("tournament_select: k must be >= 1");
  std::uniform_int_distribution<std::size_t> pick(0, population.size() - 1);
  std::vector<std::size_t> drawn(k);
  for (auto& d : drawn) d = pick(rng);
  double best = kInfinity;
  for (std::size_t d : drawn) best = std::min(best, population[d].fitness);
  std::vector<std::size_t> tied;
  for (std::size_t d : drawn) {
    if (population[d].fitness == best) tied.push_back(d);
  }
  if (tied.size() == 1) return tied.front();
  return tied[std::uniform_int_distribution<std::size_t>(0, tied.size() - 1)(rng)];
}

/// Swaps the gene at `position` between copies of the parents.
inline std::pair<Chromosome, Chromosome> crossover_at(const Chromosome& p1, const Chromosome& p2, Gene position) {
  Chromosome o1 = p1, o2 = p2;
  switch (position) {
    case Gene::loss: std::swap(o1.loss, o2.loss); break;
    case Gene::units: std::swap(o1.units, o2.units); break;
    case Gene::activation: std::swap(o1.activation, o2.activation); break;
    case Gene::configuration: std::swap(o1.configuration, o2.configuration); break;
  }
  o1.fitness = o2.fitness = kInfinity;
  return {std::move(o1), std::move(o2)};
}

inline std::pair<Chromosome, Chromosome> crossover(const Chromosome& p1, const Chromosome& p2, std::mt19937_64& rng) {
  const auto p = std::uniform_int_distribution<std::size_t>(0, kGeneCount - 1)(rng);
  return crossover_at(p1, p2, static_cast<Gene>(p));
}

/// Redraws one gene from its full value set; the new value may equal the old.
inline Chromosome mutate_gene(const Chromosome& parent, Gene gene, const GeneSpace& space, std::mt19937_64& rng) {
  Chromosome child = parent;
  switch (gene) {
    case Gene::loss: child.loss = random_loss(rng); break;
    case Gene::units: child.units = random_units(space.unique_count, rng); break;
    case Gene::activation: child.activation = random_activation(rng); break;
    case Gene::configuration: child.configuration = random_configuration(rng, space.layer_codes); break;
  }
  child.fitness = kInfinity;
  return child;
}

inline Chromosome mutate(const Chromosome& parent, const GeneSpace& space, std::mt19937_64& rng) {
  const auto g = std::uniform_int_distribution<std::size_t>(0, kGeneCount - 1)(rng);
  return mutate_gene(parent, static_cast<Gene>(g), space, rng);
}

inline Chromosome mutate(const Chromosome& parent, std::size_t unique_count, std::mt19937_64& rng) {
  return mutate(parent, GeneSpace{unique_count}, rng);
}

// ---------------------------------------------------------------------------
// Generational loop

struct Population {
  std::vector<Chromosome> members;
  Chromosome best;  // global best so far; not a member of `members`
};

struct GenerationStats {
  std::size_t generation = 0;
  std::optional<double> min_fitness;  // over finite fitness values only
  std::optional<double> mean_finite_fitness;
  std::size_t finite_count = 0;
  std::size_t cce_count = 0;
  std::size_t mse_count = 0;
  double best_so_far = kInfinity;
};

inline GenerationStats summarize(const Population& pop, std::size_t generation) {
  GenerationStats s;
  s.generation = generation;
  double sum = 0.0;
  for (const auto& c : pop.members) {
    (c.loss == LossKind::cce ? s.cce_count : s.mse_count)++;
    if (std::isfinite(c.fitness)) {
      ++s.finite_count;
      sum += c.fitness;
      s.min_fitness = s.min_fitness ? std::min(*s.min_fitness, c.fitness) : c.fitness;
    }
  }
  if (s.finite_count) s.mean_finite_fitness = sum / static_cast<double>(s.finite_count);
  s.best_so_far = pop.best.fitness;
  return s;
}

/// Replaces the best-so-far with any strictly fitter member.
inline void update_best(Population& pop) {
  for (const auto& c : pop.members) {
    if (c.fitness < pop.best.fitness || pop.best.configuration.empty()) pop.best = c;
  }
}

/// Produces a full replacement population: operators are drawn per event
/// (crossover yields two offspring, mutation one) until the pool is full.
template <Evaluator F>
Population next_generation(const Population& current, const GaParams& params, const GeneSpace& space,
                           F& evaluator, std::mt19937_64& rng, std::uint64_t seed, std::size_t generation,
                           std::size_t jobs = 1) {
  std::span<const Chromosome> parents = current.members;
  Population next;
  next.best = current.best;
  next.members.reserve(params.population_size + 1);
  std::bernoulli_distribution use_crossover(params.crossover_rate);
  while (next.members.size() < params.population_size) {
    if (use_crossover(rng)) {
      const auto& a = parents[tournament_select(parents, params.tournament_size, rng)];
      const auto& b = parents[tournament_select(parents, params.tournament_size, rng)];
      auto [o1, o2] = crossover(a, b, rng);
      next.members.push_back(std::move(o1));
      next.members.push_back(std::move(o2));
    } else {
      const auto& a = parents[tournament_select(parents, params.tournament_size, rng)];
      next.members.push_back(mutate(a, space, rng));
    }
  }
  next.members.resize(params.population_size);
  evaluate_population(next.members, evaluator, seed, generation, jobs);
  update_best(next);
  return next;
}

struct GaResult {
  Chromosome best;
  std::vector<GenerationStats> history;  // entry 0 is the initial population
  std::size_t evaluations = 0;
};

template <Evaluator F>
GaResult run_ga(const GeneSpace& space, const GaParams& params, F&& evaluator, std::uint64_t seed,
                std::size_t jobs = 1) {
  params.validate();
  std::mt19937_64 rng(seed);
  Population pop;
  for (std::size_t i = 0; i < params.population_size; ++i) pop.members.push_back(random_chromosome(space, rng));
  evaluate_population(pop.members, evaluator, seed, 0, jobs);
  update_best(pop);

  GaResult result;
  result.history.push_back(summarize(pop, 0));
  result.evaluations = pop.members.size();
  for (std::size_t g = 1; g <= params.generations; ++g) {
    pop = next_generation(pop, params, space, evaluator, rng, seed, g, jobs);
    result.history.push_back(summarize(pop, g));
    result.evaluations += pop.members.size();
  }
  result.best = pop.best;
  return result;
}

}  // namespace probident
