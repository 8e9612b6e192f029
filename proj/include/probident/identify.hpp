#pragma once

#include <cstddef>
#include <cstdint>

#include "probident/data.hpp"
#include "probident/evolution.hpp"
#include "probident/fitness.hpp"

namespace probident {

struct Identification {
  GaResult ga;
  Verdict verdict;
};

/// Evolves chromosomes on a preprocessed dataset and labels it from the
/// winner's loss gene.
inline Identification identify(const Dataset& ds, const GaParams& ga, const NnParams& nn, std::uint64_t seed,
                               std::size_t jobs = 1) {
  auto fitness = [&ds, &nn](const Chromosome& c, std::uint64_t s) { return evaluate(c, ds, nn, s).fitness; };
  Identification out;
  out.ga = run_ga(GeneSpace::for_input(ds.unique_count, ds.input_kind, ga.all_codes_on_flat), ga, fitness, seed, jobs);
  out.verdict = decide(out.ga.best);
  return out;
}

}  // namespace probident
