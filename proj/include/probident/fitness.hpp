#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "probident/data.hpp"
#include "probident/genome.hpp"
#include "probident/nn.hpp"

namespace probident {

struct ValidationDrop {
  double delta = 0.0;  // mean(V_1..V_e) - V_0
  double ratio = 0.0;  // delta / V_0
};

/// Undefined (nullopt) for traces shorter than two, non-finite traces, or V_0 = 0.
inline std::optional<ValidationDrop> compute_R(std::span<const double> trace) {
  if (trace.size() < 2) return std::nullopt;
  for (double v : trace) {
    if (!std::isfinite(v)) return std::nullopt;
  }
  const double v0 = trace.front();
  if (v0 == 0.0) return std::nullopt;
  const double mean = std::accumulate(trace.begin() + 1, trace.end(), 0.0) / static_cast<double>(trace.size() - 1);
  const double delta = mean - v0;
  return ValidationDrop{delta, delta / v0};
}

enum class FitnessStatus { learned, invalid, not_learned, non_finite };

inline constexpr std::string_view to_string(FitnessStatus s) noexcept {
  switch (s) {
    case FitnessStatus::learned: return "learned";
    case FitnessStatus::invalid: return "invalid";
    case FitnessStatus::not_learned: return "not-learned";
    case FitnessStatus::non_finite: return "non-finite";
  }
  return "?";
}

struct FitnessOutcome {
  std::vector<double> val_trace;
  std::optional<double> delta_val;
  std::optional<double> ratio;
  double fitness = kInfinity;
  FitnessStatus status = FitnessStatus::invalid;
  std::optional<InvalidReason> invalid_reason;
};

/// Raw [n, 1] targets widened to `units` columns by repetition, so an MSE
/// network with several outputs regresses every output onto the target.
inline Tensor regression_targets(const Tensor& raw, std::size_t units) {
  if (units == 1) return raw;
  Tensor out({raw.dim(0), units});
  for (std::size_t i = 0; i < raw.dim(0); ++i) {
    for (std::size_t j = 0; j < units; ++j) out.at(i, j) = raw[i];
  }
  return out;
}

/// Target representation a chromosome trains and is scored against.
inline std::pair<Tensor, Tensor> chromosome_targets(const Chromosome& c, const Dataset& ds) {
  if (c.loss == LossKind::cce) return {ds.y_train_onehot, ds.y_val_onehot};
  return {regression_targets(ds.y_train, c.units), regression_targets(ds.y_val, c.units)};
}

/// Builds, trains and scores one chromosome. Pure in its arguments: the
/// network's weights and dropout masks all come from `sub_seed`.
inline FitnessOutcome evaluate(const Chromosome& c, const Dataset& ds, const NnParams& params,
                               std::uint64_t sub_seed) {
  FitnessOutcome out;
  std::mt19937_64 rng(sub_seed);
  BuildResult built = build_network(c, ds, params, rng);
  if (auto* bad = std::get_if<InvalidNetwork>(&built)) {
    out.status = FitnessStatus::invalid;
    out.invalid_reason = bad->reason;
    return out;
  }
  Network& net = std::get<Network>(built);
  const auto [y_train, y_val] = chromosome_targets(c, ds);

  TrainResult tr = train(net, ds.x_train, y_train, ds.x_val, y_val, params.train, rng);
  out.val_trace = std::move(tr.val_trace);
  if (!tr.finite) {
    out.status = FitnessStatus::non_finite;
    return out;
  }
  const auto drop = compute_R(out.val_trace);
  if (drop) {
    out.delta_val = drop->delta;
    out.ratio = drop->ratio;
  }
  if (!drop || drop->ratio >= 0.0) {
    out.status = FitnessStatus::not_learned;
    return out;
  }
  const double mse = mse_loss(y_val, predict(net, ds.x_val));
  if (!std::isfinite(mse)) {
    out.status = FitnessStatus::non_finite;
    return out;
  }
  out.fitness = mse;
  out.status = FitnessStatus::learned;
  return out;
}

enum class Label { classification, regression, inconclusive };

inline constexpr std::string_view to_string(Label l) noexcept {
  switch (l) {
    case Label::classification: return "classification";
    case Label::regression: return "regression";
    case Label::inconclusive: return "inconclusive";
  }
  return "?";
}

struct Verdict {
  Label label = Label::inconclusive;
  Chromosome best;  // carries the recommended loss, units, activation and configuration
  std::string diagnostic;
};

/// CCE winner => classification, MSE winner => regression. A winner without
/// finite fitness means no network learned, and no label is given.
inline Verdict decide(const Chromosome& best) {
  Verdict v;
  v.best = best;
  if (!std::isfinite(best.fitness)) {
    v.label = Label::inconclusive;
    v.diagnostic = "no evaluated chromosome produced a network that learned; every fitness was infinite";
    return v;
  }
  v.label = best.loss == LossKind::cce ? Label::classification : Label::regression;
  return v;
}

}  // namespace probident
