#pragma once

// JSON run report. Infinite fitness values are written as null.

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "probident/data.hpp"
#include "probident/evolution.hpp"
#include "probident/fitness.hpp"
#include "probident/identify.hpp"

namespace probident {

inline constexpr const char* kReportFormat = "probident-report/1";

struct DatasetSummary {
  std::string path;
  std::string target_column;
  std::size_t samples = 0;
  std::size_t features = 0;
  std::size_t unique_targets = 0;
  InputKind input_kind = InputKind::flat;
  std::optional<ImageShape> image_shape;
  std::size_t train_samples = 0;
  std::size_t val_samples = 0;
};

inline DatasetSummary summarize_dataset(const Dataset& ds, std::string path, std::string target_column,
                                        std::optional<ImageShape> image_shape) {
  return {std::move(path), std::move(target_column), ds.total_samples, ds.feature_count, ds.unique_count,
          ds.input_kind,   image_shape,              ds.x_train.dim(0), ds.x_val.dim(0)};
}

inline nlohmann::json finite_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(); }

inline nlohmann::json finite_or_null(const std::optional<double>& v) {
  return v ? finite_or_null(*v) : nlohmann::json();
}

inline nlohmann::json to_json(const GenerationStats& s) {
  return {{"generation", s.generation},
          {"min_fitness", finite_or_null(s.min_fitness)},
          {"mean_finite_fitness", finite_or_null(s.mean_finite_fitness)},
          {"finite_count", s.finite_count},
          {"cce_count", s.cce_count},
          {"mse_count", s.mse_count},
          {"best_so_far", finite_or_null(s.best_so_far)}};
}

inline nlohmann::json to_json(const Verdict& v) {
  nlohmann::json config = nlohmann::json::array();
  for (auto code : v.best.configuration) config.push_back(static_cast<int>(code));
  nlohmann::json j = {{"label", std::string(to_string(v.label))},
                      {"loss", std::string(to_string(v.best.loss))},
                      {"units", v.best.units},
                      {"activation", std::string(to_string(v.best.activation))},
                      {"configuration", config},
                      {"chromosome", describe(v.best)}};
  if (!v.diagnostic.empty()) j["diagnostic"] = v.diagnostic;
  return j;
}

inline nlohmann::json to_json(const FitnessOutcome& o) {
  nlohmann::json j = {{"val_trace", o.val_trace},
                      {"delta_val", finite_or_null(o.delta_val)},
                      {"R", finite_or_null(o.ratio)},
                      {"fitness", finite_or_null(o.fitness)},
                      {"status", std::string(to_string(o.status))}};
  if (o.invalid_reason) j["invalid_reason"] = std::string(to_string(*o.invalid_reason));
  return j;
}

inline nlohmann::json to_json(const DatasetSummary& d) {
  nlohmann::json shape;
  if (d.image_shape) shape = {d.image_shape->height, d.image_shape->width, d.image_shape->channels};
  return {{"path", d.path},
          {"target_column", d.target_column},
          {"samples", d.samples},
          {"features", d.features},
          {"unique_targets", d.unique_targets},
          {"input_kind", std::string(to_string(d.input_kind))},
          {"image_shape", shape},
          {"train_samples", d.train_samples},
          {"val_samples", d.val_samples}};
}

inline nlohmann::json to_json(const GaParams& p) {
  return {{"population_size", p.population_size},
          {"generations", p.generations},
          {"tournament_size", p.tournament_size},
          {"crossover_rate", p.crossover_rate},
          {"mutation_rate", p.mutation_rate},
          {"all_codes_on_flat", p.all_codes_on_flat}};
}

inline nlohmann::json to_json(const NnParams& p) {
  return {{"epochs", p.train.epochs},
          {"batch_size", p.train.batch_size},
          {"learning_rate", p.train.learning_rate},
          {"adam_beta1", p.train.beta1},
          {"adam_beta2", p.train.beta2},
          {"adam_epsilon", p.train.epsilon},
          {"init_mean", p.init_mean},
          {"init_std", p.init_std},
          {"hidden_units", p.hidden_units},
          {"conv_filters", p.conv_filters},
          {"kernel_size", kKernelSize},
          {"pool_size", kPoolSize},
          {"keep_probability", p.keep_probability}};
}

struct RunReport {
  Identification result;
  DatasetSummary dataset;
  GaParams ga;
  NnParams nn;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
  double duration_seconds = 0.0;
};

inline nlohmann::json to_json(const RunReport& r) {
  nlohmann::json history = nlohmann::json::array();
  for (const auto& s : r.result.ga.history) history.push_back(to_json(s));
  return {{"format", kReportFormat},
          {"verdict", to_json(r.result.verdict)},
          {"best_fitness", finite_or_null(r.result.ga.best.fitness)},
          {"evaluations", r.result.ga.evaluations},
          {"history", history},
          {"dataset", to_json(r.dataset)},
          {"parameters", {{"ga", to_json(r.ga)}, {"nn", to_json(r.nn)}}},
          {"seed", r.seed},
          {"jobs", r.jobs},
          {"duration_seconds", r.duration_seconds}};
}

}  // namespace probident
