// probident: decide whether a tabular or image dataset is a classification
// or a regression problem by evolving small networks.

#include <chrono>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "probident/probident.hpp"

namespace {

enum ExitCode : int { kConclusive = 0, kInconclusive = 2, kDataError = 3, kArgumentError = 4 };

struct RunArgs {
  std::string data;
  std::string target_col;
  std::string image_shape;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
  std::string out;
  probident::GaParams ga;
  probident::NnParams nn;
};

struct SynthArgs {
  std::string kind;
  std::size_t n = 2000;
  std::uint64_t seed = 0;
  std::string out;
};

int run(const RunArgs& args) {
  using namespace probident;
  std::optional<ImageShape> shape;
  try {
    if (!args.image_shape.empty()) shape = parse_image_shape(args.image_shape);
    args.ga.validate();
    if (args.nn.train.epochs < 1 || args.nn.train.batch_size < 1) {
      throw std::invalid_argument("epochs and batch size must be >= 1");
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kArgumentError;
  }

  RunReport report;
  try {
    const auto start = std::chrono::steady_clock::now();
    const RawTable raw = load_csv(args.data, args.target_col, shape);
    const Dataset ds = split(raw, args.seed);
    report.result = identify(ds, args.ga, args.nn, args.seed, args.jobs);
    report.dataset = summarize_dataset(ds, args.data, args.target_col, shape);
    report.ga = args.ga;
    report.nn = args.nn;
    report.seed = args.seed;
    report.jobs = args.jobs;
    report.duration_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDataError;
  }

  const std::string text = to_json(report).dump(2) + "\n";
  if (args.out.empty()) {
    std::cout << text;
  } else {
    std::ofstream out(args.out);
    if (!(out << text)) {
      std::cerr << "error: cannot write report to '" << args.out << "'\n";
      return kDataError;
    }
  }
  const auto& verdict = report.result.verdict;
  std::cerr << "verdict: " << to_string(verdict.label) << " (" << describe(verdict.best) << ")\n";
  if (verdict.label == Label::inconclusive) {
    std::cerr << verdict.diagnostic << '\n';
    return kInconclusive;
  }
  return kConclusive;
}

int synth(const SynthArgs& args) {
  using namespace probident;
  SynthSpec spec;
  try {
    spec = parse_synth_kind(args.kind);
    if (args.n < 2) throw std::invalid_argument("--n must be at least 2");
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kArgumentError;
  }
  try {
    write_csv(generate_synthetic(spec, args.n, args.seed), args.out);
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDataError;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Identify classification vs regression problems with an evolved network search"};
  app.require_subcommand(1);

  RunArgs run_args;
  auto* run_cmd = app.add_subcommand("run", "evolve networks on a CSV dataset and report the verdict");
  run_cmd->add_option("--data", run_args.data, "CSV file with a header row")->required();
  run_cmd->add_option("--target-col", run_args.target_col, "target column name or zero-based index")->required();
  run_cmd->add_option("--image-shape", run_args.image_shape, "reinterpret features as H,W,C images");
  run_cmd->add_option("--seed", run_args.seed, "random seed")->capture_default_str();
  run_cmd->add_option("--jobs", run_args.jobs, "parallel fitness evaluations")->capture_default_str()->check(CLI::PositiveNumber);
  run_cmd->add_option("--out", run_args.out, "write the JSON report here instead of stdout");
  run_cmd->add_option("--population", run_args.ga.population_size, "population size")->capture_default_str();
  run_cmd->add_option("--generations", run_args.ga.generations, "number of generations")->capture_default_str();
  run_cmd->add_option("--tournament", run_args.ga.tournament_size, "tournament size")->capture_default_str();
  run_cmd->add_option("--crossover-rate", run_args.ga.crossover_rate, "probability an offspring event is crossover")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0))
      ->each([&](const std::string&) { run_args.ga.mutation_rate = 1.0 - run_args.ga.crossover_rate; });
  run_cmd->add_flag("--all-layer-codes", run_args.ga.all_codes_on_flat,
                    "draw convolution/max-pooling codes on flat data too (they build invalid networks)");
  run_cmd->add_option("--epochs", run_args.nn.train.epochs, "training epochs per network")->capture_default_str();
  run_cmd->add_option("--batch-size", run_args.nn.train.batch_size, "mini-batch size")->capture_default_str();
  run_cmd->add_option("--lr", run_args.nn.train.learning_rate, "Adam learning rate")->capture_default_str();

  SynthArgs synth_args;
  auto* synth_cmd = app.add_subcommand("synth", "write a synthetic CSV dataset");
  synth_cmd->add_option("--kind", synth_args.kind, "blobs-K, linreg or digits8x8")->required();
  synth_cmd->add_option("--n", synth_args.n, "number of samples")->capture_default_str();
  synth_cmd->add_option("--seed", synth_args.seed, "random seed")->capture_default_str();
  synth_cmd->add_option("--out", synth_args.out, "output CSV path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kArgumentError;
  }

  if (run_cmd->parsed()) return run(run_args);
  return synth(synth_args);
}
