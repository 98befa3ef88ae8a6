// tslab: run experiments, evaluate regret bounds, run property suites.
// Exit status: 0 all checks pass, 2 an invariant check failed, 1 error.

#include <cstdlib>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "tslab/harness/config.hpp"
#include "tslab/harness/experiment.hpp"
#include "tslab/harness/output.hpp"
#include "tslab/harness/verify.hpp"

namespace {

using namespace tslab;
using namespace tslab::harness;

constexpr int kOk = 0;
constexpr int kError = 1;
constexpr int kCheckFailed = 2;

int print_report(const SuiteReport& rep) {
  for (const auto& l : rep.lines)
    std::cout << fmt::format("{} [{}] {}: {}\n", l.passed ? "PASS" : "FAIL", rep.suite, l.name, l.detail);
  return rep.passed() ? kOk : kCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Thompson sampling laboratory for finite Bayesian contextual bandits"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> runs, horizon, workers;
  auto* run = app.add_subcommand("run", "Run the configured agents and write rounds.csv and summary.json");
  run->add_option("--config", config_path, "experiment config file")->required();
  run->add_option("--out", out_dir, "output directory (overrides run.output_dir)");
  run->add_option("--seed", seed, "base seed");
  run->add_option("--runs", runs, "number of independent runs")->check(CLI::PositiveNumber);
  run->add_option("--horizon", horizon, "rounds per run")->check(CLI::PositiveNumber);
  run->add_option("--workers", workers, "worker threads (default: TSLAB_WORKERS or hardware)")
      ->check(CLI::PositiveNumber);

  std::string bounds_config;
  auto* bnd = app.add_subcommand("bounds", "Print the bound report for a config without running agents");
  bnd->add_option("--config", bounds_config, "experiment config file")->required();

  std::string suite;
  std::uint64_t verify_seed = 0;
  auto* ver = app.add_subcommand("verify", "Run a property suite");
  ver->add_option("--suite", suite, "suite name")->required()->check(CLI::IsMember({"caps", "oracle", "chain-rule"}));
  ver->add_option("--seed", verify_seed, "suite seed (0 keeps each suite's default)");
  ver->add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kError;
  }

  try {
    if (*run) {
      ExperimentConfig cfg = load_config(config_path);
      if (!out_dir.empty()) cfg.output_dir = out_dir;
      if (seed) cfg.base_seed = *seed;
      if (runs) cfg.num_runs = *runs;
      if (horizon) cfg.horizon = *horizon;
      const AggregateResult res = run_experiment(cfg, {workers.value_or(default_workers())});
      emit_outputs(cfg, res, cfg.output_dir);
      for (const auto& agg : res.agents) {
        std::cout << fmt::format("{}: final regret {:.4f}", agg.agent, agg.final_regret.mean);
        if (agg.final_regret.se) std::cout << fmt::format(" (se {:.4f})", *agg.final_regret.se);
        std::cout << '\n';
      }
      for (const auto& [name, ok] : res.checks)
        std::cout << fmt::format("{} {}\n", ok ? (*ok ? "PASS" : "FAIL") : "SKIP", name);
      std::cout << fmt::format("wrote {}/rounds.csv and summary.json in {:.2f}s\n", cfg.output_dir,
                               res.wall_clock_seconds);
      return res.all_checks_pass() ? kOk : kCheckFailed;
    }
    if (*bnd) {
      const ExperimentConfig cfg = load_config(bounds_config);
      const ProblemSpec spec = make_problem(cfg.problem, cfg.problem_seed);
      const auto rep = evaluate_bounds(spec, cfg.horizon, cfg.bound_overrides, std::nullopt);
      std::cout << bounds_json(rep).dump(2) << '\n';
      return kOk;
    }
    const std::size_t w = workers.value_or(default_workers());
    if (suite == "oracle") return print_report(verify_oracle(verify_seed ? verify_seed : 1));
    if (suite == "caps") return print_report(verify_caps(verify_seed ? verify_seed : 2));
    return print_report(verify_chain_rule(verify_seed ? verify_seed : 4, w));
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
  }
  return kError;
}
