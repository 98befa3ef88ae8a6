#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include <gtest/gtest.h>

#include "tslab/harness/config.hpp"
#include "tslab/harness/experiment.hpp"
#include "tslab/harness/output.hpp"

using namespace tslab;
using namespace tslab::harness;
namespace fs = std::filesystem;

namespace {

const char* kSmallConfig = R"(
[problem]
family = bernoulli-table
seed = 3
num_params = 5
num_contexts = 2
num_actions = 3

[agent.ts]

[agent.uniform]

[run]
horizon = 60
num_runs = 30
base_seed = 9
)";

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string csv_of(const AggregateResult& res) {
  std::ostringstream out;
  write_rounds_csv(res, out);
  return out.str();
}

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("tslab_test_" + name);
  fs::remove_all(dir);
  return dir;
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

int cli(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + " '" + std::string(TSLAB_CLI) + "' " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::vector<RunTrajectory> ts_runs(const ProblemSpec& spec, std::size_t runs, std::size_t horizon, std::size_t workers = 1) {
  return run_batch(spec, AgentConfig{"ts", AgentKind::ts, {}}, BatchOptions{horizon, runs, 5, true, workers});
}

}  // namespace

TEST(Config, ParsesAllSections) {
  const auto cfg = parse_config_string(R"(
; comment
[problem]
family = logistic-linear
seed = 12
dim = 2
num_contexts = 2
num_actions = 5
link = generalized-logistic
link_alpha = 2.5
grid_resolution = 3
grid_diameter = 2

[agent.explore]
type = linucb
alpha = 0.5
lambda = 2

[agent.ts]

[run]
horizon = 40
num_runs = 7
base_seed = 99
diagnostics = false

[bounds]
gamma = 1.5
)");
  EXPECT_EQ(cfg.problem.family, Family::logistic_linear);
  EXPECT_EQ(cfg.problem_seed, 12u);
  EXPECT_EQ(cfg.problem.link, Link::generalized_logistic);
  EXPECT_EQ(cfg.problem.link_alpha, 2.5);
  EXPECT_EQ(*cfg.problem.grid_diameter, 2.0);
  ASSERT_EQ(cfg.agents.size(), 2u);
  EXPECT_EQ(cfg.agents[0].name, "explore");
  EXPECT_EQ(cfg.agents[0].kind, AgentKind::linucb);
  EXPECT_EQ(cfg.agents[0].linucb.alpha, 0.5);
  EXPECT_EQ(cfg.agents[0].linucb.lambda, 2.0);
  EXPECT_EQ(cfg.agents[1].kind, AgentKind::ts);
  EXPECT_EQ(cfg.horizon, 40u);
  EXPECT_EQ(cfg.num_runs, 7u);
  EXPECT_EQ(cfg.base_seed, 99u);
  EXPECT_FALSE(cfg.diagnostics);
  EXPECT_EQ(*cfg.bound_overrides.gamma, 1.5);
}

TEST(Config, ListsAndPoints) {
  const auto cfg = parse_config_string(R"(
[problem]
family = linear-gaussian
dim = 2
num_actions = 2
params = 0 1; 1 0; 0.5 0.5
features = 1, 0, 0, 1
prior = 0.5 0.25 0.25

[agent.ts]
)");
  ASSERT_EQ(cfg.problem.params.size(), 3u);
  EXPECT_EQ(cfg.problem.params[2][1], 0.5);
  EXPECT_EQ(cfg.problem.features.size(), 4u);
  EXPECT_EQ(cfg.problem.prior[0], 0.5);
}

TEST(Config, FieldLevelErrors) {
  auto message = [](const std::string& text) {
    try {
      parse_config_string(text);
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  const std::string base = "[problem]\nfamily = bernoulli-table\n[agent.ts]\n";
  EXPECT_NE(message("[agent.ts]\n").find("problem"), std::string::npos);
  EXPECT_NE(message("[problem]\nfamily = poisson\n[agent.ts]\n").find("problem.family"), std::string::npos);
  EXPECT_NE(message(base + "[run]\nhorizon = 0\n").find("run.horizon"), std::string::npos);
  EXPECT_NE(message(base + "[run]\nhorizon = -3\n").find("run.horizon"), std::string::npos);
  EXPECT_NE(message(base + "[run]\nnum_runs = lots\n").find("run.num_runs"), std::string::npos);
  EXPECT_NE(message(base + "[run]\nspeed = 3\n").find("run.speed"), std::string::npos);
  EXPECT_NE(message(base + "[extras]\n").find("extras"), std::string::npos);
  EXPECT_NE(message("[problem]\nfamily = bernoulli-table\n").find("agent"), std::string::npos);
  EXPECT_NE(message(base + "[agent.x]\ntype = greedy\n").find("agent.x.type"), std::string::npos);
  EXPECT_NE(message(base + "[agent.l]\ntype = linucb\nlambda = 0\n").find("agent.l.lambda"), std::string::npos);
  EXPECT_NE(message(base + "[run]\ndiagnostics = maybe\n").find("run.diagnostics"), std::string::npos);
  EXPECT_NE(message("stray = 1\n" + base).find("stray"), std::string::npos);
  EXPECT_NE(message("[problem]\nfamily = logistic-linear\nlinear_means = true\n[agent.ts]\n").find("linear_means"),
            std::string::npos);
  EXPECT_THROW(load_config("/nonexistent/config.ini"), ConfigError);
}

TEST(Config, EmptyAgentSectionsAreKept) {
  const auto cfg = parse_config_string(kSmallConfig);
  ASSERT_EQ(cfg.agents.size(), 2u);
  EXPECT_EQ(cfg.agents[0].name, "ts");
  EXPECT_EQ(cfg.agents[1].kind, AgentKind::uniform);
}

TEST(Config, SampleConfigsParse) {
  for (const auto& entry : fs::directory_iterator(fs::path(TSLAB_SOURCE_DIR) / "configs")) {
    const auto cfg = load_config(entry.path().string());
    EXPECT_FALSE(cfg.agents.empty()) << entry.path();
    EXPECT_NO_THROW(make_problem(cfg.problem, cfg.problem_seed)) << entry.path();
  }
}

TEST(Output, HeaderMatchesGoldenFile) {
  const std::string golden = slurp(fs::path(TSLAB_SOURCE_DIR) / "tests/unit/golden/rounds_header.csv");
  const auto res = run_experiment(parse_config_string(kSmallConfig));
  const std::string csv = csv_of(res);
  EXPECT_EQ(csv.substr(0, csv.find('\n') + 1), golden);
  EXPECT_EQ(std::string(kRoundsHeader) + "\n", golden);
}

TEST(Output, TrivialProblemGivesZeroRegret) {
  auto cfg = parse_config_string("[problem]\nfamily = bernoulli-table\n[agent.ts]\n[run]\nhorizon = 1\nnum_runs = 1\n");
  const auto res = run_experiment(cfg);
  const std::string csv = csv_of(res);
  std::istringstream in(csv);
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  EXPECT_EQ(row, "1,ts,0,,0,0,0,0,0");
  EXPECT_FALSE(std::getline(in, row));
}

TEST(Output, SummaryRoundTripsThroughStrictParser) {
  const auto cfg = parse_config_string(kSmallConfig);
  const auto res = run_experiment(cfg);
  const std::string text = summary_json(cfg, res).dump(2);
  ASSERT_TRUE(Json::accept(text));
  const Json back = Json::parse(text);
  EXPECT_EQ(back.dump(2), text);
  EXPECT_EQ(back["config"]["run"]["horizon"], 60);
  EXPECT_EQ(back["agents"].size(), 2u);
  EXPECT_TRUE(back["checks"].is_object());
  EXPECT_EQ(back["all_checks_pass"].get<bool>(), res.all_checks_pass());
}

TEST(Output, BoundOverlayMatchesRecomputation) {
  const auto cfg = parse_config_string(kSmallConfig);
  const auto res = run_experiment(cfg);
  const Json summary = Json::parse(summary_json(cfg, res).dump());
  const ProblemSpec spec = make_problem(cfg.problem, cfg.problem_seed);
  const auto& ts = res.agents.front();
  const auto rep = evaluate_bounds(spec, cfg.horizon, cfg.bound_overrides, std::make_pair(*ts.gamma_bar, ts.final_kl->mean));
  ASSERT_EQ(summary["bounds"]["values"].size(), rep.values.size());
  for (const auto& [k, v] : rep.values) EXPECT_EQ(summary["bounds"]["values"][k].get<double>(), v) << k;
  EXPECT_EQ(summary["bounds"]["values"]["cor1_bound"].get<double>(),
            bounds::cor1_bound(1.0, 3, 60, entropy(spec.prior())));
}

TEST(Output, DeterministicFiles) {
  const auto cfg = parse_config_string(kSmallConfig);
  const fs::path a = scratch_dir("det_a"), b = scratch_dir("det_b");
  emit_outputs(cfg, run_experiment(cfg), a);
  emit_outputs(cfg, run_experiment(cfg), b);
  EXPECT_EQ(slurp(a / "rounds.csv"), slurp(b / "rounds.csv"));
  EXPECT_EQ(slurp(a / "summary.json"), slurp(b / "summary.json"));
  EXPECT_FALSE(slurp(a / "rounds.csv").empty());
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Output, SerialAndParallelAgree) {
  const auto cfg = parse_config_string(kSmallConfig);
  const auto serial = run_experiment(cfg, {1});
  for (std::size_t w : {2u, 3u, 8u}) {
    const auto par = run_experiment(cfg, {w});
    EXPECT_EQ(csv_of(serial), csv_of(par));
    EXPECT_EQ(summary_json(cfg, serial).dump(), summary_json(cfg, par).dump());
  }
}

TEST(Aggregate, SingleRunHasNoStandardError) {
  const auto spec = make_problem(parse_config_string(kSmallConfig).problem, 3);
  const auto runs = ts_runs(spec, 1, 10);
  const auto agg = aggregate(runs, 0.25, 3);
  for (const auto& se : agg.se_cum_regret) EXPECT_FALSE(se.has_value());
  EXPECT_FALSE(agg.final_regret.se.has_value());
  std::map<std::string, std::optional<bool>> checks;
  add_checks(agg, evaluate_bounds(spec, 10, {}, std::nullopt), checks);
  EXPECT_FALSE(checks.at("ts.chain_rule").has_value());
}

TEST(Aggregate, DuplicatedRunsHaveZeroStandardError) {
  const auto spec = make_problem(parse_config_string(kSmallConfig).problem, 3);
  const auto one = ts_runs(spec, 1, 25);
  const std::vector<RunTrajectory> dup(4, one.front());
  const auto agg = aggregate(dup, 0.25, 3);
  for (std::size_t t = 0; t < 25; ++t) {
    EXPECT_EQ(*agg.se_cum_regret[t], 0.0);
    EXPECT_EQ(agg.mean_cum_regret[t], aggregate(one, 0.25, 3).mean_cum_regret[t]);
  }
  EXPECT_EQ(*agg.chain_rule->se, 0.0);
}

TEST(Aggregate, EmptyInputThrows) {
  EXPECT_THROW(aggregate(std::vector<RunTrajectory>{}), std::invalid_argument);
}

TEST(Aggregate, GammaSummariesAreConsistent) {
  const auto cfg = parse_config_string(kSmallConfig);
  const auto spec = make_problem(cfg.problem, cfg.problem_seed);
  const auto agg = aggregate(ts_runs(spec, 40, 80, 4), 0.25, 3);
  ASSERT_TRUE(agg.gamma_bar && agg.gamma_max);
  EXPECT_LE(*agg.gamma_bar, *agg.gamma_max);
  EXPECT_LE(*agg.gamma_max, bounds::lemma1_cap(0.25, 3) + kCapSlack);
  for (double g : agg.max_gamma) EXPECT_LE(g, bounds::lemma1_cap(0.25, 3) + kCapSlack);
  EXPECT_EQ(agg.one_step_violations, 0u);
}

TEST(Aggregate, RealizedAndExpectedRegretAgree) {
  const auto cfg = parse_config_string(kSmallConfig);
  const auto spec = make_problem(cfg.problem, cfg.problem_seed);
  const auto runs = ts_runs(spec, 300, 60, 4);
  std::vector<double> diff(runs.size());
  for (std::size_t i = 0; i < runs.size(); ++i) {
    double e = 0.0;
    for (const auto& d : runs[i].per_round) e += d.expected_regret;
    diff[i] = runs[i].realized_regret - e;
  }
  const auto ms = mean_se(diff);
  EXPECT_LE(std::abs(ms.mean), 3.0 * *ms.se);
}

TEST(Experiment, EmittedMaxGammaStaysUnderCap) {
  const auto cfg = parse_config_string(kSmallConfig);
  const auto res = run_experiment(cfg, {4});
  const double cap = res.bounds.values.at("lemma1_cap");
  std::istringstream in(csv_of(res));
  std::string line;
  std::getline(in, line);
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() < 9) continue;  // uniform agent rows carry no diagnostics
    EXPECT_LE(std::stod(f[7]), cap + kCapSlack);
    ++rows;
  }
  EXPECT_EQ(rows, 60u);
  EXPECT_EQ(res.checks.at("ts.gamma_within_lemma1_cap"), true);
}

TEST(Experiment, LinucbNeedsFeatures) {
  auto cfg = parse_config_string("[problem]\nfamily = bernoulli-table\n[agent.linucb]\n");
  EXPECT_THROW(run_experiment(cfg), ConfigError);
}

TEST(Workers, EnvironmentOverride) {
  setenv("TSLAB_WORKERS", "3", 1);
  EXPECT_EQ(default_workers(), 3u);
  setenv("TSLAB_WORKERS", "junk", 1);
  EXPECT_GE(default_workers(), 1u);
  unsetenv("TSLAB_WORKERS");
  EXPECT_GE(default_workers(), 1u);
}

TEST(Workers, ParallelForPropagatesFailure) {
  EXPECT_THROW(parallel_for(20, 4,
                            [](std::size_t i) {
                              if (i == 13) throw std::runtime_error("boom");
                            }),
               std::runtime_error);
}

TEST(Cli, ExitCodes) {
  const fs::path dir = scratch_dir("cli");
  fs::create_directories(dir);
  write_file(dir / "ok.ini", "[problem]\nfamily = bernoulli-table\n[agent.ts]\n[run]\nhorizon = 3\nnum_runs = 4\n");
  // an absurdly small gamma override makes the thm2_bound check fail
  write_file(dir / "fail.ini",
             "[problem]\nfamily = logistic-linear\ndim = 2\nnum_actions = 4\ngrid_resolution = 3\n"
             "[agent.ts]\n[run]\nhorizon = 30\nnum_runs = 10\n[bounds]\ngamma = 1e-12\n");
  write_file(dir / "bad.ini", "[problem]\nfamily = nope\n[agent.ts]\n");
  const std::string out = (dir / "out").string();
  EXPECT_EQ(cli("run --config '" + (dir / "ok.ini").string() + "' --out '" + out + "'"), 0);
  EXPECT_TRUE(fs::exists(dir / "out" / "rounds.csv"));
  EXPECT_TRUE(fs::exists(dir / "out" / "summary.json"));
  EXPECT_EQ(cli("run --config '" + (dir / "fail.ini").string() + "' --out '" + out + "'"), 2);
  EXPECT_EQ(cli("run --config '" + (dir / "bad.ini").string() + "' --out '" + out + "'"), 1);
  EXPECT_EQ(cli("run --config '" + (dir / "missing.ini").string() + "' --out '" + out + "'"), 1);
  EXPECT_EQ(cli("bounds --config '" + (dir / "ok.ini").string() + "'"), 0);
  EXPECT_EQ(cli("verify --suite nonsense"), 1);
  EXPECT_EQ(cli("frobnicate"), 1);
  fs::remove_all(dir);
}

TEST(Cli, OverridesAndWorkerCountKeepOutputsIdentical) {
  const fs::path dir = scratch_dir("cli_workers");
  fs::create_directories(dir);
  write_file(dir / "cfg.ini", kSmallConfig);
  const std::string cfg = "'" + (dir / "cfg.ini").string() + "'";
  ASSERT_EQ(cli("run --config " + cfg + " --out '" + (dir / "a").string() + "' --runs 12 --horizon 20 --seed 3",
                "TSLAB_WORKERS=1"),
            0);
  ASSERT_EQ(cli("run --config " + cfg + " --out '" + (dir / "b").string() + "' --runs 12 --horizon 20 --seed 3",
                "TSLAB_WORKERS=5"),
            0);
  EXPECT_EQ(slurp(dir / "a" / "rounds.csv"), slurp(dir / "b" / "rounds.csv"));
  EXPECT_EQ(slurp(dir / "a" / "summary.json"), slurp(dir / "b" / "summary.json"));
  const Json summary = Json::parse(slurp(dir / "a" / "summary.json"));
  EXPECT_EQ(summary["config"]["run"]["horizon"], 20);
  EXPECT_EQ(summary["config"]["run"]["num_runs"], 12);
  EXPECT_EQ(summary["config"]["run"]["base_seed"], 3);
  fs::remove_all(dir);
}
