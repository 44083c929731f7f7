// swob: simulate budgeted-observation online learning with switching costs.
//
// Subcommands:
//   run           execute one configured experiment, write stats + metadata
//   sweep         repeat the experiment along a budget or horizon axis
//   verify        run the built-in correctness checks
//   gen-instance  write a generated loss matrix to a CSV instance file
//
// Exit codes: 0 success, 1 generic failure (IO, failed verify), 2 bad
// config or command line, 3 infeasible schedule or parameter domain,
// 4 observation budget violated at runtime, 5 not enough data to fit.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "swob/swob.hpp"

namespace fs = std::filesystem;
using namespace swob;

namespace {

struct CommonOpts {
  std::string config_path;
  std::string out_dir_flag;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::size_t reps = 0;
  bool reps_set = false;
  std::size_t threads = 1;
  bool export_trajectories = false;
};

std::string resolve_out_dir(const std::string& flag, const RunConfig& cfg) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("SWOB_OUT_DIR"); env && *env) return env;
  return cfg.output.out_dir;
}

RunConfig load_with_overrides(const CommonOpts& opts) {
  RunConfig cfg = load_run_config(opts.config_path);
  if (opts.seed_set) cfg.engine.base_seed = opts.seed;
  if (opts.reps_set) cfg.engine.repetitions = opts.reps;
  if (opts.export_trajectories) cfg.output.export_trajectories = true;
  return cfg;
}

std::vector<std::string> stats_columns() {
  return {"mode",          "setting",        "T",
          "K",             "budget",         "repetitions",
          "base_seed",     "mean_regret",    "stderr_regret",
          "mean_switches", "stderr_switches", "max_regret",
          "mean_observations"};
}

std::vector<std::string> stats_row(const RunPlan& plan,
                                   const AggregateStats& s) {
  return {to_string(plan.spec.mode),
          to_string(plan.game.setting),
          std::to_string(plan.T),
          std::to_string(plan.K),
          std::to_string(plan.game.budget),
          std::to_string(s.repetitions),
          std::to_string(plan.game.base_seed),
          format_double(s.mean_regret),
          format_double(s.stderr_regret),
          format_double(s.mean_switches),
          format_double(s.stderr_switches),
          format_double(s.max_regret),
          format_double(s.mean_observations)};
}

void write_meta_common(std::ostream& out, const std::string& requested_mode,
                       const RunPlan& plan) {
  out << "# resolved\n";
  out << "mode_requested = " << requested_mode << "\n";
  out << "mode = " << to_string(plan.spec.mode) << "\n";
  out << "setting = " << to_string(plan.game.setting) << "\n";
  out << "T = " << plan.T << "\n";
  out << "K = " << plan.K << "\n";
  out << "budget = " << plan.game.budget << "\n";
  out << "planned_budget = " << plan.spec.planned_budget << "\n";
  out << "batches = " << plan.spec.batches << "\n";
  out << "batch_len = " << plan.spec.batch_len << "\n";
  out << "obs_per_batch = " << plan.spec.obs_per_batch << "\n";
  out << "eta = " << format_double(plan.spec.eta) << "\n";
  out << "shrinking_dartboard = "
      << (plan.spec.shrinking_dartboard ? "true" : "false") << "\n";
  out << "switching_costs = "
      << (plan.spec.switching_costs_enabled ? "true" : "false") << "\n";
  out << "repetitions = " << plan.game.repetitions << "\n";
  out << "base_seed = " << plan.game.base_seed << "\n";
  if (std::isfinite(plan.resolved_epsilon)) {
    out << "epsilon = " << format_double(plan.resolved_epsilon) << "\n";
  }
  if (std::isfinite(plan.resolved_sigma)) {
    out << "sigma = " << format_double(plan.resolved_sigma) << "\n";
  }
  out << "theoretical_bound = " << format_double(plan.bound) << "\n";
}

void write_meta_file(const fs::path& path, const RunConfig& cfg,
                     const std::string& requested_mode, const RunPlan& plan,
                     const std::string& extra = {}) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  write_meta_common(out, requested_mode, plan);
  if (!extra.empty()) out << extra;
  out << "# config\n" << cfg.raw_text;
  if (!cfg.raw_text.empty() && cfg.raw_text.back() != '\n') out << "\n";
}

void write_trajectories(const fs::path& path, const MonteCarloResult& mc) {
  CsvWriter w(path.string(), {"rep", "t", "action"});
  for (std::size_t r = 0; r < mc.trajectories.size(); ++r) {
    const auto& actions = mc.trajectories[r].actions;
    for (std::size_t t = 0; t < actions.size(); ++t) {
      w.write_row({std::to_string(r), std::to_string(t + 1),
                   std::to_string(actions[t])});
    }
  }
}

int cmd_run(const CommonOpts& opts) {
  RunConfig cfg = load_with_overrides(opts);
  const std::string out_dir = resolve_out_dir(opts.out_dir_flag, cfg);
  const RunPlan plan = build_plan(cfg);
  const MonteCarloResult mc =
      run_monte_carlo(plan.source, plan.spec, plan.game, opts.threads,
                      cfg.output.export_trajectories);

  fs::create_directories(out_dir);
  {
    CsvWriter w((fs::path(out_dir) / "stats.csv").string(), stats_columns());
    w.write_row(stats_row(plan, mc.stats));
  }
  write_meta_file(fs::path(out_dir) / "meta.txt", cfg, cfg.learner.mode, plan);
  if (cfg.output.export_trajectories) {
    write_trajectories(fs::path(out_dir) / "trajectories.csv", mc);
  }

  std::cout << "mode=" << to_string(plan.spec.mode) << " T=" << plan.T
            << " K=" << plan.K << " budget=" << plan.game.budget
            << " reps=" << mc.stats.repetitions << "\n";
  std::cout << "mean_regret=" << format_double(mc.stats.mean_regret)
            << " stderr=" << format_double(mc.stats.stderr_regret)
            << " mean_switches=" << format_double(mc.stats.mean_switches)
            << " bound=" << format_double(plan.bound) << "\n";
  std::cout << "wrote " << (fs::path(out_dir) / "stats.csv").string() << "\n";
  return 0;
}

std::vector<std::size_t> parse_values_list(const std::string& csv) {
  std::vector<std::size_t> out;
  for (const auto& piece : split_csv_line(csv)) {
    std::string v = piece;
    const auto b = v.find_first_not_of(" \t");
    const auto e = v.find_last_not_of(" \t");
    if (b == std::string::npos) throw ParseError("--values: empty entry");
    v = v.substr(b, e - b + 1);
    out.push_back(parse_u64(v, out.size() + 1));
  }
  if (out.empty()) throw ParseError("--values: no entries");
  return out;
}

int cmd_sweep(const CommonOpts& opts, const std::string& axis_name,
              const std::string& values_csv) {
  RunConfig cfg = load_with_overrides(opts);
  const std::string out_dir = resolve_out_dir(opts.out_dir_flag, cfg);
  const SweepAxis axis = sweep_axis_from_string(axis_name);
  const std::vector<std::size_t> values = parse_values_list(values_csv);

  fs::create_directories(out_dir);
  std::vector<std::string> sweep_cols = {"axis", "value"};
  for (const auto& c : stats_columns()) sweep_cols.push_back(c);
  CsvWriter sweep_csv((fs::path(out_dir) / "sweep_stats.csv").string(),
                      sweep_cols);
  CsvWriter plot_csv((fs::path(out_dir) / "plot_data.csv").string(),
                     {"x", "mean_regret", "mean_minus_stderr",
                      "mean_plus_stderr", "theoretical_bound"});

  std::vector<SweepPoint> points;
  std::optional<RunPlan> first_plan;
  for (const std::size_t v : values) {
    const RunPlan plan = build_plan(cfg, {{axis, static_cast<double>(v)}});
    const MonteCarloResult mc =
        run_monte_carlo(plan.source, plan.spec, plan.game, opts.threads);
    if (!first_plan) first_plan = plan;

    SweepPoint pt;
    pt.x = static_cast<double>(v);
    pt.stats = mc.stats;
    pt.bound = plan.bound;
    pt.resolved_mode = plan.spec.mode;
    points.push_back(pt);

    std::vector<std::string> row = {to_string(axis), std::to_string(v)};
    for (const auto& c : stats_row(plan, mc.stats)) row.push_back(c);
    sweep_csv.write_row(row);
    plot_csv.write_row(
        {format_double(pt.x), format_double(mc.stats.mean_regret),
         format_double(mc.stats.mean_regret - mc.stats.stderr_regret),
         format_double(mc.stats.mean_regret + mc.stats.stderr_regret),
         format_double(plan.bound)});

    std::cout << to_string(axis) << "=" << v
              << " mode=" << to_string(plan.spec.mode)
              << " mean_regret=" << format_double(mc.stats.mean_regret)
              << " stderr=" << format_double(mc.stats.stderr_regret) << "\n";
  }

  // Log-log fit of mean regret against the sweep axis, plus a two-segment
  // breakpoint search when the extra-budget axis has enough points for one.
  const std::string nan = "nan";
  std::string slope = nan, slope_se = nan;
  std::string brk = nan, left = nan, right = nan;
  std::vector<std::pair<double, double>> xy;
  for (const auto& p : points) xy.emplace_back(p.x, p.stats.mean_regret);
  try {
    const FitResult fit = fit_loglog_slope(xy);
    slope = format_double(fit.slope);
    slope_se = format_double(fit.slope_stderr);
  } catch (const Error&) {
  }
  if (axis == SweepAxis::EXTRA_BUDGET_B_EX && points.size() >= 6) {
    std::vector<double> grid;
    for (const auto& p : points) grid.push_back(p.x);
    try {
      const PhaseTransition pt = detect_phase_transition(xy, grid);
      brk = format_double(pt.breakpoint);
      left = format_double(pt.left_slope);
      right = format_double(pt.right_slope);
    } catch (const Error&) {
    }
  }
  {
    CsvWriter fit_csv((fs::path(out_dir) / "fit.csv").string(),
                      {"axis", "points", "slope", "slope_stderr", "breakpoint",
                       "left_slope", "right_slope"});
    fit_csv.write_row({to_string(axis), std::to_string(points.size()), slope,
                       slope_se, brk, left, right});
  }

  std::ostringstream extra;
  extra << "axis = " << to_string(axis) << "\n";
  extra << "values =";
  for (const auto v : values) extra << " " << v;
  extra << "\n";
  extra << "fit_slope = " << slope << "\n";
  write_meta_file(fs::path(out_dir) / "meta.txt", cfg, cfg.learner.mode,
                  *first_plan, extra.str());

  std::cout << "fit slope=" << slope << " over " << points.size()
            << " points; wrote "
            << (fs::path(out_dir) / "sweep_stats.csv").string() << "\n";
  return 0;
}

int cmd_verify(std::size_t marginal_runs) {
  const auto results = run_all_checks(marginal_runs);
  bool all = true;
  for (const auto& r : results) {
    std::cout << (r.pass ? "[PASS] " : "[FAIL] ") << r.name << ": " << r.detail
              << "\n";
    all = all && r.pass;
  }
  std::cout << (all ? "all checks passed" : "some checks FAILED") << "\n";
  return all ? 0 : 1;
}

int cmd_gen_instance(const CommonOpts& opts, const std::string& out_file) {
  RunConfig cfg = load_with_overrides(opts);
  auto& a = cfg.adversary;
  if (a.generator == "file") {
    throw ParseError("gen-instance: generator=file has nothing to generate");
  }
  if (a.epsilon && *a.epsilon == "regime") {
    throw ParseError(
        "gen-instance: epsilon=regime depends on a run budget; give a number");
  }
  if (opts.seed_set) a.seed = opts.seed;
  a.seed_policy = InstanceSeedPolicy::FIXED;

  double epsilon = std::numeric_limits<double>::quiet_NaN();
  double sigma = std::numeric_limits<double>::quiet_NaN();
  std::size_t T = 0, K = 0;
  AdversarySource source =
      detail::build_adversary(a, 0, &epsilon, &sigma, &T, &K);
  const LossMatrix m = source.realize(0);

  std::vector<std::pair<std::string, std::string>> meta;
  meta.emplace_back("generator", a.generator);
  meta.emplace_back("seed", std::to_string(a.seed));
  if (std::isfinite(epsilon)) meta.emplace_back("epsilon", format_double(epsilon));
  if (std::isfinite(sigma)) meta.emplace_back("sigma", format_double(sigma));
  if (a.gap) meta.emplace_back("gap", format_double(*a.gap));
  if (a.base) meta.emplace_back("base", format_double(*a.base));

  const std::string out_dir = resolve_out_dir(opts.out_dir_flag, cfg);
  fs::create_directories(out_dir);
  const fs::path out_path = out_file.empty()
                                ? fs::path(out_dir) / "instance.csv"
                                : fs::path(out_file);
  if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
  save_instance(m, out_path.string(), meta);
  std::cout << "wrote " << out_path.string() << " (T=" << m.T << ", K=" << m.K
            << ")\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "swob: batched online learning with switching costs under "
      "observation budgets"};
  app.require_subcommand(1);

  CommonOpts opts;
  std::string axis_name;
  std::string values_csv;
  std::string gen_out;
  std::size_t marginal_runs = 100000;

  auto add_common = [&](CLI::App* sub, bool needs_config) {
    auto* c = sub->add_option("--config", opts.config_path,
                              "path to a run configuration file");
    if (needs_config) c->required();
    sub->add_option("--out-dir", opts.out_dir_flag,
                    "output directory (overrides SWOB_OUT_DIR and config)");
    sub->add_option("--seed", opts.seed, "override engine base_seed")
        ->each([&](const std::string&) { opts.seed_set = true; });
    sub->add_option("--reps", opts.reps, "override engine repetitions")
        ->each([&](const std::string&) { opts.reps_set = true; });
    sub->add_option("--threads", opts.threads, "worker threads")
        ->check(CLI::Range(std::size_t{1}, std::size_t{256}));
  };

  auto* run = app.add_subcommand("run", "execute one configured experiment");
  add_common(run, true);
  run->add_flag("--export-trajectories", opts.export_trajectories,
                "also write per-round actions to trajectories.csv");

  auto* sweep =
      app.add_subcommand("sweep", "run the experiment along an axis");
  add_common(sweep, true);
  sweep
      ->add_option("--axis", axis_name,
                   "BUDGET_B, EXTRA_BUDGET_B_EX, or HORIZON_T")
      ->required();
  sweep->add_option("--values", values_csv, "comma-separated axis values")
      ->required();

  auto* verify = app.add_subcommand("verify", "run built-in self checks");
  verify->add_option("--marginal-runs", marginal_runs,
                     "samples for the Monte Carlo marginal check");

  auto* gen =
      app.add_subcommand("gen-instance", "write a loss matrix instance file");
  add_common(gen, true);
  gen->add_option("--out", gen_out,
                  "output CSV path (default <out-dir>/instance.csv)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (run->parsed()) return cmd_run(opts);
    if (sweep->parsed()) return cmd_sweep(opts, axis_name, values_csv);
    if (verify->parsed()) return cmd_verify(marginal_runs);
    if (gen->parsed()) return cmd_gen_instance(opts, gen_out);
  } catch (const ParseError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const BudgetViolation& e) {
    std::cerr << "budget violation: " << e.what() << "\n";
    return 4;
  } catch (const InsufficientData& e) {
    std::cerr << "insufficient data: " << e.what() << "\n";
    return 5;
  } catch (const SpecError& e) {
    std::cerr << "infeasible schedule: " << e.what() << "\n";
    return 3;
  } catch (const DomainError& e) {
    std::cerr << "domain error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
