#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "swob/adversary.hpp"
#include "swob/csv.hpp"

using namespace swob;
namespace fs = std::filesystem;

namespace {

const fs::path kWork = fs::temp_directory_path() / "swob_cli_tests";

int run_cli(const std::string& args) {
  const std::string cmd = std::string("\"") + SWOB_CLI_PATH + "\" " + args +
                          " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  REQUIRE(rc != -1);
  return WEXITSTATUS(rc);
}

fs::path write_config(const std::string& name, const std::string& text) {
  fs::create_directories(kWork);
  const fs::path path = kWork / name;
  std::ofstream out(path);
  out << text;
  return path;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

const char* kRunConfig = R"([adversary]
generator = stochastic_gap
T = 400
K = 4
gap = 0.25
base = 0.3

[learner]
mode = full
budget = 80

[engine]
repetitions = 5
base_seed = 42
)";

}  // namespace

TEST_CASE("cli run writes stats and metadata") {
  const fs::path cfg = write_config("run.cfg", kRunConfig);
  const fs::path out = kWork / "run_out";
  fs::remove_all(out);
  REQUIRE(run_cli("run --config " + cfg.string() + " --out-dir " +
                  out.string()) == 0);

  const CsvTable stats = read_csv((out / "stats.csv").string());
  REQUIRE(stats.header ==
          std::vector<std::string>{
              "mode", "setting", "T", "K", "budget", "repetitions",
              "base_seed", "mean_regret", "stderr_regret", "mean_switches",
              "stderr_switches", "max_regret", "mean_observations"});
  REQUIRE(stats.rows.size() == 1);
  CHECK(stats.rows[0][0] == "full");
  CHECK(stats.rows[0][2] == "400");
  CHECK(stats.rows[0][5] == "5");
  // Every observation of the full schedule is charged: 20 batches * 4 arms.
  CHECK(parse_double(stats.rows[0][12], 2) == 80.0);

  const std::string meta = slurp(out / "meta.txt");
  CHECK(meta.find("mode = full") != std::string::npos);
  CHECK(meta.find("batches = 20") != std::string::npos);
  CHECK(meta.find("# config") != std::string::npos);
  CHECK(meta.find("gap = 0.25") != std::string::npos);  // verbatim echo
  CHECK_FALSE(fs::exists(out / "trajectories.csv"));
}

TEST_CASE("cli runs are byte-identical across reruns and thread counts") {
  const fs::path cfg = write_config("run.cfg", kRunConfig);
  const fs::path a = kWork / "rerun_a";
  const fs::path b = kWork / "rerun_b";
  fs::remove_all(a);
  fs::remove_all(b);
  REQUIRE(run_cli("run --config " + cfg.string() + " --out-dir " + a.string() +
                  " --threads 1") == 0);
  REQUIRE(run_cli("run --config " + cfg.string() + " --out-dir " + b.string() +
                  " --threads 3") == 0);
  CHECK(slurp(a / "stats.csv") == slurp(b / "stats.csv"));
  CHECK(slurp(a / "meta.txt") == slurp(b / "meta.txt"));
}

TEST_CASE("cli seed and reps flags override the config") {
  const fs::path cfg = write_config("run.cfg", kRunConfig);
  const fs::path a = kWork / "override_a";
  fs::remove_all(a);
  REQUIRE(run_cli("run --config " + cfg.string() + " --out-dir " + a.string() +
                  " --seed 7 --reps 3") == 0);
  const CsvTable stats = read_csv((a / "stats.csv").string());
  CHECK(stats.rows[0][5] == "3");
  CHECK(stats.rows[0][6] == "7");
}

TEST_CASE("cli exports trajectories when asked") {
  const fs::path cfg = write_config("run.cfg", kRunConfig);
  const fs::path out = kWork / "traj_out";
  fs::remove_all(out);
  REQUIRE(run_cli("run --config " + cfg.string() + " --out-dir " +
                  out.string() + " --reps 2 --export-trajectories") == 0);
  const CsvTable traj = read_csv((out / "trajectories.csv").string());
  REQUIRE(traj.header == std::vector<std::string>{"rep", "t", "action"});
  // 2 repetitions x 400 rounds.
  CHECK(traj.rows.size() == 800);
  CHECK(traj.rows[0][0] == "0");
  CHECK(traj.rows[0][1] == "1");
  CHECK(traj.rows[799][0] == "1");
  CHECK(traj.rows[799][1] == "400");
}

TEST_CASE("cli sweep writes per-point stats, plot data, and a fit") {
  const fs::path cfg = write_config("run.cfg", kRunConfig);
  const fs::path out = kWork / "sweep_out";
  fs::remove_all(out);
  REQUIRE(run_cli("sweep --config " + cfg.string() + " --out-dir " +
                  out.string() +
                  " --reps 3 --axis BUDGET_B --values 16,32,64,128") == 0);

  const CsvTable sweep = read_csv((out / "sweep_stats.csv").string());
  REQUIRE(sweep.rows.size() == 4);
  CHECK(sweep.header[0] == "axis");
  CHECK(sweep.rows[0][0] == "BUDGET_B");
  CHECK(sweep.rows[0][1] == "16");
  CHECK(sweep.rows[3][1] == "128");

  const CsvTable plot = read_csv((out / "plot_data.csv").string());
  REQUIRE(plot.header ==
          std::vector<std::string>{"x", "mean_regret", "mean_minus_stderr",
                                   "mean_plus_stderr", "theoretical_bound"});
  REQUIRE(plot.rows.size() == 4);
  // The error band straddles the mean.
  const double mean = parse_double(plot.rows[0][1], 2);
  CHECK(parse_double(plot.rows[0][2], 2) <= mean);
  CHECK(parse_double(plot.rows[0][3], 2) >= mean);

  const CsvTable fit = read_csv((out / "fit.csv").string());
  REQUIRE(fit.header ==
          std::vector<std::string>{"axis", "points", "slope", "slope_stderr",
                                   "breakpoint", "left_slope", "right_slope"});
  REQUIRE(fit.rows.size() == 1);
  CHECK(fit.rows[0][1] == "4");
  CHECK(fit.rows[0][2] != "nan");       // 4 points is enough for a slope
  CHECK(fit.rows[0][4] == "nan");       // but not a budget-axis breakpoint
}

TEST_CASE("cli sweep with two points reports no slope") {
  const fs::path cfg = write_config("run.cfg", kRunConfig);
  const fs::path out = kWork / "sweep_small";
  fs::remove_all(out);
  REQUIRE(run_cli("sweep --config " + cfg.string() + " --out-dir " +
                  out.string() + " --reps 2 --axis BUDGET_B --values 16,64") ==
          0);
  const CsvTable fit = read_csv((out / "fit.csv").string());
  CHECK(fit.rows[0][2] == "nan");
}

TEST_CASE("cli gen-instance emits a loadable instance file") {
  const fs::path cfg = write_config("gen.cfg", R"([adversary]
generator = hard_instance
T = 32
K = 3
epsilon = 0.05
sigma = 0.1
seed = 9
)");
  const fs::path out = kWork / "gen_out";
  fs::remove_all(out);
  REQUIRE(run_cli("gen-instance --config " + cfg.string() + " --out-dir " +
                  out.string()) == 0);
  const LoadedInstance inst = load_instance((out / "instance.csv").string());
  CHECK(inst.matrix.T == 32);
  CHECK(inst.matrix.K == 3);
  CHECK(inst.matrix.has_raw());
  bool saw_seed = false;
  for (const auto& [k, v] : inst.meta) {
    if (k == "seed" && v == "9") saw_seed = true;
  }
  CHECK(saw_seed);
}

TEST_CASE("cli run can replay a generated instance file") {
  const fs::path gen_cfg = write_config("gen2.cfg", R"([adversary]
generator = stochastic_gap
T = 100
K = 4
gap = 0.3
seed = 3
)");
  const fs::path out = kWork / "replay";
  fs::remove_all(out);
  REQUIRE(run_cli("gen-instance --config " + gen_cfg.string() + " --out-dir " +
                  out.string()) == 0);

  const fs::path run_cfg = write_config("replay.cfg",
                                        std::string(R"([adversary]
generator = file
path = )") + (out / "instance.csv").string() +
                                            R"(

[learner]
mode = full
budget = 40

[engine]
repetitions = 2
)");
  REQUIRE(run_cli("run --config " + run_cfg.string() + " --out-dir " +
                  out.string()) == 0);
  const CsvTable stats = read_csv((out / "stats.csv").string());
  CHECK(stats.rows[0][2] == "100");
  CHECK(stats.rows[0][3] == "4");
}

TEST_CASE("cli exit codes distinguish failure classes") {
  const fs::path bad = write_config("bad.cfg", "[adversary]\nbogus = 1\n");
  CHECK(run_cli("run --config " + bad.string()) == 2);

  // Feasible parse, infeasible schedule: bandit budgets cannot exceed T.
  const fs::path infeasible = write_config("infeasible.cfg", R"([adversary]
generator = stochastic_gap
T = 100
K = 4
gap = 0.2

[learner]
mode = bandit
budget = 500
)");
  CHECK(run_cli("run --config " + infeasible.string() + " --out-dir " +
                (kWork / "never").string()) == 3);

  CHECK(run_cli("run --config " + (kWork / "missing.cfg").string()) == 2);
  CHECK(run_cli("run") == 2);           // missing required --config
  CHECK(run_cli("plot --config x") == 2);  // unknown subcommand

  // Output directory collides with an existing file.
  const fs::path blocker = kWork / "blocker";
  std::ofstream(blocker) << "occupied";
  const fs::path cfg = write_config("run.cfg", kRunConfig);
  CHECK(run_cli("run --config " + cfg.string() + " --out-dir " +
                blocker.string()) == 1);
}

TEST_CASE("cli out-dir precedence: flag beats environment beats config") {
  const fs::path flag_dir = kWork / "prec_flag";
  const fs::path env_dir = kWork / "prec_env";
  const fs::path cfg_dir = kWork / "prec_cfg";
  fs::remove_all(flag_dir);
  fs::remove_all(env_dir);
  fs::remove_all(cfg_dir);

  const fs::path cfg = write_config(
      "prec.cfg", std::string(kRunConfig) + "\n[output]\nout_dir = " +
                      cfg_dir.string() + "\n");

  //

  const std::string env_prefix = "SWOB_OUT_DIR=" + env_dir.string() + " ";
  const std::string base_cmd = std::string("\"") + SWOB_CLI_PATH + "\"" +
                               " run --config " + cfg.string() +
                               " >/dev/null 2>&1";
  REQUIRE(std::system((env_prefix + base_cmd).c_str()) == 0);
  CHECK(fs::exists(env_dir / "stats.csv"));
  CHECK_FALSE(fs::exists(cfg_dir / "stats.csv"));

  REQUIRE(run_cli("run --config " + cfg.string() + " --out-dir " +
                  flag_dir.string()) == 0);
  CHECK(fs::exists(flag_dir / "stats.csv"));

  REQUIRE(run_cli("run --config " + cfg.string()) == 0);
  CHECK(fs::exists(cfg_dir / "stats.csv"));
}

TEST_CASE("cli verify passes its own checks") {
  // Small Monte Carlo load keeps this test quick; the acceptance suite
  // runs the full-size version.
  CHECK(run_cli("verify --marginal-runs 20000") == 0);
}
