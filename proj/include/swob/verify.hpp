#pragma once

// Built-in correctness checks, runnable from the CLI (`swob verify`) and
// reused by the test suite. Each check is independent and returns a
// CheckResult instead of throwing, so a failure report can list everything
// that is wrong at once.

#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "swob/adversary.hpp"
#include "swob/core.hpp"
#include "swob/engine.hpp"
#include "swob/learner.hpp"

namespace swob {

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

// Matches the estimate_loss signature so tests can inject deliberately
// broken estimators and confirm the check catches them.
using EstimatorFn = std::function<std::vector<double>(
    FeedbackMode, const std::vector<std::size_t>&, const std::vector<double>&,
    std::size_t, std::size_t, const std::vector<double>&, std::size_t)>;

namespace detail {

inline EstimatorFn default_estimator() {
  return [](FeedbackMode mode, const std::vector<std::size_t>& obs_set,
            const std::vector<double>& observed, std::size_t M, std::size_t K,
            const std::vector<double>& distribution, std::size_t action) {
    return estimate_loss(mode, obs_set, observed, M, K, distribution, action);
  };
}

inline std::vector<std::vector<std::size_t>> all_subsets(std::size_t K,
                                                         std::size_t M) {
  std::vector<std::vector<std::size_t>> out;
  for (std::uint32_t mask = 0; mask < (1u << K); ++mask) {
    if (std::popcount(mask) != static_cast<int>(M)) continue;
    std::vector<std::size_t> s;
    for (std::size_t k = 0; k < K; ++k) {
      if (mask & (1u << k)) s.push_back(k);
    }
    out.push_back(std::move(s));
  }
  return out;
}

// Hedge weight trajectory for a fixed loss matrix under full feedback with
// one round per batch: deterministic, so it doubles as the ground truth for
// the keep-or-resample marginal checks.
inline std::vector<std::vector<double>> hedge_weight_trajectory(
    const LossMatrix& losses, double eta, std::size_t batches) {
  std::vector<std::vector<double>> w(batches,
                                     std::vector<double>(losses.K, 0.0));
  std::vector<double> log_w(losses.K, 0.0);
  for (std::size_t b = 0; b < batches; ++b) {
    double max_log = log_w[0];
    for (double v : log_w) max_log = std::max(max_log, v);
    double total = 0.0;
    for (std::size_t k = 0; k < losses.K; ++k) {
      w[b][k] = std::exp(log_w[k] - max_log);
      total += w[b][k];
    }
    for (std::size_t k = 0; k < losses.K; ++k) w[b][k] /= total;
    for (std::size_t k = 0; k < losses.K; ++k) {
      log_w[k] -= eta * losses.at(b, k);
    }
  }
  return w;
}

}  // namespace detail

// The sampled-round estimator must be unbiased for the batch-mean loss
// vector: averaging the estimate over every sample round, every observation
// set, and (in bandit mode) every played arm recovers the true mean exactly.
inline CheckResult check_estimator_unbiased(FeedbackMode mode, std::size_t M,
                                            EstimatorFn fn = {}) {
  if (!fn) fn = detail::default_estimator();
  const std::size_t K = 3;
  const std::size_t tau = 2;
  const std::vector<std::vector<double>> batch = {{0.2, 0.7, 0.4},
                                                  {0.9, 0.1, 0.5}};
  const std::vector<double> distribution = {0.5, 0.3, 0.2};

  std::vector<double> truth(K, 0.0);
  for (std::size_t u = 0; u < tau; ++u) {
    for (std::size_t k = 0; k < K; ++k) truth[k] += batch[u][k] / tau;
  }

  std::vector<double> expect(K, 0.0);
  for (std::size_t u = 0; u < tau; ++u) {
    if (mode == FeedbackMode::BANDIT) {
      for (std::size_t a = 0; a < K; ++a) {
        const std::vector<std::size_t> obs = {a};
        const std::vector<double> seen = {batch[u][a]};
        const auto est = fn(mode, obs, seen, M, K, distribution, a);
        for (std::size_t k = 0; k < K; ++k) {
          expect[k] += distribution[a] * est[k] / tau;
        }
      }
    } else {
      const auto subsets = detail::all_subsets(K, M);
      for (const auto& obs : subsets) {
        std::vector<double> seen;
        for (std::size_t k : obs) seen.push_back(batch[u][k]);
        const auto est = fn(mode, obs, seen, M, K, distribution, 0);
        for (std::size_t k = 0; k < K; ++k) {
          expect[k] += est[k] / (tau * subsets.size());
        }
      }
    }
  }

  double worst = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    worst = std::max(worst, std::abs(expect[k] - truth[k]));
  }
  CheckResult r;
  std::ostringstream name;
  name << "estimator_unbiased_" << to_string(mode) << "_M" << M;
  r.name = name.str();
  r.pass = worst <= 1e-12;
  std::ostringstream d;
  d << "max deviation from batch mean = " << worst;
  r.detail = d.str();
  return r;
}

// With keep-or-resample enabled, the played arm's marginal distribution at
// every batch must equal the Hedge weights, even though consecutive actions
// are correlated. For a fixed full-information sequence the weights are
// deterministic, so the chain marginal can be propagated exactly:
//   P_{b+1}[k] = keep_k(b) P_b[k] + sum_j (1 - keep_j(b)) P_b[j] w_{b+1}[k].
inline CheckResult check_sd_marginal_exact() {
  const double eta = 0.5;
  const std::vector<std::vector<double>> losses = {
      {0.3, 0.7}, {0.9, 0.1}, {0.5, 0.5}};
  const std::size_t K = 2;
  const std::size_t N = 3;

  std::vector<double> flat;
  for (const auto& row : losses) {
    for (double v : row) flat.push_back(v);
  }
  const LossMatrix m = make_loss_matrix(N, K, flat);
  const auto w = detail::hedge_weight_trajectory(m, eta, N);

  std::vector<double> P = w[0];
  double worst = 0.0;
  for (std::size_t b = 0; b + 1 < N; ++b) {
    std::vector<double> next(K, 0.0);
    for (std::size_t j = 0; j < K; ++j) {
      const double keep = std::exp(-eta * losses[b][j]);
      next[j] += keep * P[j];
      for (std::size_t k = 0; k < K; ++k) {
        next[k] += (1.0 - keep) * P[j] * w[b + 1][k];
      }
    }
    P = next;
    for (std::size_t k = 0; k < K; ++k) {
      worst = std::max(worst, std::abs(P[k] - w[b + 1][k]));
    }
  }

  CheckResult r;
  r.name = "sd_marginal_exact";
  r.pass = worst <= 1e-12;
  std::ostringstream d;
  d << "max |P(A_b=k) - w_b[k]| = " << worst;
  r.detail = d.str();
  return r;
}

// Monte Carlo version of the marginal property against the real engine:
// empirical action frequencies at every batch stay within total-variation
// tolerance of the deterministic Hedge weights.
inline CheckResult check_sd_marginal_monte_carlo(std::size_t runs = 100000) {
  const std::size_t K = 5;
  const std::size_t N = 20;
  StochasticGapParams gp;
  gp.T = N;
  gp.K = K;
  gp.gap = 0.3;
  gp.base = 0.3;
  gp.optimal_action = 2;
  gp.seed = 17;
  const LossMatrix m = generate_stochastic_gap(gp);

  AlgorithmSpec spec;
  spec.mode = FeedbackMode::FULL;
  spec.batches = N;
  spec.batch_len = 1;
  spec.eta = 0.4;
  spec.shrinking_dartboard = true;
  spec.obs_per_batch = K;
  spec.planned_budget = N * K;

  GameConfig game;
  game.budget = N * K;
  game.setting = BudgetSetting::TOTAL_BUDGET;

  const auto w = detail::hedge_weight_trajectory(m, spec.eta, N);
  std::vector<std::vector<double>> freq(N, std::vector<double>(K, 0.0));
  for (std::size_t r = 0; r < runs; ++r) {
    const GameResult g = run_game(m, spec, game, split_seed(991, r));
    for (std::size_t b = 0; b < N; ++b) {
      freq[b][g.trajectory.actions[b * spec.batch_len]] += 1.0 / runs;
    }
  }

  double worst_tv = 0.0;
  for (std::size_t b = 0; b < N; ++b) {
    double tv = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      tv += std::abs(freq[b][k] - w[b][k]);
    }
    worst_tv = std::max(worst_tv, tv / 2.0);
  }

  CheckResult r;
  r.name = "sd_marginal_monte_carlo";
  r.pass = worst_tv <= 0.02;
  std::ostringstream d;
  d << "max TV(empirical, weights) over batches = " << worst_tv << " ("
    << runs << " runs)";
  r.detail = d.str();
  return r;
}

// Keep-or-resample also bounds how often the arm changes: the expected
// number of switches over the whole run is at most eta * batches.
inline CheckResult check_switch_bound() {
  StochasticGapParams gp;
  gp.T = 2000;
  gp.K = 4;
  gp.gap = 0.2;
  gp.base = 0.4;
  gp.optimal_action = 1;
  gp.seed = 5;

  const std::size_t B = 512;
  AlgorithmSpec spec = resolve_spec_full(gp.T, gp.K, B);

  GameConfig game;
  game.budget = B;
  game.setting = BudgetSetting::TOTAL_BUDGET;
  game.repetitions = 2000;
  game.base_seed = 20240501;

  AdversarySource source =
      AdversarySource::stochastic_gap(gp, InstanceSeedPolicy::FIXED);
  const MonteCarloResult mc = run_monte_carlo(source, spec, game);
  const double bound = spec.eta * spec.batches;

  CheckResult r;
  r.name = "switch_bound";
  r.pass = mc.stats.mean_switches <= bound;
  std::ostringstream d;
  d << "mean switches " << mc.stats.mean_switches << " vs bound eta*N = "
    << bound;
  r.detail = d.str();
  return r;
}

// The loss walk's index arithmetic: every round's parent strips the lowest
// set bit, so walk depth equals the population count of the round index.
inline CheckResult check_dyadic_tables() {
  bool pass = true;
  std::ostringstream d;
  for (std::size_t t = 1; t <= (1u << 16) && pass; ++t) {
    const std::size_t delta = delta_exponent(t);
    const std::size_t parent = dyadic_parent(t);
    if (parent + (std::size_t{1} << delta) != t || parent >= t) {
      pass = false;
      d << "parent identity fails at t=" << t;
      break;
    }
    const std::size_t expected_depth =
        static_cast<std::size_t>(std::popcount(static_cast<std::uint64_t>(t)));
    if (dyadic_depth(t) != expected_depth) {
      pass = false;
      d << "depth != popcount at t=" << t;
      break;
    }
    if (dyadic_depth(t) != dyadic_depth(parent) + 1 && parent != 0) {
      pass = false;
      d << "depth not incremental at t=" << t;
      break;
    }
  }
  if (pass &&
      (delta_exponent(12) != 2 || dyadic_parent(12) != 8 ||
       delta_exponent(7) != 0 || dyadic_parent(7) != 6 ||
       delta_exponent(1024) != 10 || dyadic_parent(1024) != 0)) {
    pass = false;
    d << "spot values disagree";
  }
  if (pass) d << "exhaustive up to t=65536";

  CheckResult r;
  r.name = "dyadic_tables";
  r.pass = pass;
  r.detail = d.str();
  return r;
}

inline std::vector<CheckResult> run_all_checks(std::size_t marginal_runs =
                                                   100000) {
  std::vector<CheckResult> out;
  out.push_back(check_dyadic_tables());
  out.push_back(check_estimator_unbiased(FeedbackMode::FULL, 3));
  out.push_back(check_estimator_unbiased(FeedbackMode::FLEX, 1));
  out.push_back(check_estimator_unbiased(FeedbackMode::FLEX, 2));
  out.push_back(check_estimator_unbiased(FeedbackMode::FLEX, 3));
  out.push_back(check_estimator_unbiased(FeedbackMode::BANDIT, 1));
  out.push_back(check_sd_marginal_exact());
  out.push_back(check_sd_marginal_monte_carlo(marginal_runs));
  out.push_back(check_switch_bound());
  return out;
}

}  // namespace swob
