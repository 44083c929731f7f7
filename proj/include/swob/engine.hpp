#pragma once

// Plays resolved schedules against loss matrices and aggregates repeated
// runs. Single runs are deterministic in their seed; Monte Carlo results
// are deterministic in (base_seed, repetitions) regardless of thread count,
// because repetition r always uses seed split_seed(base_seed, r) and the
// aggregation always walks repetitions in index order.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <mutex>
#include <thread>
#include <vector>

#include "swob/adversary.hpp"
#include "swob/core.hpp"
#include "swob/error.hpp"
#include "swob/learner.hpp"
#include "swob/rng.hpp"

namespace swob {

// What the observation budget pays for.
//   TOTAL_BUDGET: every observation is charged.
//   EXTRA_BUDGET: observing the played arm is free bandit feedback; only
//                 observations of other arms are charged.
enum class BudgetSetting { TOTAL_BUDGET, EXTRA_BUDGET };

inline const char* to_string(BudgetSetting s) {
  return s == BudgetSetting::TOTAL_BUDGET ? "total_budget" : "extra_budget";
}

inline BudgetSetting budget_setting_from_string(const std::string& s) {
  if (s == "total_budget") return BudgetSetting::TOTAL_BUDGET;
  if (s == "extra_budget") return BudgetSetting::EXTRA_BUDGET;
  throw ParseError("unknown budget setting: " + s);
}

struct GameConfig {
  std::size_t budget = 0;  // ledger capacity: B, or B_ex in the extra setting
  BudgetSetting setting = BudgetSetting::TOTAL_BUDGET;
  std::size_t repetitions = 1;
  std::uint64_t base_seed = 0;
};

// Sub-stream salts within one repetition.
inline constexpr std::uint64_t kSaltInstance = 1;
inline constexpr std::uint64_t kSaltPlay = 2;

inline std::uint64_t repetition_seed(std::uint64_t base_seed, std::size_t r) {
  return split_seed(base_seed, r);
}

struct GameResult {
  RunRecord record;
  Trajectory trajectory;
};

// Plays one run. Draw order per batch is fixed: sampled round, observation
// set, keep coin, resample draw; the initial arm is drawn before batch 1.
// Rounds beyond batches * batch_len keep the final batch's arm.
inline GameResult run_game(const LossMatrix& losses, const AlgorithmSpec& spec,
                           const GameConfig& config, std::uint64_t seed) {
  validate(spec);
  const std::size_t T = losses.T;
  const std::size_t K = losses.K;
  const std::size_t N = spec.batches;
  const std::size_t tau = spec.batch_len;
  if (N * tau > T) {
    throw DomainError("run_game: schedule covers " + std::to_string(N * tau) +
                      " rounds but the instance has only " + std::to_string(T));
  }
  if (spec.obs_per_batch > K) {
    throw DomainError("run_game: schedule observes more arms than exist");
  }
  if (spec.mode == FeedbackMode::FULL && spec.obs_per_batch != K) {
    throw DomainError("run_game: full feedback must observe all K arms");
  }

  Rng rng(split_seed(seed, kSaltPlay));
  BudgetLedger ledger{config.budget, {}};
  LearnerState state = init_learner(K, rng);

  GameResult out;
  out.trajectory.actions.resize(T);
  out.trajectory.batch_obs_rounds.reserve(N);
  out.trajectory.batch_obs_sets.reserve(N);
  out.trajectory.batch_estimates.reserve(N);

  std::vector<double> observed(spec.obs_per_batch);
  for (std::size_t b = 0; b < N; ++b) {
    const std::size_t start = b * tau;
    for (std::size_t t = start; t < start + tau; ++t) {
      out.trajectory.actions[t] = state.current_action;
    }

    const std::size_t u = start + rng.uniform_below(tau);
    const auto obs_set = choose_observation_set(
        spec.mode, K, spec.obs_per_batch, state.current_action, rng);
    for (std::size_t i = 0; i < obs_set.size(); ++i) {
      const std::size_t k = obs_set[i];
      const bool free_bandit_obs = config.setting == BudgetSetting::EXTRA_BUDGET &&
                                   k == state.current_action;
      if (!free_bandit_obs) ledger.charge(u, k);
      observed[i] = losses.at(u, k);
    }

    const auto estimate =
        estimate_loss(spec.mode, obs_set, observed, spec.obs_per_batch, K,
                      state.distribution, state.current_action);
    const double keep = sd_keep_probability(state, estimate, spec.eta,
                                            spec.shrinking_dartboard);
    state = omd_update(state, estimate, spec.eta);

    out.trajectory.batch_obs_rounds.push_back(u);
    out.trajectory.batch_obs_sets.push_back(obs_set);
    out.trajectory.batch_estimates.push_back(estimate);

    if (b + 1 < N) {
      state = advance(state, next_action(state, keep, rng));
    }
  }

  // Leftover rounds: hold the final arm, no switch, no observations.
  for (std::size_t t = N * tau; t < T; ++t) {
    out.trajectory.actions[t] = state.current_action;
  }

  out.record =
      compute_regret(losses, out.trajectory.actions, spec.switching_costs_enabled);
  out.record.observations_used = ledger.used();
  out.record.seed = seed;
  return out;
}

// Where each repetition's loss matrix comes from. Generator sources draw a
// fresh instance per repetition unless pinned to their own fixed seed.
enum class InstanceSeedPolicy { PER_REPETITION, FIXED };

struct AdversarySource {
  enum class Kind { FIXED_MATRIX, HARD, STOCHASTIC_GAP };
  Kind kind = Kind::FIXED_MATRIX;
  LossMatrix matrix;          // FIXED_MATRIX
  HardInstanceParams hard;    // HARD
  StochasticGapParams gap;    // STOCHASTIC_GAP
  InstanceSeedPolicy seed_policy = InstanceSeedPolicy::PER_REPETITION;

  static AdversarySource fixed(LossMatrix m) {
    AdversarySource s;
    s.kind = Kind::FIXED_MATRIX;
    s.matrix = std::move(m);
    s.seed_policy = InstanceSeedPolicy::FIXED;
    return s;
  }
  static AdversarySource hard_instance(HardInstanceParams p,
                                       InstanceSeedPolicy policy =
                                           InstanceSeedPolicy::PER_REPETITION) {
    AdversarySource s;
    s.kind = Kind::HARD;
    s.hard = p;
    s.seed_policy = policy;
    return s;
  }
  static AdversarySource stochastic_gap(StochasticGapParams p,
                                        InstanceSeedPolicy policy =
                                            InstanceSeedPolicy::PER_REPETITION) {
    AdversarySource s;
    s.kind = Kind::STOCHASTIC_GAP;
    s.gap = p;
    s.seed_policy = policy;
    return s;
  }

  bool fresh_per_repetition() const {
    return kind != Kind::FIXED_MATRIX &&
           seed_policy == InstanceSeedPolicy::PER_REPETITION;
  }

  // Realizes the instance; generator sources under the per-repetition
  // policy take their seed from the repetition, otherwise they use the
  // seed stored in their own parameters.
  LossMatrix realize(std::uint64_t instance_seed) const {
    switch (kind) {
      case Kind::FIXED_MATRIX:
        return matrix;
      case Kind::HARD: {
        HardInstanceParams p = hard;
        if (seed_policy == InstanceSeedPolicy::PER_REPETITION) {
          p.seed = instance_seed;
        }
        return generate_hard_instance(p);
      }
      case Kind::STOCHASTIC_GAP: {
        StochasticGapParams p = gap;
        if (seed_policy == InstanceSeedPolicy::PER_REPETITION) {
          p.seed = instance_seed;
        }
        return generate_stochastic_gap(p);
      }
    }
    throw DomainError("AdversarySource: unknown kind");
  }
};

struct AggregateStats {
  double mean_regret = 0.0;
  double stderr_regret = 0.0;
  double mean_switches = 0.0;
  double stderr_switches = 0.0;
  double max_regret = 0.0;
  double mean_observations = 0.0;
  std::size_t repetitions = 0;
};

struct MonteCarloResult {
  AggregateStats stats;
  std::vector<RunRecord> runs;           // indexed by repetition
  std::vector<Trajectory> trajectories;  // filled only when requested
};

namespace detail {

inline void aggregate_in_order(MonteCarloResult& result) {
  const std::size_t n = result.runs.size();
  double sum_r = 0.0, sum_s = 0.0, sum_o = 0.0, max_r = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    const RunRecord& rec = result.runs[r];
    sum_r += rec.total_regret;
    sum_s += static_cast<double>(rec.switch_count);
    sum_o += static_cast<double>(rec.observations_used);
    max_r = (r == 0) ? rec.total_regret : std::max(max_r, rec.total_regret);
  }
  AggregateStats& st = result.stats;
  st.repetitions = n;
  st.mean_regret = sum_r / n;
  st.mean_switches = sum_s / n;
  st.mean_observations = sum_o / n;
  st.max_regret = max_r;
  if (n > 1) {
    double ss_r = 0.0, ss_s = 0.0;
    for (const RunRecord& rec : result.runs) {
      const double dr = rec.total_regret - st.mean_regret;
      const double ds = static_cast<double>(rec.switch_count) - st.mean_switches;
      ss_r += dr * dr;
      ss_s += ds * ds;
    }
    st.stderr_regret = std::sqrt(ss_r / (n - 1)) / std::sqrt(double(n));
    st.stderr_switches = std::sqrt(ss_s / (n - 1)) / std::sqrt(double(n));
  }
}

}  // namespace detail

// Repeats run_game over independent repetitions and aggregates. Thread
// count only affects wall time: repetition r writes slot r, and the stats
// pass is serial over slots.
inline MonteCarloResult run_monte_carlo(const AdversarySource& source,
                                        const AlgorithmSpec& spec,
                                        const GameConfig& config,
                                        unsigned threads = 1,
                                        bool keep_trajectories = false) {
  if (config.repetitions == 0) {
    throw DomainError("run_monte_carlo: need at least one repetition");
  }
  const std::size_t reps = config.repetitions;

  MonteCarloResult result;
  result.runs.resize(reps);
  if (keep_trajectories) result.trajectories.resize(reps);

  // A shared instance is realized once; fresh-per-repetition sources are
  // realized inside the loop from the repetition's instance sub-seed.
  LossMatrix shared;
  const bool fresh = source.fresh_per_repetition();
  if (!fresh) shared = source.realize(0);

  auto run_range = [&](std::size_t lo, std::size_t hi) {
    for (std::size_t r = lo; r < hi; ++r) {
      const std::uint64_t rep_seed = repetition_seed(config.base_seed, r);
      GameResult game =
          fresh ? run_game(source.realize(split_seed(rep_seed, kSaltInstance)),
                           spec, config, rep_seed)
                : run_game(shared, spec, config, rep_seed);
      result.runs[r] = game.record;
      if (keep_trajectories) result.trajectories[r] = std::move(game.trajectory);
    }
  };

  const unsigned workers =
      std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(reps)));
  if (workers == 1) {
    run_range(0, reps);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    const std::size_t chunk = (reps + workers - 1) / workers;
    std::exception_ptr first_error;
    std::mutex error_mutex;
    for (unsigned w = 0; w < workers; ++w) {
      const std::size_t lo = std::min<std::size_t>(w * chunk, reps);
      const std::size_t hi = std::min<std::size_t>(lo + chunk, reps);
      pool.emplace_back([&, lo, hi] {
        try {
          run_range(lo, hi);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
  }

  detail::aggregate_in_order(result);
  return result;
}

}  // namespace swob
