#pragma once

// Value types shared by the whole library: loss matrices, resolved learner
// schedules, the observation ledger, trajectories, and per-run results.
// All of these are set up once and then treated as read-only.

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "swob/error.hpp"

namespace swob {

// Nearest point of [0, 1]. Rejects NaN instead of guessing.
inline double clip_unit(double x) {
  if (std::isnan(x)) throw DomainError("clip_unit: NaN input");
  if (x < 0.0) return 0.0;
  if (x > 1.0) return 1.0;
  return x;
}

// A full loss table: K arms over T rounds, entries in [0, 1], row-major.
// Generators that clip may keep the pre-clip values in `raw`; planted
// instances record their best arm in `optimal_action`.
struct LossMatrix {
  std::size_t T = 0;
  std::size_t K = 0;
  std::vector<double> values;
  std::vector<double> raw;  // empty, or exactly T*K pre-clip entries
  std::optional<std::size_t> optimal_action;

  double at(std::size_t t, std::size_t k) const { return values[t * K + k]; }
  double raw_at(std::size_t t, std::size_t k) const { return raw[t * K + k]; }
  bool has_raw() const { return !raw.empty(); }
};

// Checks every LossMatrix invariant; throws DomainError naming the first
// offending entry. Generators and loaders both funnel through this.
inline void validate(const LossMatrix& m) {
  if (m.K < 2) throw DomainError("loss matrix: need at least 2 arms");
  if (m.T < m.K) {
    throw DomainError("loss matrix: need T >= K (got T=" +
                      std::to_string(m.T) + ", K=" + std::to_string(m.K) +
                      ")");
  }
  if (m.values.size() != m.T * m.K) {
    throw DomainError("loss matrix: values size " +
                      std::to_string(m.values.size()) + " != T*K");
  }
  for (std::size_t i = 0; i < m.values.size(); ++i) {
    const double v = m.values[i];
    if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
      throw DomainError("loss matrix: entry at t=" +
                        std::to_string(i / m.K + 1) + ", k=" +
                        std::to_string(i % m.K) + " is outside [0,1]");
    }
  }
  if (!m.raw.empty()) {
    if (m.raw.size() != m.values.size()) {
      throw DomainError("loss matrix: raw size mismatch");
    }
    for (std::size_t i = 0; i < m.raw.size(); ++i) {
      if (std::isnan(m.raw[i])) {
        throw DomainError("loss matrix: raw entry at index " +
                          std::to_string(i) + " is NaN");
      }
      if (m.values[i] != clip_unit(m.raw[i])) {
        throw DomainError("loss matrix: values/raw clip mismatch at t=" +
                          std::to_string(i / m.K + 1) + ", k=" +
                          std::to_string(i % m.K));
      }
    }
  }
  if (m.optimal_action && *m.optimal_action >= m.K) {
    throw DomainError("loss matrix: optimal_action out of range");
  }
}

inline LossMatrix make_loss_matrix(std::size_t T, std::size_t K,
                                   std::vector<double> values,
                                   std::vector<double> raw = {},
                                   std::optional<std::size_t> optimal = {}) {
  LossMatrix m{T, K, std::move(values), std::move(raw), optimal};
  validate(m);
  return m;
}

// How the learner observes losses.
//   FULL:   the whole loss row at one sampled round per batch.
//   FLEX:   a uniform M-subset of arms at one sampled round per batch.
//   BANDIT: only the played arm at one sampled round per batch.
enum class FeedbackMode { FULL, FLEX, BANDIT };

inline const char* to_string(FeedbackMode m) {
  switch (m) {
    case FeedbackMode::FULL: return "full";
    case FeedbackMode::FLEX: return "flex";
    case FeedbackMode::BANDIT: return "bandit";
  }
  return "?";
}

inline FeedbackMode feedback_mode_from_string(const std::string& s) {
  if (s == "full") return FeedbackMode::FULL;
  if (s == "flex") return FeedbackMode::FLEX;
  if (s == "bandit") return FeedbackMode::BANDIT;
  throw ParseError("unknown feedback mode: " + s);
}

// A fully resolved, runnable schedule. Produced by the resolvers in
// learner.hpp; `batches` and `batch_len` are already integer-adjusted.
struct AlgorithmSpec {
  FeedbackMode mode = FeedbackMode::FULL;
  std::size_t batches = 0;    // number of batches actually played
  std::size_t batch_len = 0;  // rounds per batch
  double eta = 0.0;           // learning rate
  bool shrinking_dartboard = false;  // keep-resample switching control
  std::size_t obs_per_batch = 1;     // arms observed per batch
  bool switching_costs_enabled = true;
  std::size_t planned_budget = 0;  // the budget the resolver worked from
};

inline void validate(const AlgorithmSpec& s) {
  if (s.batches == 0) throw SpecError("spec: zero batches");
  if (s.batch_len == 0) throw SpecError("spec: zero batch length");
  if (!(s.eta > 0.0) || !std::isfinite(s.eta)) {
    throw SpecError("spec: eta must be positive and finite");
  }
  if (s.obs_per_batch == 0) throw SpecError("spec: zero observations per batch");
  if (s.batches * s.obs_per_batch > s.planned_budget) {
    throw SpecError("spec: planned observations " +
                    std::to_string(s.batches * s.obs_per_batch) +
                    " exceed budget " + std::to_string(s.planned_budget));
  }
}

// Record of every observation charged against a budget. charge() refuses to
// overspend, refuses duplicate (t, k) charges within a round, and expects
// rounds in nondecreasing order, which is how the engine plays them.
struct BudgetLedger {
  std::size_t capacity = 0;
  std::vector<std::pair<std::size_t, std::size_t>> entries;  // (t, k)

  std::size_t used() const { return entries.size(); }

  void charge(std::size_t t, std::size_t k) {
    if (entries.size() >= capacity) {
      throw BudgetViolation("observation budget exhausted: capacity " +
                            std::to_string(capacity) +
                            " reached before charging round " +
                            std::to_string(t + 1));
    }
    if (!entries.empty()) {
      const auto& last = entries.back();
      if (t < last.first) {
        throw DomainError("ledger: rounds must be charged in order");
      }
      if (t == last.first) {
        for (auto it = entries.rbegin();
             it != entries.rend() && it->first == t; ++it) {
          if (it->second == k) {
            throw DomainError("ledger: duplicate charge for round " +
                              std::to_string(t + 1) + ", arm " +
                              std::to_string(k));
          }
        }
      }
    }
    entries.emplace_back(t, k);
  }
};

// Everything a single run produced, beyond the scalar summary.
struct Trajectory {
  std::vector<std::size_t> actions;                    // length T
  std::vector<std::size_t> batch_obs_rounds;           // sampled round per batch
  std::vector<std::vector<std::size_t>> batch_obs_sets;  // arms observed
  std::vector<std::vector<double>> batch_estimates;      // loss estimate per batch
};

struct RunRecord {
  double loss_regret = 0.0;
  std::size_t switch_count = 0;
  double total_regret = 0.0;
  std::size_t observations_used = 0;
  std::size_t best_fixed_action = 0;
  std::uint64_t seed = 0;
};

// Regret of an action sequence against the best fixed arm in hindsight.
// Ties between arms go to the lowest index. The first action is free; a
// switch is counted at each t >= 2 with X_t != X_{t-1}. switch_count is
// always reported; it only enters total_regret when costs are enabled.
inline RunRecord compute_regret(const LossMatrix& losses,
                                const std::vector<std::size_t>& actions,
                                bool switching_costs_enabled) {
  if (actions.empty()) throw DomainError("compute_regret: empty action sequence");
  if (actions.size() != losses.T) {
    throw DomainError("compute_regret: " + std::to_string(actions.size()) +
                      " actions for T=" + std::to_string(losses.T));
  }

  double played = 0.0;
  std::size_t switches = 0;
  std::vector<double> arm_totals(losses.K, 0.0);
  for (std::size_t t = 0; t < losses.T; ++t) {
    const std::size_t a = actions[t];
    if (a >= losses.K) {
      throw DomainError("compute_regret: action out of range at round " +
                        std::to_string(t + 1));
    }
    played += losses.at(t, a);
    if (t > 0 && a != actions[t - 1]) ++switches;
    const double* row = losses.values.data() + t * losses.K;
    for (std::size_t k = 0; k < losses.K; ++k) arm_totals[k] += row[k];
  }

  std::size_t best = 0;
  for (std::size_t k = 1; k < losses.K; ++k) {
    if (arm_totals[k] < arm_totals[best]) best = k;
  }

  RunRecord rec;
  rec.loss_regret = played - arm_totals[best];
  rec.switch_count = switches;
  rec.total_regret = rec.loss_regret +
                     (switching_costs_enabled
                          ? static_cast<double>(switches)
                          : 0.0);
  rec.best_fixed_action = best;
  return rec;
}

}  // namespace swob
