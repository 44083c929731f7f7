#pragma once

// The batched exponential-weights learner and its schedule resolvers.
//
// Play proceeds in N batches of batch_len rounds. One action is held for a
// whole batch; at one uniformly sampled round per batch the learner observes
// some arms (all of them, a uniform M-subset, or just its own arm), builds
// an importance-weighted loss estimate, and feeds it to a multiplicative
// update on log-domain weights. Action resampling between batches follows
// the keep-resample rule: keep the current arm with probability
// exp(-eta * estimate[current]) and otherwise draw fresh from the updated
// weights, which preserves the per-batch action marginal while cutting the
// expected number of switches to at most eta * N.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "swob/core.hpp"
#include "swob/error.hpp"
#include "swob/rng.hpp"

namespace swob {

struct LearnerState {
  std::vector<double> log_weights;   // shifted so the max entry is 0
  std::vector<double> distribution;  // normalized weights
  std::size_t current_action = 0;
  std::size_t batch_index = 1;  // 1-based batch counter
};

inline LearnerState init_learner(std::size_t K, Rng& rng) {
  if (K < 2) throw DomainError("init_learner: need K >= 2");
  LearnerState s;
  s.log_weights.assign(K, 0.0);
  s.distribution.assign(K, 1.0 / static_cast<double>(K));
  s.current_action = rng.uniform_below(K);
  s.batch_index = 1;
  return s;
}

// Multiplicative-weights step on a nonnegative loss estimate. Log weights
// are shifted so their max stays at 0; the shift cancels in the
// normalization, so the distribution is unchanged by it.
inline LearnerState omd_update(const LearnerState& s,
                               const std::vector<double>& estimate,
                               double eta) {
  if (!(eta > 0.0) || !std::isfinite(eta)) {
    throw DomainError("omd_update: eta must be positive and finite");
  }
  if (estimate.size() != s.log_weights.size()) {
    throw DomainError("omd_update: estimate size mismatch");
  }
  for (double e : estimate) {
    if (!std::isfinite(e) || e < 0.0) {
      throw EstimatorError("omd_update: estimates must be finite and >= 0");
    }
  }

  LearnerState next = s;
  double max_lw = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < estimate.size(); ++k) {
    next.log_weights[k] -= eta * estimate[k];
    max_lw = std::max(max_lw, next.log_weights[k]);
  }
  double total = 0.0;
  for (double& lw : next.log_weights) {
    lw -= max_lw;
    total += std::exp(lw);
  }
  for (std::size_t k = 0; k < estimate.size(); ++k) {
    next.distribution[k] = std::exp(next.log_weights[k]) / total;
  }
  return next;
}

// Probability of keeping the current arm for the next batch. Zero when the
// keep-resample rule is disabled, i.e. the next arm is always drawn fresh.
inline double sd_keep_probability(const LearnerState& s,
                                  const std::vector<double>& estimate,
                                  double eta, bool shrinking_dartboard) {
  if (!shrinking_dartboard) return 0.0;
  if (s.current_action >= estimate.size()) {
    throw DomainError("sd_keep_probability: current action out of range");
  }
  const double e = estimate[s.current_action];
  if (!std::isfinite(e) || e < 0.0) {
    throw EstimatorError("sd_keep_probability: bad estimate entry");
  }
  return std::exp(-eta * e);
}

// Draws the next batch's arm: keep with probability keep_prob, otherwise
// sample from the (already updated) distribution. Always consumes the keep
// coin first so the draw sequence is the same in every mode.
inline std::size_t next_action(const LearnerState& s, double keep_prob,
                               Rng& rng) {
  if (!(keep_prob >= 0.0 && keep_prob <= 1.0)) {
    throw DomainError("next_action: keep probability outside [0,1]");
  }
  const double coin = rng.uniform();
  if (coin < keep_prob) return s.current_action;
  return rng.sample_index(s.distribution);
}

// Commits the chosen arm and advances the batch counter.
inline LearnerState advance(LearnerState s, std::size_t action) {
  if (action >= s.distribution.size()) {
    throw DomainError("advance: action out of range");
  }
  s.current_action = action;
  ++s.batch_index;
  return s;
}

// Which arms get observed at the sampled round of this batch.
inline std::vector<std::size_t> choose_observation_set(FeedbackMode mode,
                                                       std::size_t K,
                                                       std::size_t M,
                                                       std::size_t action,
                                                       Rng& rng) {
  if (K < 2) throw DomainError("choose_observation_set: need K >= 2");
  if (action >= K) throw DomainError("choose_observation_set: bad action");
  switch (mode) {
    case FeedbackMode::FULL: {
      if (M != K) throw DomainError("full feedback requires M == K");
      std::vector<std::size_t> all(K);
      std::iota(all.begin(), all.end(), std::size_t{0});
      return all;
    }
    case FeedbackMode::FLEX: {
      if (M == 0 || M > K) throw DomainError("flex feedback requires 1 <= M <= K");
      // Partial Fisher-Yates: the first M entries are a uniform M-subset.
      std::vector<std::size_t> pool(K);
      std::iota(pool.begin(), pool.end(), std::size_t{0});
      for (std::size_t i = 0; i < M; ++i) {
        const std::size_t j = i + rng.uniform_below(K - i);
        std::swap(pool[i], pool[j]);
      }
      std::vector<std::size_t> subset(pool.begin(), pool.begin() + M);
      std::sort(subset.begin(), subset.end());
      return subset;
    }
    case FeedbackMode::BANDIT: {
      if (M != 1) throw DomainError("bandit feedback requires M == 1");
      return {action};
    }
  }
  throw DomainError("choose_observation_set: unknown mode");
}

// Importance-weighted loss estimate for one batch.
//   FULL:   the observed row as-is.
//   FLEX:   K/M times the observed loss on observed arms, 0 elsewhere.
//   BANDIT: observed loss divided by the play probability, on the played
//           arm only.
// `observed` is aligned with `obs_set`: observed[i] is the loss of arm
// obs_set[i] at the sampled round.
inline std::vector<double> estimate_loss(FeedbackMode mode,
                                         const std::vector<std::size_t>& obs_set,
                                         const std::vector<double>& observed,
                                         std::size_t M, std::size_t K,
                                         const std::vector<double>& distribution,
                                         std::size_t action) {
  if (obs_set.size() != observed.size()) {
    throw DomainError("estimate_loss: obs_set/observed size mismatch");
  }
  if (obs_set.size() != M) {
    throw DomainError("estimate_loss: expected exactly M observations");
  }
  std::vector<double> est(K, 0.0);
  double scale = 1.0;
  switch (mode) {
    case FeedbackMode::FULL:
      if (M != K) throw DomainError("estimate_loss: full feedback needs M == K");
      break;
    case FeedbackMode::FLEX:
      scale = static_cast<double>(K) / static_cast<double>(M);
      break;
    case FeedbackMode::BANDIT: {
      if (M != 1 || obs_set[0] != action) {
        throw DomainError("estimate_loss: bandit feedback observes the played arm");
      }
      const double p = distribution[action];
      if (!(p > 0.0)) {
        throw EstimatorError("estimate_loss: played arm has zero probability");
      }
      scale = 1.0 / p;
      break;
    }
  }
  for (std::size_t i = 0; i < obs_set.size(); ++i) {
    const std::size_t k = obs_set[i];
    if (k >= K) throw DomainError("estimate_loss: arm index out of range");
    const double v = scale * observed[i];
    if (!std::isfinite(v) || v < 0.0) {
      throw EstimatorError("estimate_loss: entry for arm " + std::to_string(k) +
                           " is negative or non-finite");
    }
    est[k] = v;
  }
  return est;
}

// ---- schedule resolvers ------------------------------------------------

struct IntegralityResult {
  std::size_t batch_len = 0;        // ceil of the real batch length
  std::size_t batches = 0;          // largest N with N * batch_len <= T
  std::size_t adjusted_horizon = 0; // batches * batch_len
};

// Rounds a real batch length up to an integer and recounts the batches.
// Rounds past adjusted_horizon are played with the final batch's arm, at no
// extra switch and no extra observations.
inline IntegralityResult resolve_integrality(std::size_t T, double tau_real) {
  if (!(tau_real >= 1.0) || tau_real > static_cast<double>(T)) {
    throw DomainError("resolve_integrality: need 1 <= tau <= T");
  }
  IntegralityResult r;
  r.batch_len = static_cast<std::size_t>(std::ceil(tau_real));
  r.batches = T / r.batch_len;
  if (r.batches == 0) {
    throw SpecError("resolve_integrality: batch length exceeds the horizon");
  }
  r.adjusted_horizon = r.batches * r.batch_len;
  return r;
}

// Full feedback: all K arms at one round per batch, so B buys B/K batches.
inline AlgorithmSpec resolve_spec_full(std::size_t T, std::size_t K,
                                       std::size_t B) {
  if (K < 2 || T < K) throw SpecError("resolve_spec_full: need T >= K >= 2");
  if (B < K) {
    throw SpecError("budget B=" + std::to_string(B) +
                    " cannot observe each arm once (need B >= K=" +
                    std::to_string(K) + ")");
  }
  if (B > K * T) {
    throw SpecError("budget B=" + std::to_string(B) + " exceeds K*T=" +
                    std::to_string(K * T) + ", nothing left to observe");
  }
  const std::size_t planned = B / K;
  const auto adj =
      resolve_integrality(T, static_cast<double>(T) / planned);
  AlgorithmSpec spec;
  spec.mode = FeedbackMode::FULL;
  spec.batches = adj.batches;
  spec.batch_len = adj.batch_len;
  spec.eta = std::sqrt(2.0 * K * std::log(static_cast<double>(K)) /
                       (3.0 * static_cast<double>(B)));
  spec.shrinking_dartboard = true;
  spec.obs_per_batch = K;
  spec.planned_budget = B;
  validate(spec);
  return spec;
}

// Flexible feedback: M arms per batch, so B buys B/M batches. M must be
// large enough that the batches fit into T when B exceeds T.
inline AlgorithmSpec resolve_spec_flex(std::size_t T, std::size_t K,
                                       std::size_t B, std::size_t M) {
  if (K < 2 || T < K) throw SpecError("resolve_spec_flex: need T >= K >= 2");
  if (B < K) {
    throw SpecError("budget B=" + std::to_string(B) +
                    " is below K=" + std::to_string(K));
  }
  if (B > K * T) {
    throw SpecError("budget B=" + std::to_string(B) + " exceeds K*T=" +
                    std::to_string(K * T));
  }
  if (M == 0 || M > K) {
    throw SpecError("observation size M=" + std::to_string(M) +
                    " outside [1, K=" + std::to_string(K) + "]");
  }
  if (B >= T) {
    const std::size_t min_M = (B + T - 1) / T;  // ceil(B/T)
    if (M < min_M) {
      throw SpecError("observation size M=" + std::to_string(M) +
                      " too small for B >= T: need M >= ceil(B/T)=" +
                      std::to_string(min_M));
    }
  }
  const std::size_t planned = B / M;
  const auto adj =
      resolve_integrality(T, static_cast<double>(T) / planned);
  AlgorithmSpec spec;
  spec.mode = FeedbackMode::FLEX;
  spec.batches = adj.batches;
  spec.batch_len = adj.batch_len;
  spec.eta = static_cast<double>(M) *
             std::sqrt(2.0 * std::log(static_cast<double>(K)) /
                       (3.0 * static_cast<double>(B) * K));
  spec.shrinking_dartboard = true;
  spec.obs_per_batch = M;
  spec.planned_budget = B;
  validate(spec);
  return spec;
}

// Bandit feedback: one observation per batch, always the played arm, fresh
// resample every batch. B buys B batches, so B cannot exceed T.
inline AlgorithmSpec resolve_spec_bandit(std::size_t T, std::size_t K,
                                         std::size_t B) {
  if (K < 2 || T < K) throw SpecError("resolve_spec_bandit: need T >= K >= 2");
  if (B < K) {
    throw SpecError("budget B=" + std::to_string(B) +
                    " is below K=" + std::to_string(K));
  }
  if (B > T) {
    throw SpecError("bandit batching needs B <= T (got B=" +
                    std::to_string(B) + ", T=" + std::to_string(T) + ")");
  }
  const auto adj = resolve_integrality(
      T, static_cast<double>(T) / static_cast<double>(B));
  AlgorithmSpec spec;
  spec.mode = FeedbackMode::BANDIT;
  spec.batches = adj.batches;
  spec.batch_len = adj.batch_len;
  spec.eta = std::sqrt(2.0 * std::log(static_cast<double>(K)) /
                       (static_cast<double>(B) * K));
  spec.shrinking_dartboard = false;
  spec.obs_per_batch = 1;
  spec.planned_budget = B;
  validate(spec);
  return spec;
}

// Floor that forgives cbrt/pow landing a hair under an exact integer.
inline std::size_t floor_with_tolerance(double x) {
  if (x < 0.0) throw DomainError("floor_with_tolerance: negative input");
  return static_cast<std::size_t>(std::floor(x + 1e-9 * std::max(1.0, x)));
}

// Chooses between the two extra-budget strategies. With B_ex extra
// observations per horizon on top of bandit feedback:
//   * B_ex at or above c * K^{1/3} T^{2/3}: run the full-information
//     schedule on the extras alone and ignore bandit feedback;
//   * below that: ignore the extras and run the bandit schedule whose
//     batch count is capped at the threshold (and at T).
inline AlgorithmSpec route_extra_budget(std::size_t T, std::size_t K,
                                        std::size_t B_ex,
                                        double c_threshold = 1.0) {
  if (K < 2 || T < K) throw SpecError("route_extra_budget: need T >= K >= 2");
  if (!(c_threshold > 0.0) || !std::isfinite(c_threshold)) {
    throw DomainError("route_extra_budget: threshold constant must be positive");
  }
  if (B_ex > (K - 1) * T) {
    throw DomainError("route_extra_budget: B_ex=" + std::to_string(B_ex) +
                      " exceeds (K-1)*T=" + std::to_string((K - 1) * T));
  }
  const double dT = static_cast<double>(T);
  const double threshold =
      c_threshold * std::cbrt(static_cast<double>(K) * dT * dT);
  // Tolerance mirrors floor_with_tolerance: exact-power-of-two thresholds
  // must not lose the boundary case to rounding.
  if (static_cast<double>(B_ex) >= threshold * (1.0 - 1e-9)) {
    return resolve_spec_full(T, K, B_ex);
  }
  const std::size_t capped = std::min(T, floor_with_tolerance(threshold));
  return resolve_spec_bandit(T, K, capped);
}

}  // namespace swob
