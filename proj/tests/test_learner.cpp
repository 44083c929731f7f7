#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <vector>

#include "swob/learner.hpp"

using namespace swob;

TEST_CASE("learner starts uniform with a random arm") {
  Rng rng(3);
  const LearnerState s = init_learner(4, rng);
  CHECK(s.distribution == std::vector<double>{0.25, 0.25, 0.25, 0.25});
  CHECK(s.current_action < 4);
  CHECK(s.batch_index == 1);
  Rng rng2(3);
  CHECK_THROWS_AS(init_learner(1, rng2), DomainError);
}

TEST_CASE("multiplicative update matches the closed-form weights") {
  Rng rng(3);
  LearnerState s = init_learner(2, rng);
  const double eta = 0.7;
  const std::vector<std::vector<double>> estimates = {{0.9, 0.1}, {0.2, 0.6}};
  for (const auto& e : estimates) s = omd_update(s, e, eta);

  // w_k proportional to exp(-eta * cumulative estimate of arm k).
  const double c0 = 0.9 + 0.2, c1 = 0.1 + 0.6;
  const double w0 = std::exp(-eta * c0), w1 = std::exp(-eta * c1);
  CHECK(s.distribution[0] == Catch::Approx(w0 / (w0 + w1)).epsilon(1e-12));
  CHECK(s.distribution[1] == Catch::Approx(w1 / (w0 + w1)).epsilon(1e-12));
  // Log-domain bookkeeping keeps the max at zero.
  CHECK(*std::max_element(s.log_weights.begin(), s.log_weights.end()) ==
        Catch::Approx(0.0));
}

TEST_CASE("update rejects bad estimates and bad eta") {
  Rng rng(3);
  LearnerState s = init_learner(2, rng);
  CHECK_THROWS_AS(omd_update(s, {0.1, -0.2}, 0.5), EstimatorError);
  CHECK_THROWS_AS(omd_update(s, {0.1, std::nan("")}, 0.5), EstimatorError);
  CHECK_THROWS_AS(omd_update(s, {0.1}, 0.5), DomainError);
  CHECK_THROWS_AS(omd_update(s, {0.1, 0.2}, 0.0), DomainError);
}

TEST_CASE("update survives extreme estimates without overflow") {
  Rng rng(3);
  LearnerState s = init_learner(3, rng);
  for (int i = 0; i < 200; ++i) s = omd_update(s, {50.0, 0.0, 50.0}, 1.0);
  CHECK(s.distribution[1] == Catch::Approx(1.0));
  const double total =
      std::accumulate(s.distribution.begin(), s.distribution.end(), 0.0);
  CHECK(total == Catch::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("keep probability follows the current arm's estimate") {
  Rng rng(3);
  LearnerState s = init_learner(2, rng);
  s.current_action = 1;
  CHECK(sd_keep_probability(s, {0.9, 0.4}, 0.5, true) ==
        Catch::Approx(std::exp(-0.2)));
  CHECK(sd_keep_probability(s, {0.9, 0.4}, 0.5, false) == 0.0);
  CHECK_THROWS_AS(sd_keep_probability(s, {0.9, -1.0}, 0.5, true),
                  EstimatorError);
}

TEST_CASE("next_action keeps with probability one and resamples with zero") {
  Rng rng(3);
  LearnerState s = init_learner(3, rng);
  s.current_action = 2;
  s.distribution = {1.0, 0.0, 0.0};
  Rng coin(10);
  for (int i = 0; i < 50; ++i) CHECK(next_action(s, 1.0, coin) == 2);
  for (int i = 0; i < 50; ++i) CHECK(next_action(s, 0.0, coin) == 0);
  CHECK_THROWS_AS(next_action(s, 1.5, coin), DomainError);
}

TEST_CASE("advance commits the arm and bumps the batch counter") {
  Rng rng(3);
  LearnerState s = init_learner(3, rng);
  s = advance(s, 2);
  CHECK(s.current_action == 2);
  CHECK(s.batch_index == 2);
  CHECK_THROWS_AS(advance(s, 3), DomainError);
}

TEST_CASE("observation sets per mode") {
  Rng rng(8);
  CHECK(choose_observation_set(FeedbackMode::FULL, 4, 4, 2, rng) ==
        std::vector<std::size_t>{0, 1, 2, 3});
  CHECK_THROWS_AS(choose_observation_set(FeedbackMode::FULL, 4, 3, 2, rng),
                  DomainError);
  CHECK(choose_observation_set(FeedbackMode::BANDIT, 4, 1, 2, rng) ==
        std::vector<std::size_t>{2});
  CHECK_THROWS_AS(choose_observation_set(FeedbackMode::BANDIT, 4, 2, 2, rng),
                  DomainError);

  const auto subset = choose_observation_set(FeedbackMode::FLEX, 5, 3, 0, rng);
  CHECK(subset.size() == 3);
  CHECK(std::is_sorted(subset.begin(), subset.end()));
  CHECK(std::set<std::size_t>(subset.begin(), subset.end()).size() == 3);
}

TEST_CASE("flex subsets include every arm at rate M/K") {
  Rng rng(99);
  const std::size_t K = 5, M = 2;
  std::vector<int> counts(K, 0);
  const int n = 30000;
  for (int i = 0; i < n; ++i) {
    for (const auto k :
         choose_observation_set(FeedbackMode::FLEX, K, M, 0, rng)) {
      ++counts[k];
    }
  }
  for (std::size_t k = 0; k < K; ++k) {
    CHECK(std::abs(counts[k] / double(n) - 0.4) < 0.012);
  }
}

TEST_CASE("loss estimates scale by mode") {
  const std::vector<double> dist = {0.5, 0.25, 0.25};

  const auto full = estimate_loss(FeedbackMode::FULL, {0, 1, 2},
                                  {0.3, 0.6, 0.9}, 3, 3, dist, 0);
  CHECK(full == std::vector<double>{0.3, 0.6, 0.9});

  const auto flex =
      estimate_loss(FeedbackMode::FLEX, {0, 2}, {0.3, 0.9}, 2, 3, dist, 0);
  CHECK(flex[0] == Catch::Approx(0.45));
  CHECK(flex[1] == 0.0);
  CHECK(flex[2] == Catch::Approx(1.35));

  const auto bandit =
      estimate_loss(FeedbackMode::BANDIT, {1}, {0.6}, 1, 3, dist, 1);
  CHECK(bandit[1] == Catch::Approx(2.4));
  CHECK(bandit[0] == 0.0);

  CHECK_THROWS_AS(
      estimate_loss(FeedbackMode::BANDIT, {0}, {0.6}, 1, 3, dist, 1),
      DomainError);  // must observe the played arm
  CHECK_THROWS_AS(estimate_loss(FeedbackMode::BANDIT, {1}, {0.6}, 1, 3,
                                {0.5, 0.0, 0.5}, 1),
                  EstimatorError);  // zero play probability
  CHECK_THROWS_AS(
      estimate_loss(FeedbackMode::FLEX, {0, 2}, {0.3}, 2, 3, dist, 0),
      DomainError);  // obs/observed mismatch
}

TEST_CASE("integer batching rounds up and recounts") {
  const auto a = resolve_integrality(10, 2.5);
  CHECK(a.batch_len == 3);
  CHECK(a.batches == 3);
  CHECK(a.adjusted_horizon == 9);

  const auto b = resolve_integrality(16384, 7.2);
  CHECK(b.batch_len == 8);
  CHECK(b.batches == 2048);
  CHECK(b.adjusted_horizon == 16384);

  CHECK_THROWS_AS(resolve_integrality(10, 0.5), DomainError);
  CHECK_THROWS_AS(resolve_integrality(10, 11.0), DomainError);
}

TEST_CASE("full-information schedule resolution") {
  const AlgorithmSpec s = resolve_spec_full(100, 4, 40);
  CHECK(s.mode == FeedbackMode::FULL);
  CHECK(s.batches == 10);
  CHECK(s.batch_len == 10);
  CHECK(s.obs_per_batch == 4);
  CHECK(s.shrinking_dartboard);
  CHECK(s.eta == Catch::Approx(0.30400596).epsilon(1e-6));
  CHECK(s.planned_budget == 40);

  // Budget below K or above K*T cannot be scheduled.
  CHECK_THROWS_WITH(resolve_spec_full(100, 4, 3),
                    Catch::Matchers::ContainsSubstring("B >= K"));
  CHECK_THROWS_WITH(resolve_spec_full(100, 4, 401),
                    Catch::Matchers::ContainsSubstring("K*T"));
}

TEST_CASE("flexible schedule resolution") {
  const AlgorithmSpec s = resolve_spec_flex(1000, 4, 100, 2);
  CHECK(s.mode == FeedbackMode::FLEX);
  CHECK(s.batches == 50);
  CHECK(s.batch_len == 20);
  CHECK(s.obs_per_batch == 2);
  CHECK(s.eta == Catch::Approx(0.09613513).epsilon(1e-6));

  CHECK_THROWS_AS(resolve_spec_flex(1000, 4, 100, 0), SpecError);
  CHECK_THROWS_AS(resolve_spec_flex(1000, 4, 100, 5), SpecError);
  // B >= T forces M large enough that batches fit into T.
  CHECK_THROWS_WITH(resolve_spec_flex(1000, 4, 3000, 2),
                    Catch::Matchers::ContainsSubstring("ceil(B/T)"));
  CHECK_NOTHROW(resolve_spec_flex(1000, 4, 3000, 3));
}

TEST_CASE("bandit schedule resolution") {
  const AlgorithmSpec s = resolve_spec_bandit(10000, 4, 100);
  CHECK(s.mode == FeedbackMode::BANDIT);
  CHECK(s.batches == 100);
  CHECK(s.batch_len == 100);
  CHECK(s.obs_per_batch == 1);
  CHECK_FALSE(s.shrinking_dartboard);
  CHECK(s.eta == Catch::Approx(0.08325546).epsilon(1e-6));

  CHECK_THROWS_WITH(resolve_spec_bandit(100, 4, 101),
                    Catch::Matchers::ContainsSubstring("B <= T"));
  CHECK_THROWS_AS(resolve_spec_bandit(100, 4, 2), SpecError);
}

TEST_CASE("floor_with_tolerance forgives sub-ulp undershoot") {
  CHECK(floor_with_tolerance(2048.0) == 2048);
  CHECK(floor_with_tolerance(2047.9999999999) == 2048);
  CHECK(floor_with_tolerance(2047.9) == 2047);
  CHECK_THROWS_AS(floor_with_tolerance(-1.0), DomainError);
}

TEST_CASE("extra-budget routing splits at the threshold") {
  // T = 2^15, K = 8: threshold = (K T^2)^{1/3} = 2048 exactly.
  const std::size_t T = 1 << 15;

  const AlgorithmSpec above = route_extra_budget(T, 8, 4096);
  CHECK(above.mode == FeedbackMode::FULL);
  CHECK(above.planned_budget == 4096);

  const AlgorithmSpec at = route_extra_budget(T, 8, 2048);
  CHECK(at.mode == FeedbackMode::FULL);

  const AlgorithmSpec below = route_extra_budget(T, 8, 1024);
  CHECK(below.mode == FeedbackMode::BANDIT);
  CHECK(below.planned_budget == 2048);  // batch count capped at the threshold
  CHECK(below.batches == 2048);

  const AlgorithmSpec zero = route_extra_budget(T, 8, 0);
  CHECK(zero.mode == FeedbackMode::BANDIT);
  CHECK(zero.planned_budget == 2048);

  CHECK_THROWS_AS(route_extra_budget(T, 8, 7 * T + 1), DomainError);
  CHECK_THROWS_AS(route_extra_budget(T, 8, 0, 0.0), DomainError);
}

TEST_CASE("routing caps the bandit batch count at the horizon") {
  // Tiny horizon, huge threshold constant: the cap must be T, not the
  // threshold.
  const AlgorithmSpec s = route_extra_budget(16, 2, 0, 100.0);
  CHECK(s.mode == FeedbackMode::BANDIT);
  CHECK(s.planned_budget == 16);
  CHECK(s.batches == 16);
}
