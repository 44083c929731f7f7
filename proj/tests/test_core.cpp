#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <vector>

#include "swob/core.hpp"

using namespace swob;

TEST_CASE("clip_unit clamps and rejects NaN") {
  CHECK(clip_unit(-0.5) == 0.0);
  CHECK(clip_unit(1.5) == 1.0);
  CHECK(clip_unit(0.25) == 0.25);
  CHECK_THROWS_AS(clip_unit(std::numeric_limits<double>::quiet_NaN()),
                  DomainError);
}

TEST_CASE("loss matrix validation names the offending entry") {
  CHECK_THROWS_AS(make_loss_matrix(3, 2, {0.1, 0.2}), DomainError);  // size
  CHECK_THROWS_AS(make_loss_matrix(1, 2, {0.1, 0.2}), DomainError);  // T < K
  CHECK_THROWS_WITH(
      make_loss_matrix(2, 2, {0.1, 0.2, 1.5, 0.3}),
      Catch::Matchers::ContainsSubstring("t=2") &&
          Catch::Matchers::ContainsSubstring("k=0"));
  // Raw values must clip to the stored values.
  CHECK_THROWS_WITH(
      make_loss_matrix(2, 2, {0.1, 0.2, 0.3, 0.4}, {0.1, 0.2, 0.3, 0.9}),
      Catch::Matchers::ContainsSubstring("clip mismatch"));
  const auto ok =
      make_loss_matrix(2, 2, {0.1, 0.2, 1.0, 0.4}, {0.1, 0.2, 1.7, 0.4});
  CHECK(ok.at(1, 0) == 1.0);
  CHECK(ok.raw_at(1, 0) == 1.7);
}

TEST_CASE("feedback mode strings round-trip") {
  for (auto m : {FeedbackMode::FULL, FeedbackMode::FLEX, FeedbackMode::BANDIT}) {
    CHECK(feedback_mode_from_string(to_string(m)) == m);
  }
  CHECK_THROWS_AS(feedback_mode_from_string("psychic"), ParseError);
}

TEST_CASE("algorithm spec validation") {
  AlgorithmSpec s;
  s.mode = FeedbackMode::FULL;
  s.batches = 10;
  s.batch_len = 5;
  s.eta = 0.1;
  s.obs_per_batch = 4;
  s.planned_budget = 40;
  CHECK_NOTHROW(validate(s));

  AlgorithmSpec bad = s;
  bad.eta = 0.0;
  CHECK_THROWS_AS(validate(bad), SpecError);
  bad = s;
  bad.batches = 0;
  CHECK_THROWS_AS(validate(bad), SpecError);
  bad = s;
  bad.planned_budget = 39;  // 10 batches * 4 observations = 40 > 39
  CHECK_THROWS_AS(validate(bad), SpecError);
}

TEST_CASE("budget ledger refuses overspend before recording") {
  BudgetLedger ledger{2, {}};
  ledger.charge(0, 1);
  ledger.charge(0, 2);
  CHECK(ledger.used() == 2);
  CHECK_THROWS_AS(ledger.charge(1, 0), BudgetViolation);
  CHECK(ledger.used() == 2);  // the failed charge left no trace
}

TEST_CASE("budget ledger rejects duplicates and time travel") {
  BudgetLedger ledger{10, {}};
  ledger.charge(3, 0);
  ledger.charge(3, 1);
  CHECK_THROWS_AS(ledger.charge(3, 0), DomainError);  // same (t, k)
  ledger.charge(5, 0);
  CHECK_THROWS_AS(ledger.charge(4, 0), DomainError);  // decreasing round
  CHECK(ledger.used() == 3);
}

TEST_CASE("regret bookkeeping on a hand-checked example") {
  // T=4, K=2. Column totals: arm0 = 1.4, arm1 = 1.2, so arm 1 is best.
  const auto m = make_loss_matrix(
      4, 2, {0.1, 0.6, 0.5, 0.0, 0.3, 0.2, 0.5, 0.4});
  const std::vector<std::size_t> actions = {0, 1, 1, 0};
  // Played: 0.1 + 0.0 + 0.2 + 0.5 = 0.8; two switches (t=2 and t=4).
  const RunRecord with_costs = compute_regret(m, actions, true);
  CHECK(with_costs.loss_regret == Catch::Approx(0.8 - 1.2));
  CHECK(with_costs.switch_count == 2);
  CHECK(with_costs.total_regret == Catch::Approx(-0.4 + 2.0));
  CHECK(with_costs.best_fixed_action == 1);

  const RunRecord no_costs = compute_regret(m, actions, false);
  CHECK(no_costs.total_regret == Catch::Approx(no_costs.loss_regret));
  CHECK(no_costs.switch_count == 2);  // still counted, just not charged
}

TEST_CASE("regret ties go to the lowest arm index") {
  const auto m = make_loss_matrix(2, 2, {0.3, 0.3, 0.2, 0.2});
  const RunRecord rec = compute_regret(m, {0, 0}, true);
  CHECK(rec.best_fixed_action == 0);
  CHECK(rec.loss_regret == Catch::Approx(0.0));
}

TEST_CASE("regret input validation") {
  const auto m = make_loss_matrix(2, 2, {0.3, 0.3, 0.2, 0.2});
  CHECK_THROWS_AS(compute_regret(m, {}, true), DomainError);
  CHECK_THROWS_AS(compute_regret(m, {0}, true), DomainError);
  CHECK_THROWS_AS(compute_regret(m, {0, 5}, true), DomainError);
}
