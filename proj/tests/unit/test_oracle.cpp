#include <doctest.h>

#include <cmath>

#include "matchq/oracle.hpp"
#include "support.hpp"

using namespace matchq;

TEST_CASE("two-queue example: argmax (1/4, 3/4)") {
  const auto cfg = matchq::testing::load("two_queue.json");
  const auto sol = solve_offline_optimal(cfg);
  CHECK(std::abs(sol.r_bar[0] - 0.25) <= 1e-3);
  CHECK(std::abs(sol.r_bar[1] - 0.75) <= 1e-3);
  CHECK(sol.f_star == doctest::Approx(std::log(1.25) + std::log(2.5)).epsilon(1e-6));
  CHECK(sol.upper_bound >= sol.f_star);
  CHECK(sol.upper_bound - sol.f_star <= 1e-8);
  const auto tq = two_queue_perturbed(0, 0);
  CHECK(tq.r1 == 0.25);
  CHECK(tq.r2 == 0.75);
  CHECK(std::abs(tq.r1 - sol.r_bar[0]) <= 1e-3);
  CHECK(tq.u_total == doctest::Approx(sol.f_star).epsilon(1e-6));
}

TEST_CASE("zero rewards: optimum 0 with the zero action") {
  const auto cfg = matchq::testing::load("zero_reward.json");
  const auto sol = solve_offline_optimal(cfg);
  CHECK(sol.f_star == doctest::Approx(0.0));
  for (std::size_t k = 0; k < cfg.n_states(); ++k)
    CHECK(sol.weights[k][*cfg.zero_action(k)] == doctest::Approx(1.0));
}

TEST_CASE("two-task instance matches a dense grid over the stationary mixtures") {
  const auto cfg = matchq::testing::load("two_task.json");
  const auto sol = solve_offline_optimal(cfg);
  // Every state uses one unit of resource per served task and the reward depends
  // on omega only, so a mixture reduces to (x_w, y_w): the fraction of omega = w
  // slots serving task 1 / task 2. The resource constraint 0.5 sum(x + y) <= E[e] = 1
  // and the task constraints E[mu_n] <= E[A_n] are loose at the corners of this box.
  double best = -1e300;
  const int S = 100;
  for (int x1 = 0; x1 <= S; ++x1)
    for (int y1 = 0; x1 + y1 <= S; ++y1)
      for (int x2 = 0; x2 <= S; ++x2)
        for (int y2 = 0; x2 + y2 <= S; ++y2) {
          const double a = x1 / double(S), b = y1 / double(S), c = x2 / double(S), d = y2 / double(S);
          const double r1 = 0.5 * (0.8 * a + 1.0 * c), r2 = 0.5 * (1.0 * b + 0.8 * d);
          const double cost = 0.5 * (a + b + c + d);
          if (0.5 * (a + c) > 1.0 || 0.5 * (b + d) > 1.5 || cost > 1.0) continue;
          best = std::max(best, 1.2 * std::log(1 + 2 * r1) + 1.2 * std::log(1 + 4 * r2) - cost);
        }
  CHECK(std::abs(sol.f_star - best) <= 1e-2);
  CHECK(sol.f_star >= best - 1e-9);
  for (std::size_t n = 0; n < 2; ++n) CHECK(sol.mu_bar[n] <= 1.0 + 0.5 * n + 1e-9);
  CHECK(sol.usage_bar[0] <= 1.0 + 1e-9);
}

TEST_CASE("V only scales the objective") {
  const auto cfg = matchq::testing::load("two_task.json");
  const auto a = solve_offline_optimal(cfg, 1.0), b = solve_offline_optimal(cfg, 50.0);
  CHECK(a.f_star == doctest::Approx(b.f_star));
  CHECK(b.phi_star == doctest::Approx(50.0 * b.f_star));
}

TEST_CASE("misestimated rewards: exact split vs first order") {
  for (double d : {0.01, 0.05, 0.1}) {
    const auto t = two_queue_perturbed(d, 0.0);
    CHECK(t.r1_first_order == doctest::Approx(0.25 + 2 * d / 4));
    CHECK(std::abs(t.r1 - t.r1_first_order) <= 2 * d * d);
    CHECK(t.r1 + t.r2 == doctest::Approx(1.0));
  }
}

TEST_CASE("utility loss from equal misestimation is second order") {
  const double u0 = two_queue_perturbed(0, 0).u_total;
  double prev_ratio = 0.0;
  for (double d : {0.1, 0.05, 0.025, 0.0125}) {
    const double loss = u0 - two_queue_perturbed(d, d).u_total;
    CHECK(loss >= 0.0);
    CHECK(loss <= 2 * d * d);
    // loss / d shrinks with d, unlike a first-order (|2d| + |d|)/5 law
    const double ratio = loss / d;
    if (prev_ratio > 0.0) CHECK(ratio < prev_ratio);
    prev_ratio = ratio;
  }
}

TEST_CASE("perturbed rewards give a different but valid split") {
  const auto cfg = matchq::testing::load("two_queue.json");
  RewardTable r = cfg.reward_mean();
  for (std::size_t a = 0; a < cfg.actions(0).size(); ++a) r.at(0, a, 0) *= 1.1;
  OracleOptions o;
  o.rewards = &r;
  const auto sol = solve_offline_optimal(cfg, 1.0, o);
  const auto tq = two_queue_perturbed(0.1, 0.0);
  CHECK(sol.mu_bar[0] == doctest::Approx(tq.r1).epsilon(1e-4));
}

TEST_CASE("a state without the zero action is rejected") {
  auto j = matchq::testing::two_state_json();
  j["action_sets"] = {{"default", {{{0, 1}}, {{1, 0}}}}};
  CHECK_THROWS_AS(solve_offline_optimal(config_from_json(j)), OracleError);
}
