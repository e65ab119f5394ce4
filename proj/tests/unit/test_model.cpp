#include <doctest.h>

#include <cmath>

#include "matchq/learning.hpp"
#include "matchq/model.hpp"
#include "support.hpp"

using namespace matchq;
using matchq::testing::load;

namespace {

bool has_code(const std::vector<Violation>& v, const std::string& code) {
  for (const auto& x : v)
    if (x.code == code) return true;
  return false;
}

}  // namespace

TEST_CASE("shipped instances validate cleanly") {
  for (const char* name : {"two_task.json", "two_task_grid.json", "two_task_stated_offsets.json", "two_queue.json", "zero_reward.json"}) {
    CAPTURE(name);
    const auto v = validate_config(load(name));
    for (const auto& x : v) MESSAGE(x.code << ": " << x.message);
    CHECK(v.empty());
  }
}

TEST_CASE("probabilities that do not sum to one are reported") {
  const auto cfg = config_from_json(matchq::testing::two_state_json(0.6, 0.6));
  const auto v = validate_config(cfg);
  REQUIRE_FALSE(v.empty());
  bool found = false;
  for (const auto& x : v) found |= x.message.find("probabilities sum to 1.2") != std::string::npos;
  CHECK(found);
}

TEST_CASE("missing zero action names the state") {
  auto j = matchq::testing::two_state_json();
  j["action_sets"] = {{"by_state", {{{{0, 1}}, {{1, 0}}, {{0, 0}}}, {{{0, 1}}, {{1, 0}}}}}};
  const auto v = validate_config(config_from_json(j));
  REQUIRE(has_code(v, "missing_zero_action"));
  for (const auto& x : v)
    if (x.code == "missing_zero_action") CHECK(x.message.find("B_1") != std::string::npos);
}

TEST_CASE("validate_config is pure") {
  const auto cfg = load("two_task.json");
  CHECK(validate_config(cfg).size() == validate_config(cfg).size());
  const auto bad = config_from_json(matchq::testing::two_state_json(0.6, 0.6));
  const auto a = validate_config(bad), b = validate_config(bad);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].message == b[i].message);
}

TEST_CASE("entries above their bounds are reported") {
  auto j = matchq::testing::two_state_json();
  j["states"][0]["arrivals"] = {3, 1};
  CHECK(has_code(validate_config(config_from_json(j)), "arrival_bound"));
}

TEST_CASE("beta_r_hat on the reference instances") {
  const auto two_task = load("two_task.json");
  CHECK(compute_beta_r_hat(two_task.reward_mean(), two_task) == doctest::Approx(1.0));
  const auto two_queue = load("two_queue.json");
  CHECK(compute_beta_r_hat(two_queue.reward_mean(), two_queue) == doctest::Approx(1.0));
  RewardTable zero(two_task.actions_per_state(), 2, 0.0);
  CHECK(compute_beta_r_hat(zero, two_task) == 0.0);
}

TEST_CASE("beta_r_hat moves by at most 2 delta / min entry under perturbation") {
  const auto cfg = load("two_task.json");
  const double beta = compute_beta_r_hat(cfg.reward_mean(), cfg);
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    CounterRng rng(seed, Stream::perturbation);
    const auto est = perturbed_oracle(cfg, 0.1, rng);
    CHECK(std::abs(compute_beta_r_hat(est.r_hat, cfg) - beta) <= 2 * 0.1 / 1.0 + 1e-12);
  }
}

TEST_CASE("drift constant and offsets") {
  const auto cfg = load("two_task.json");
  // N (A^2 + mu^2 + 2 r^2) + M h^2 + M N^2 b^2 = 2 (4 + 1 + 8) + 4 + 4
  CHECK(drift_constant(cfg) == 34.0);
  const auto dc = derive_constants(cfg, 100.0, 1.0);
  CHECK(dc.theta1 == doctest::Approx((2 + (100 * 5 + 2) * 1.0) / 1.0 + 1));
  CHECK(dc.theta2 == doctest::Approx((100 * 5 + 2) * 1.0 + 2 * 1 + 2 * 1));
  CHECK(dc.d_max == doctest::Approx(502));
  CHECK(dc.q_cap == doctest::Approx(dc.theta1 + 2));
  CHECK(dc.h_cap == doctest::Approx(dc.theta2 + 2));
  CHECK(dc.zeta == doctest::Approx(std::pow(std::log(100.0), 2)));

  const auto stated = load("two_task_stated_offsets.json");
  const auto ds = derive_constants(stated, 100.0, 1.0);
  CHECK(ds.theta1 == doctest::Approx(502 + 4));
  CHECK(ds.theta2 == doctest::Approx(502 + 3));
}

TEST_CASE("zeta rules and precedence") {
  ZetaRule explicit_rule{ZetaRule::Kind::explicit_value, 7.5};
  CHECK(resolve_zeta(explicit_rule, 100, 0.3) == 7.5);
  ZetaRule log_sq{ZetaRule::Kind::log_squared, 0};
  CHECK(resolve_zeta(log_sq, 100, 0.3) == doctest::Approx(std::pow(std::log(100.0), 2)));
  ZetaRule general{ZetaRule::Kind::general, 0};
  const double L = std::pow(std::log(100.0), 2);
  CHECK(resolve_zeta(general, 100, 0.3) == doctest::Approx(2 * std::max(0.3 * 100 * L, L)));
  CHECK(resolve_zeta(general, 100, 0.0) == doctest::Approx(2 * L));
}

TEST_CASE("two-point rewards keep the mean and the bounds") {
  const auto cfg = load("two_task.json");
  CounterRng rng(3, Stream::control_reward);
  // state 0 has omega 1: serving task 2 with weight 1.0
  const std::size_t k = 0, a = *cfg.find_action(0, Matrix(1, 2, {0, 1}));
  const Vec served{0, 1};
  const double mean = cfg.reward_at(cfg.reward_mean(), k, a, 1, 1.0);
  CHECK(mean == doctest::Approx(1.0));
  const int n = 1000000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const Vec kap = sample_reward(rng, cfg, k, a, served);
    REQUIRE(kap[0] == 0.0);
    REQUIRE((kap[1] == 0.5 || kap[1] == 1.5));
    sum += kap[1];
    sq += kap[1] * kap[1];
  }
  const double m = sum / n, sd = std::sqrt(sq / n - m * m);
  CHECK(std::abs(m - mean) <= 3 * sd / std::sqrt(double(n)));
}

TEST_CASE("zero service gives zero reward and draws are reproducible") {
  const auto cfg = load("two_task.json");
  const std::size_t a = *cfg.find_action(5, Matrix(1, 2, {1, 0}));
  CounterRng r1(11, Stream::control_reward), r2(11, Stream::control_reward);
  for (int i = 0; i < 100; ++i) {
    const Vec x = sample_reward(r1, cfg, 5, a, Vec{0, 0});
    CHECK(x == Vec{0, 0});
    const Vec y = sample_reward(r2, cfg, 5, a, Vec{0, 0});
    CHECK(x == y);
  }
  CounterRng r3(12, Stream::control_reward), r4(12, Stream::control_reward);
  for (int i = 0; i < 100; ++i) CHECK(sample_reward(r3, cfg, 5, a, Vec{1, 0}) == sample_reward(r4, cfg, 5, a, Vec{1, 0}));
}

TEST_CASE("partial service interpolates the mean linearly") {
  const auto cfg = load("two_task.json");
  const std::size_t a = *cfg.find_action(0, Matrix(1, 2, {0, 1}));
  CHECK(cfg.reward_at(cfg.reward_mean(), 0, a, 1, 0.5) == doctest::Approx(0.5));
  CHECK(cfg.reward_at(cfg.reward_mean(), 0, a, 1, 0.0) == 0.0);
}
