#include <doctest.h>

#include <cmath>
#include <fstream>
#include <memory>

#include "matchq/dram_policy.hpp"
#include "matchq/simulator.hpp"
#include "support.hpp"

using namespace matchq;

namespace {

struct Fixture {
  SystemConfig cfg = matchq::testing::load("two_task.json");
  DerivedConstants dc = derive_constants(cfg, 100, compute_beta_r_hat(cfg.reward_mean(), cfg));
  PolicyParams p = make_policy_params(cfg, dc, std::make_shared<RewardTable>(cfg.reward_mean()));
};

}  // namespace

TEST_CASE("zero shift without violations is a RAM slot") {
  Fixture f;
  ShiftState zero{Multipliers::zeros(2, 1), 0.0};
  CounterRng ra(3, Stream::control_reward), rb(3, Stream::control_reward);
  QueueState qa{{600, 10}, {700}, {200, 450}}, qb = qa;
  for (std::size_t k = 0; k < f.cfg.n_states(); ++k) {
    SlotRecord a, b;
    ram_slot(f.cfg, k, qa, f.p, ra, a);
    dram_slot(f.cfg, k, qb, zero, f.p, rb, b);
    CHECK_FALSE(b.dropped);
    CHECK(a.action == b.action);
    CHECK(a.kappa == b.kappa);
    CHECK(qa == qb);
  }
}

TEST_CASE("decisions are taken on the shifted view") {
  Fixture f;
  ShiftState s{{{300, 250}, {570, 560}, {575}}, std::pow(std::log(100.0), 2)};
  CounterRng rng(4, Stream::control_reward);
  for (std::size_t k = 0; k < f.cfg.n_states(); ++k) {
    QueueState qs{{20, 30}, {40}, {10, 25}};
    const QueueState view = s.apply(qs);
    CHECK(view.Q[0] == doctest::Approx(20 + 570 - s.zeta));
    CHECK(view.H[0] == doctest::Approx(40 + 575 - s.zeta));
    CHECK(view.d[1] == doctest::Approx(25 + 250 - s.zeta));
    SlotRecord expect, got;
    decide_slot(f.cfg, k, view.Q, view.H, view.d, f.p, false, expect);
    dram_slot(f.cfg, k, qs, s, f.p, rng, got);
    CHECK(got.gamma == expect.gamma);
    CHECK(got.R == expect.R);
    CHECK(got.h == expect.h);
    CHECK(got.action == expect.action);
  }
}

TEST_CASE("empty resource queue: row zeroed, tasks dropped, event logged") {
  Fixture f;
  // State 0 has omega 1, no resource arrival and A = (0, 1).
  REQUIRE(f.cfg.state(0).resource_arrivals[0] == 0.0);
  ShiftState s{{{0, 0}, {f.p.theta1, f.p.theta1}, {1000.0 + f.p.theta2}}, 0.0};
  QueueState qs{{5, 5}, {0}, {0, 0}};
  CounterRng rng(1, Stream::control_reward);
  SlotRecord rec;
  dram_slot(f.cfg, 0, qs, s, f.p, rng, rec);
  REQUIRE(rec.dropped);
  const Action& chosen = f.cfg.action(0, rec.action);
  CHECK_FALSE(chosen.b.is_zero());
  CHECK(rec.usage[0] == 0.0);
  for (double x : rec.b) CHECK(x == 0.0);
  CHECK(rec.kappa == Vec{0, 0});
  CHECK(rec.mu_tilde == Vec{0, 0});
  CHECK(qs.H[0] == 0.0);
  for (std::size_t n = 0; n < 2; ++n) CHECK(qs.Q[n] == 5 - chosen.mu[n] + rec.R[n]);
}

TEST_CASE("partial violation scales the row to the available stock") {
  Fixture f;
  // State with e = 2.
  std::size_t k = 0;
  while (f.cfg.state(k).resource_arrivals[0] != 2.0) ++k;
  ShiftState s{{{0, 0}, {f.p.theta1, f.p.theta1}, {1000.0}}, 0.0};
  for (bool actual : {false, true}) {
    QueueState qs{{5, 5}, {0.25}, {0, 0}};
    CounterRng rng(1, Stream::control_reward);
    SlotRecord rec;
    DramOptions o;
    o.serve_with_actual = actual;
    dram_slot(f.cfg, k, qs, s, f.p, rng, rec, o);
    REQUIRE(rec.dropped);
    CHECK(rec.h[0] == 0.0);  // H_hat is far above theta2, so nothing is admitted
    CHECK(rec.usage[0] == 0.0);
    CHECK(qs.H[0] == 0.25);
  }
  // Admitted stock: H_hat below theta2, H = 0.25 < usage 1, h = 2: row scaled to 0.25.
  ShiftState s2{{{0, 0}, {f.p.theta1, f.p.theta1}, {f.p.theta2 - 10}}, 0.0};
  for (bool actual : {false, true}) {
    QueueState qs{{5, 5}, {0.25}, {500, 500}};
    CounterRng rng(1, Stream::control_reward);
    SlotRecord rec;
    DramOptions o;
    o.serve_with_actual = actual;
    dram_slot(f.cfg, k, qs, s2, f.p, rng, rec, o);
    REQUIRE(rec.dropped);
    CHECK(rec.usage[0] == doctest::Approx(0.25));
    CHECK(qs.H[0] == doctest::Approx(0.25 - 0.25 + 2.0));
    double served = rec.mu_tilde[0] + rec.mu_tilde[1];
    if (actual) CHECK(served == doctest::Approx(0.25));
    else CHECK(served == 0.0);
  }
}

TEST_CASE("assembling with exact statistics uses the true multiplier") {
  const auto cfg = matchq::testing::load("two_task.json");
  LearnerSpec exact;
  exact.reward_source = LearnerSpec::RewardSource::exact;
  exact.state_source = LearnerSpec::StateSource::exact;
  const auto c = assemble_dram(cfg, 100, exact, {}, 1);
  const auto target = true_convergence_target(cfg, 100);
  CHECK(c.learn_time == 0);
  CHECK(c.shift.alpha_hat == target.dual.alpha_star);
  CHECK(c.shift.zeta == doctest::Approx(std::pow(std::log(100.0), 2)));
  CHECK(assemble_dram(cfg, 100, exact, {}, 1, 3.5).shift.zeta == 3.5);
}

TEST_CASE("the general zeta rule is used when configured") {
  auto j = nlohmann::json::parse(std::ifstream(matchq::testing::config_path("two_task.json")));
  j["zeta"] = "general";
  const auto cfg = config_from_json(j);
  const auto c = assemble_dram(cfg, 100, PolicySpec::dram_learned().learners, {}, 2);
  const double L = std::pow(std::log(100.0), 2);
  CHECK(c.shift.zeta == doctest::Approx(2 * std::max(c.states.delta_z * 100 * L, L)));
}

TEST_CASE("learning time is the larger of the two learners") {
  const auto cfg = matchq::testing::load("two_task.json");
  auto spec = PolicySpec::dram_learned(3, 5).learners;
  const auto c = assemble_dram(cfg, 100, spec, {}, 1);
  CHECK(c.states.learn_time == 5);
  CHECK(c.learn_time == std::max<std::size_t>(c.rewards.learn_time, 5));
  const auto d = assemble_dram(cfg, 100, PolicySpec::dram_learned().learners, {}, 1);
  CHECK(d.states.learn_time == d.rewards.learn_time);
  CHECK(d.learn_time == d.rewards.learn_time);
  const auto tr = run_sim(cfg, PolicySpec::dram_learned(3, 5), 100, 10, 1);
  CHECK(tr.header.learn_time == c.learn_time);
  CHECK(tr.t(0) == c.learn_time);
}

TEST_CASE("trace rows satisfy the shift identity") {
  const auto cfg = matchq::testing::load("two_task.json");
  const auto tr = run_sim(cfg, PolicySpec::dram_learned(), 100, 5000, 3);
  REQUIRE(tr.header.shift.has_value());
  const ShiftState& s = *tr.header.shift;
  for (std::size_t i = 0; i < tr.size(); i += 37) {
    const Multipliers m = measured_point(tr, i);
    const QueueState v = s.apply(tr.queues(i));
    CHECK(m.alpha_q == v.Q);
    CHECK(m.alpha_h == v.H);
    CHECK(m.alpha_d == v.d);
  }
}
