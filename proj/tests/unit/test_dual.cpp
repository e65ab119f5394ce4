#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "matchq/dual.hpp"
#include "matchq/oracle.hpp"
#include "support.hpp"

using namespace matchq;

namespace {

// g_k by enumerating the cross product of a gamma grid, B_k and the corners of R and h.
double brute_g_k(const SystemConfig& cfg, std::size_t k, const Multipliers& al, double V, double step) {
  const std::size_t N = cfg.n_tasks(), M = cfg.m_resources();
  const double r_max = cfg.bounds().r_max;
  const std::size_t G = static_cast<std::size_t>(std::llround(r_max / step)) + 1;
  std::vector<Vec> gval(N, Vec(G));
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t i = 0; i < G; ++i) {
      const double g = std::min(r_max, i * step);
      gval[n][i] = V * cfg.utilities()[n].value(g) - al.alpha_d[n] * g;
    }
  const auto& st = cfg.state(k);
  double best = -1e300;
  for (std::size_t a = 0; a < cfg.actions(k).size(); ++a) {
    const Action& act = cfg.action(k, a);
    for (std::size_t rmask = 0; rmask < (1u << N); ++rmask)
      for (std::size_t hmask = 0; hmask < (1u << M); ++hmask) {
        double base = -V * act.cost;
        for (std::size_t n = 0; n < N; ++n) {
          const double R = (rmask >> n & 1) ? st.arrivals[n] : 0.0;
          base += al.alpha_d[n] * cfg.reward_mean().at(k, a, n) + al.alpha_q[n] * (act.mu[n] - R);
        }
        for (std::size_t m = 0; m < M; ++m) {
          const double h = (hmask >> m & 1) ? st.resource_arrivals[m] : 0.0;
          base += al.alpha_h[m] * (act.usage[m] - h);
        }
        // full cross product over the gamma grid (N = 2 here, N = 1 for the tiny case)
        if (N == 1) {
          for (std::size_t i = 0; i < G; ++i) best = std::max(best, base + gval[0][i]);
        } else {
          for (std::size_t i = 0; i < G; ++i)
            for (std::size_t j = 0; j < G; ++j) best = std::max(best, base + gval[0][i] + gval[1][j]);
        }
      }
  }
  return best;
}

Multipliers random_alpha(CounterRng& rng, std::size_t N, std::size_t M, double scale) {
  Multipliers a = Multipliers::zeros(N, M);
  for (double& x : a.alpha_d) x = scale * rng.uniform();
  for (double& x : a.alpha_q) x = scale * (2 * rng.uniform() - 1);
  for (double& x : a.alpha_h) x = scale * (2 * rng.uniform() - 1);
  return a;
}

}  // namespace

TEST_CASE("zero multipliers on a cost-free instance give V sum U(r_max)") {
  const auto cfg = matchq::testing::load("two_queue.json");
  const auto res = eval_g_k(cfg, 0, Multipliers::zeros(2, 1), cfg.reward_mean(), 10.0, cfg.gamma_domain());
  CHECK(res.value == doctest::Approx(10.0 * (std::log(2.0) + std::log(3.0))));
}

TEST_CASE("negative task multiplier admits arrivals in the maximizer") {
  const auto cfg = matchq::testing::load("two_task.json");
  Multipliers a = Multipliers::zeros(2, 1);
  a.alpha_q = {-1.0, 3.0};
  a.alpha_h = {-2.0};
  for (std::size_t k = 0; k < cfg.n_states(); ++k) {
    const auto res = eval_g_k(cfg, k, a, cfg.reward_mean(), 10.0, cfg.gamma_domain());
    CHECK(res.argmax.R[0] == cfg.state(k).arrivals[0]);
    CHECK(res.argmax.R[1] == 0.0);
    CHECK(res.argmax.h[0] == cfg.state(k).resource_arrivals[0]);
  }
}

TEST_CASE("g_k agrees with the brute-force cross product") {
  const auto cfg = matchq::testing::load("two_task.json");
  const double step = 0.01;
  SUBCASE("alpha = 0, V = 10") {
    for (std::size_t k = 0; k < cfg.n_states(); ++k) {
      const double exact = eval_g_k(cfg, k, Multipliers::zeros(2, 1), cfg.reward_mean(), 10, cfg.gamma_domain()).value;
      CHECK(exact == doctest::Approx(brute_g_k(cfg, k, Multipliers::zeros(2, 1), 10, step)).epsilon(1e-12));
    }
  }
  SUBCASE("random alpha: the grid value is a lower bound within slope * step") {
    CounterRng rng(6, Stream::perturbation);
    for (int t = 0; t < 20; ++t) {
      const auto al = random_alpha(rng, 2, 1, 40.0);
      const std::size_t k = t % cfg.n_states();
      const double exact = eval_g_k(cfg, k, al, cfg.reward_mean(), 10, cfg.gamma_domain()).value;
      const double grid = brute_g_k(cfg, k, al, 10, step);
      const double slack = 2 * (10 * 5 + 40) * step;
      CHECK(grid <= exact + 1e-9);
      CHECK(grid >= exact - slack);
    }
  }
}

TEST_CASE("tiny instance: solver minimum matches a 0.1 grid") {
  const auto cfg = config_from_json(matchq::testing::tiny_json());
  const Vec pi{1.0};
  const double V = 10.0;
  // g(a) = max(0, 2(V - a_d)) + max(0, -a_q) + max(0, -a_h) + max(0, a_d + a_q + a_h - V c)
  double grid_min = 1e300;
  for (int i = 0; i <= 500; ++i) {
    const double ad = 0.1 * i;
    const double t1 = std::max(0.0, 2 * (V - ad));
    for (int j = -500; j <= 500; ++j) {
      const double aq = 0.1 * j;
      const double t2 = t1 + std::max(0.0, -aq);
      for (int l = -500; l <= 500; ++l) {
        const double ah = 0.1 * l;
        grid_min = std::min(grid_min, t2 + std::max(0.0, -ah) + std::max(0.0, ad + aq + ah - 0.5 * V));
      }
    }
  }
  // The closed form above must be the same function the library evaluates.
  CounterRng rng(10, Stream::perturbation);
  for (int t = 0; t < 200; ++t) {
    const auto a = random_alpha(rng, 1, 1, 50.0);
    const double closed = std::max(0.0, 2 * (V - a.alpha_d[0])) + std::max(0.0, -a.alpha_q[0]) +
                          std::max(0.0, -a.alpha_h[0]) +
                          std::max(0.0, a.alpha_d[0] + a.alpha_q[0] + a.alpha_h[0] - 0.5 * V);
    CHECK(eval_dual(cfg, pi, cfg.reward_mean(), a, 0, 0, V, cfg.gamma_domain()).value ==
          doctest::Approx(closed).epsilon(1e-12));
  }
  const auto sol = solve_empirical_dual(cfg, pi, cfg.reward_mean(), 0, 0, V);
  CHECK(grid_min == doctest::Approx(5.0));
  CHECK(std::abs(sol.g_value - grid_min) <= 0.05);
  CHECK(eval_dual(cfg, pi, cfg.reward_mean(), sol.alpha_star, 0, 0, V, cfg.gamma_domain()).value ==
        doctest::Approx(sol.g_value).epsilon(1e-9));
}

TEST_CASE("subgradient inequality on 1000 random pairs") {
  const auto cfg = matchq::testing::load("two_task.json");
  const Vec pi = cfg.probabilities();
  CounterRng rng(12, Stream::perturbation);
  int worst_ok = 0;
  for (int t = 0; t < 1000; ++t) {
    const double scale = (t % 2) ? 60.0 : 600.0;
    const auto a = random_alpha(rng, 2, 1, scale), b = random_alpha(rng, 2, 1, scale);
    const auto ea = eval_dual(cfg, pi, cfg.reward_mean(), a, 300, 300, 100, cfg.gamma_domain());
    const auto eb = eval_dual(cfg, pi, cfg.reward_mean(), b, 300, 300, 100, cfg.gamma_domain());
    const Vec s = ea.subgradient.flatten(), va = a.flatten(), vb = b.flatten();
    double lin = ea.value;
    for (std::size_t i = 0; i < s.size(); ++i) lin += s[i] * (vb[i] - va[i]);
    worst_ok += eb.value >= lin - 1e-7;
  }
  CHECK(worst_ok == 1000);
}

TEST_CASE("weak duality against the offline optimum") {
  for (const char* name : {"two_task.json", "two_queue.json"}) {
    const auto cfg = matchq::testing::load(name);
    for (double V : {10.0, 100.0}) {
      CAPTURE(name);
      CAPTURE(V);
      const auto dc = derive_constants(cfg, V, compute_beta_r_hat(cfg.reward_mean(), cfg));
      const auto sol = solve_empirical_dual(cfg, cfg.probabilities(), cfg.reward_mean(), dc.theta1, dc.theta2, V);
      const double f = solve_offline_optimal(cfg, V).f_star;
      CHECK(sol.g_value >= V * f - 1e-3 * V);
      // and the dual is reasonably tight
      CHECK(sol.g_value <= V * f + 0.01 * V);
      CHECK(sol.alpha_star.alpha_d[0] >= 0.0);
    }
  }
}

TEST_CASE("solution serializes") {
  const auto cfg = matchq::testing::load("two_queue.json");
  const auto sol = solve_empirical_dual(cfg, cfg.probabilities(), cfg.reward_mean(), 5, 5, 10);
  CHECK(multipliers_from_json(to_json(sol.alpha_star)) == sol.alpha_star);
  CHECK(to_json(sol).contains("g_value"));
}
