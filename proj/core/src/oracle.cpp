#include "matchq/oracle.hpp"

#include <algorithm>
#include <cmath>

#include "matchq/detail/lp.hpp"

namespace matchq {

OfflineSolution solve_offline_optimal(const SystemConfig& cfg, double V, const OracleOptions& opts) {
  const std::size_t N = cfg.n_tasks();
  const std::size_t M = cfg.m_resources();
  const std::size_t K = cfg.n_states();
  const RewardTable& r = opts.rewards ? *opts.rewards : cfg.reward_mean();
  const Vec pi = opts.pi.empty() ? cfg.probabilities() : Vec(opts.pi.begin(), opts.pi.end());
  if (pi.size() != K) throw OracleError("state distribution has the wrong length");
  const double r_max = cfg.bounds().r_max;

  // Columns: lambda^k_a for every non-zero action, then t_n.
  struct Col {
    std::size_t k, a;
  };
  std::vector<Col> cols;
  std::vector<std::size_t> zero(K);
  double base_cost = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    auto z = cfg.zero_action(k);
    if (!z) throw OracleError("state " + std::to_string(k) + " has no zero action");
    zero[k] = *z;
    base_cost += pi[k] * cfg.action(k, *z).cost;
    for (std::size_t a = 0; a < cfg.actions(k).size(); ++a)
      if (a != *z) cols.push_back({k, a});
  }
  const std::size_t L = cols.size();
  const std::size_t nv = L + N;

  detail::LpProblem lp;
  lp.c.assign(nv, 0.0);
  for (std::size_t j = 0; j < L; ++j) {
    const auto [k, a] = cols[j];
    lp.c[j] = -pi[k] * (cfg.action(k, a).cost - cfg.action(k, zero[k]).cost);
  }
  for (std::size_t n = 0; n < N; ++n) lp.c[L + n] = 1.0;

  for (std::size_t k = 0; k < K; ++k) {
    std::vector<double> row(nv, 0.0);
    for (std::size_t j = 0; j < L; ++j)
      if (cols[j].k == k) row[j] = 1.0;
    lp.A.push_back(std::move(row));
    lp.b.push_back(1.0);
  }
  for (std::size_t n = 0; n < N; ++n) {
    std::vector<double> row(nv, 0.0);
    double a_bar = 0.0;
    for (std::size_t k = 0; k < K; ++k) a_bar += pi[k] * cfg.state(k).arrivals[n];
    for (std::size_t j = 0; j < L; ++j) row[j] = pi[cols[j].k] * cfg.action(cols[j].k, cols[j].a).mu[n];
    lp.A.push_back(std::move(row));
    lp.b.push_back(a_bar);
  }
  for (std::size_t m = 0; m < M; ++m) {
    std::vector<double> row(nv, 0.0);
    double e_bar = 0.0;
    for (std::size_t k = 0; k < K; ++k) e_bar += pi[k] * cfg.state(k).resource_arrivals[m];
    for (std::size_t j = 0; j < L; ++j) row[j] = pi[cols[j].k] * cfg.action(cols[j].k, cols[j].a).usage[m];
    lp.A.push_back(std::move(row));
    lp.b.push_back(e_bar);
  }
  // t_n <= U(rho) + U'(rho) (r_bar_n - rho)
  auto add_cut = [&](std::size_t n, double rho) {
    const Utility& u = cfg.utilities()[n];
    const double slope = u.derivative(rho);
    std::vector<double> row(nv, 0.0);
    for (std::size_t j = 0; j < L; ++j) row[j] = -slope * pi[cols[j].k] * r.at(cols[j].k, cols[j].a, n);
    row[L + n] = 1.0;
    lp.A.push_back(std::move(row));
    lp.b.push_back(std::max(u.value(rho) - slope * rho, 0.0));
  };
  for (std::size_t n = 0; n < N; ++n)
    for (double rho : {0.0, 0.5 * r_max, r_max}) add_cut(n, rho);

  OfflineSolution sol;
  for (sol.rounds = 1; sol.rounds <= opts.max_rounds; ++sol.rounds) {
    const detail::LpResult res = detail::lp_maximize(lp);
    if (res.status != detail::LpResult::Status::optimal) throw OracleError("offline program: LP did not solve");

    sol.r_bar.assign(N, 0.0);
    sol.mu_bar.assign(N, 0.0);
    sol.usage_bar.assign(M, 0.0);
    sol.cost_bar = base_cost;
    sol.weights.assign(K, Vec());
    for (std::size_t k = 0; k < K; ++k) {
      sol.weights[k].assign(cfg.actions(k).size(), 0.0);
      sol.weights[k][zero[k]] = 1.0;
    }
    for (std::size_t j = 0; j < L; ++j) {
      const auto [k, a] = cols[j];
      const double lam = res.x[j];
      sol.weights[k][a] = lam;
      sol.weights[k][zero[k]] -= lam;
      const Action& act = cfg.action(k, a);
      for (std::size_t n = 0; n < N; ++n) {
        sol.r_bar[n] += pi[k] * lam * r.at(k, a, n);
        sol.mu_bar[n] += pi[k] * lam * act.mu[n];
      }
      for (std::size_t m = 0; m < M; ++m) sol.usage_bar[m] += pi[k] * lam * act.usage[m];
      sol.cost_bar += pi[k] * lam * (act.cost - cfg.action(k, zero[k]).cost);
    }
    for (auto& w : sol.weights)
      for (double& x : w) x = std::max(x, 0.0);

    double f = -sol.cost_bar;
    double worst_gap = 0.0;
    std::vector<double> gaps(N);
    for (std::size_t n = 0; n < N; ++n) {
      const double u = cfg.utilities()[n].value(sol.r_bar[n]);
      f += u;
      gaps[n] = res.x[L + n] - u;
      worst_gap = std::max(worst_gap, gaps[n]);
    }
    sol.f_star = f;
    sol.upper_bound = res.value - base_cost;
    if (worst_gap <= opts.rel_tol * std::max(1.0, std::abs(f))) break;
    for (std::size_t n = 0; n < N; ++n)
      if (gaps[n] > opts.rel_tol * std::max(1.0, std::abs(f))) add_cut(n, sol.r_bar[n]);
  }
  sol.rounds = std::min(sol.rounds, opts.max_rounds);
  sol.phi_star = V * sol.f_star;
  return sol;
}

TwoQueueResult two_queue_perturbed(double d1, double d2) {
  if (!(d1 > -1.0) || !(d2 > -1.0)) throw std::invalid_argument("perturbations must exceed -1");
  const double a = 1.0 + d1;
  const double b = 1.0 + d2;
  TwoQueueResult out;
  out.r1 = (2.0 * a * b - 2.0 * b + a) / (4.0 * a * b);
  out.r2 = (2.0 * a * b + 2.0 * b - a) / (4.0 * a * b);
  out.u_total = std::log1p(out.r1) + std::log1p(2.0 * out.r2);
  out.r1_first_order = 0.25 + (2.0 * d1 - d2) / 4.0;
  out.r2_first_order = 0.75 - (2.0 * d1 - d2) / 4.0;
  return out;
}

nlohmann::json to_json(const OfflineSolution& s) {
  return {{"f_star", s.f_star},     {"upper_bound", s.upper_bound}, {"phi_star", s.phi_star},
          {"r_bar", s.r_bar},       {"mu_bar", s.mu_bar},           {"usage_bar", s.usage_bar},
          {"cost_bar", s.cost_bar}, {"weights", s.weights},         {"rounds", s.rounds}};
}

}  // namespace matchq
