#include "matchq/dual.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>

namespace matchq {

Vec Multipliers::flatten() const {
  Vec v;
  v.reserve(size());
  v.insert(v.end(), alpha_d.begin(), alpha_d.end());
  v.insert(v.end(), alpha_q.begin(), alpha_q.end());
  v.insert(v.end(), alpha_h.begin(), alpha_h.end());
  return v;
}

Multipliers Multipliers::from_flat(std::span<const double> v, std::size_t n_tasks, std::size_t m_resources) {
  if (v.size() != 2 * n_tasks + m_resources) throw std::invalid_argument("multiplier vector has the wrong length");
  Multipliers m;
  m.alpha_d.assign(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(n_tasks));
  m.alpha_q.assign(v.begin() + static_cast<std::ptrdiff_t>(n_tasks), v.begin() + static_cast<std::ptrdiff_t>(2 * n_tasks));
  m.alpha_h.assign(v.begin() + static_cast<std::ptrdiff_t>(2 * n_tasks), v.end());
  return m;
}

double distance(const Multipliers& a, const Multipliers& b) noexcept {
  double s = 0.0;
  for (std::size_t i = 0; i < a.alpha_d.size(); ++i) s += std::pow(a.alpha_d[i] - b.alpha_d[i], 2);
  for (std::size_t i = 0; i < a.alpha_q.size(); ++i) s += std::pow(a.alpha_q[i] - b.alpha_q[i], 2);
  for (std::size_t i = 0; i < a.alpha_h.size(); ++i) s += std::pow(a.alpha_h[i] - b.alpha_h[i], 2);
  return std::sqrt(s);
}

GkResult eval_g_k(const SystemConfig& cfg, std::size_t k, const Multipliers& alpha, const RewardTable& r_table,
                  double V, const GammaDomain& domain) {
  const std::size_t N = cfg.n_tasks();
  const std::size_t M = cfg.m_resources();
  const StateSpec& st = cfg.state(k);
  const double r_max = cfg.bounds().r_max;
  GkResult out;
  InnerMaximizer& x = out.argmax;
  x.gamma.resize(N);
  x.R.resize(N);
  x.h.resize(M);

  double value = 0.0;
  for (std::size_t n = 0; n < N; ++n) {
    const Utility& u = cfg.utilities()[n];
    x.gamma[n] = maximize_penalized(u, V, alpha.alpha_d[n], r_max, domain);
    value += V * u.value(x.gamma[n]) - alpha.alpha_d[n] * x.gamma[n];
    x.R[n] = alpha.alpha_q[n] < 0.0 ? st.arrivals[n] : 0.0;
    value -= alpha.alpha_q[n] * x.R[n];
  }
  for (std::size_t m = 0; m < M; ++m) {
    x.h[m] = alpha.alpha_h[m] < 0.0 ? st.resource_arrivals[m] : 0.0;
    value -= alpha.alpha_h[m] * x.h[m];
  }

  const auto acts = cfg.actions(k);
  std::size_t best = 0;
  double best_v = -INFINITY;
  for (std::size_t a = 0; a < acts.size(); ++a) {
    const Action& act = acts[a];
    const auto r = r_table.row(k, a);
    double v = -V * act.cost;
    for (std::size_t n = 0; n < N; ++n) v += alpha.alpha_d[n] * r[n] + alpha.alpha_q[n] * act.mu[n];
    for (std::size_t m = 0; m < M; ++m) v += alpha.alpha_h[m] * act.usage[m];
    if (a == 0) {
      best_v = v;
      continue;
    }
    const double tol = 1e-9 * std::max(1.0, std::abs(best_v));
    if (v > best_v + tol) {
      best = a;
      best_v = v;
    } else if (v >= best_v - tol && act.b < acts[best].b) {
      best = a;
      best_v = std::max(v, best_v);
    }
  }
  x.action = best;
  out.value = value + best_v;
  return out;
}

DualEvaluation eval_dual(const SystemConfig& cfg, std::span<const double> pi, const RewardTable& r_table,
                         const Multipliers& alpha, double theta1, double theta2, double V,
                         const GammaDomain& domain) {
  const std::size_t N = cfg.n_tasks();
  const std::size_t M = cfg.m_resources();
  Multipliers shifted = alpha;
  for (double& q : shifted.alpha_q) q -= theta1;
  for (double& h : shifted.alpha_h) h -= theta2;

  DualEvaluation ev;
  ev.subgradient = Multipliers::zeros(N, M);
  for (std::size_t k = 0; k < cfg.n_states(); ++k) {
    if (pi[k] == 0.0) continue;
    const GkResult g = eval_g_k(cfg, k, shifted, r_table, V, domain);
    ev.value += pi[k] * g.value;
    const Action& act = cfg.action(k, g.argmax.action);
    const auto r = r_table.row(k, g.argmax.action);
    for (std::size_t n = 0; n < N; ++n) {
      ev.subgradient.alpha_d[n] += pi[k] * (r[n] - g.argmax.gamma[n]);
      ev.subgradient.alpha_q[n] += pi[k] * (act.mu[n] - g.argmax.R[n]);
    }
    for (std::size_t m = 0; m < M; ++m) ev.subgradient.alpha_h[m] += pi[k] * (act.usage[m] - g.argmax.h[m]);
  }
  return ev;
}

DualSolution solve_empirical_dual(const SystemConfig& cfg, std::span<const double> pi_hat, const RewardTable& r_hat,
                                  double theta1, double theta2, double V, const DualOptions& opts) {
  if (pi_hat.size() != cfg.n_states()) throw std::invalid_argument("state estimate has the wrong length");
  const std::size_t N = cfg.n_tasks();
  const std::size_t M = cfg.m_resources();
  const std::size_t D = 2 * N + M;
  const double step0 = opts.step0 > 0.0 ? opts.step0 : V;
  const double tol = opts.tol > 0.0 ? opts.tol : 1e-4 * V;
  const GammaDomain& domain = cfg.gamma_domain();

  auto evaluate = [&](const Vec& flat) {
    return eval_dual(cfg, pi_hat, r_hat, Multipliers::from_flat(flat, N, M), theta1, theta2, V, domain);
  };
  auto project = [&](Vec& flat) {
    for (std::size_t i = 0; i < N; ++i) flat[i] = std::max(flat[i], 0.0);
  };

  Vec x(D, 0.0);
  project(x);
  Vec avg(D, 0.0);
  std::size_t avg_count = 0;
  std::size_t next_reset = 1;

  DualSolution sol;
  Vec best_x = x;
  double best_v = INFINITY;
  // (iteration, best value) at each checkpoint, for the window rule.
  std::deque<std::pair<std::size_t, double>> history;

  auto consider = [&](const Vec& p, double v) {
    if (v < best_v) {
      best_v = v;
      best_x = p;
    }
  };

  std::size_t t = 1;
  for (; t <= opts.max_iters; ++t) {
    const DualEvaluation ev = evaluate(x);
    consider(x, ev.value);
    const Vec g = ev.subgradient.flatten();
    double gnorm = 0.0;
    for (double gi : g) gnorm += gi * gi;
    if (gnorm == 0.0) {
      sol.converged = true;
      break;
    }
    const double eta = step0 / std::sqrt(static_cast<double>(t));
    for (std::size_t i = 0; i < D; ++i) x[i] -= eta * g[i];
    project(x);

    if (t == next_reset) {
      std::fill(avg.begin(), avg.end(), 0.0);
      avg_count = 0;
      next_reset *= 2;
    }
    ++avg_count;
    for (std::size_t i = 0; i < D; ++i) avg[i] += (x[i] - avg[i]) / static_cast<double>(avg_count);

    if (t % opts.check_every == 0) {
      consider(avg, evaluate(avg).value);
      history.emplace_back(t, best_v);
      while (history.size() > 1 && history[1].first + opts.window <= t) history.pop_front();
      if (history.front().first + opts.window <= t) {
        sol.residual = history.front().second - best_v;
        if (sol.residual < tol) {
          sol.converged = true;
          break;
        }
      }
    }
  }
  sol.iterations = std::min(t, opts.max_iters);
  sol.alpha_star = Multipliers::from_flat(best_x, N, M);
  sol.g_value = evaluate(best_x).value;
  if (!sol.converged && !history.empty()) sol.residual = history.front().second - best_v;
  return sol;
}

nlohmann::json to_json(const Multipliers& m) {
  return {{"alpha_d", m.alpha_d}, {"alpha_q", m.alpha_q}, {"alpha_h", m.alpha_h}};
}

nlohmann::json to_json(const DualSolution& s) {
  return {{"alpha_star", to_json(s.alpha_star)},
          {"g_value", s.g_value},
          {"iterations", s.iterations},
          {"residual", s.residual},
          {"converged", s.converged}};
}

Multipliers multipliers_from_json(const nlohmann::json& j) {
  Multipliers m;
  m.alpha_d = j.at("alpha_d").get<Vec>();
  m.alpha_q = j.at("alpha_q").get<Vec>();
  m.alpha_h = j.at("alpha_h").get<Vec>();
  return m;
}

}  // namespace matchq
