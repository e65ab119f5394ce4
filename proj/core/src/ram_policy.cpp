#include "matchq/ram_policy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace matchq {

PolicyParams make_policy_params(const SystemConfig& cfg, const DerivedConstants& dc,
                                std::shared_ptr<const RewardTable> r_hat) {
  if (!(dc.V >= 1.0)) throw std::invalid_argument("V must be at least 1");
  PolicyParams p;
  p.V = dc.V;
  p.theta1 = dc.theta1;
  p.theta2 = dc.theta2;
  p.reward_table = std::move(r_hat);
  p.gamma_domain = cfg.gamma_domain();
  return p;
}

double quota_step(const SystemConfig& cfg, double d_n, const PolicyParams& p, std::size_t n) noexcept {
  return maximize_penalized(cfg.utilities()[n], p.V, d_n, cfg.bounds().r_max, p.gamma_domain);
}

void admission_step(std::span<const double> Q, std::span<const double> H, std::span<const double> A,
                    std::span<const double> e, const PolicyParams& p, std::span<double> R_out,
                    std::span<double> h_out) noexcept {
  for (std::size_t n = 0; n < Q.size(); ++n) R_out[n] = Q[n] < p.theta1 ? A[n] : 0.0;
  for (std::size_t m = 0; m < H.size(); ++m) h_out[m] = H[m] < p.theta2 ? e[m] : 0.0;
}

double psi(const SystemConfig& cfg, std::size_t k, std::size_t a, std::span<const double> Q,
           std::span<const double> H, std::span<const double> d, const PolicyParams& p) noexcept {
  const Action& act = cfg.action(k, a);
  const auto r = p.reward_table->row(k, a);
  double v = p.V * act.cost;
  for (std::size_t m = 0; m < H.size(); ++m) v -= (H[m] - p.theta2) * act.usage[m];
  for (std::size_t n = 0; n < Q.size(); ++n) v -= (Q[n] - p.theta1) * act.mu[n] + d[n] * r[n];
  return v;
}

std::size_t resource_step(const SystemConfig& cfg, std::size_t k, std::span<const double> Q,
                          std::span<const double> H, std::span<const double> d, const PolicyParams& p,
                          bool enforce_underflow) {
  const auto acts = cfg.actions(k);
  std::size_t best = acts.size();
  double best_v = 0.0;
  for (std::size_t a = 0; a < acts.size(); ++a) {
    if (enforce_underflow) {
      bool fits = true;
      for (std::size_t m = 0; m < H.size(); ++m)
        if (acts[a].usage[m] > H[m] + kUnderflowTolerance) fits = false;
      if (!fits) continue;
    }
    const double v = psi(cfg, k, a, Q, H, d, p);
    if (best == acts.size()) {
      best = a;
      best_v = v;
      continue;
    }
    const double tol = 1e-9 * std::max(1.0, std::abs(best_v));
    if (v < best_v - tol) {
      best = a;
      best_v = v;
    } else if (v <= best_v + tol && acts[a].b < acts[best].b) {
      best = a;
      best_v = std::min(v, best_v);
    }
  }
  if (best == acts.size()) throw std::runtime_error("resource step: no feasible action in state " + std::to_string(k));
  return best;
}

void SlotRecord::resize(std::size_t N, std::size_t M) {
  gamma.resize(N);
  R.resize(N);
  h.resize(M);
  b.resize(M * N);
  usage.resize(M);
  mu.resize(N);
  mu_tilde.resize(N);
  kappa.resize(N);
}

void decide_slot(const SystemConfig& cfg, std::size_t k, std::span<const double> Q, std::span<const double> H,
                 std::span<const double> d, const PolicyParams& p, bool enforce_underflow, SlotRecord& rec) {
  const std::size_t N = cfg.n_tasks();
  rec.resize(N, cfg.m_resources());
  rec.k = k;
  rec.dropped = false;
  for (std::size_t n = 0; n < N; ++n) rec.gamma[n] = quota_step(cfg, d[n], p, n);
  const StateSpec& st = cfg.state(k);
  admission_step(Q, H, st.arrivals, st.resource_arrivals, p, rec.R, rec.h);
  rec.action = resource_step(cfg, k, Q, H, d, p, enforce_underflow);
  const Action& act = cfg.action(k, rec.action);
  std::copy(act.b.values().begin(), act.b.values().end(), rec.b.begin());
  std::copy(act.usage.begin(), act.usage.end(), rec.usage.begin());
  std::copy(act.mu.begin(), act.mu.end(), rec.mu.begin());
  rec.cost = act.cost;
}

void ram_slot(const SystemConfig& cfg, std::size_t k, QueueState& qs, const PolicyParams& p,
              CounterRng& reward_rng, SlotRecord& rec) {
  decide_slot(cfg, k, qs.Q, qs.H, qs.d, p, false, rec);
  for (std::size_t n = 0; n < cfg.n_tasks(); ++n) rec.mu_tilde[n] = std::min(qs.Q[n], rec.mu[n]);
  sample_reward(reward_rng, cfg, k, rec.action, rec.mu_tilde, rec.kappa);
  step_queues_inplace(qs, rec.mu, rec.R, rec.usage, rec.h, rec.kappa, rec.gamma);
}

}  // namespace matchq
