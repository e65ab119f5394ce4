#include "matchq/dram_policy.hpp"

#include <algorithm>
#include <stdexcept>

namespace matchq {

void ShiftState::apply(const QueueState& qs, Vec& Q_hat, Vec& H_hat, Vec& d_hat) const {
  Q_hat.resize(qs.Q.size());
  H_hat.resize(qs.H.size());
  d_hat.resize(qs.d.size());
  for (std::size_t n = 0; n < qs.Q.size(); ++n) {
    Q_hat[n] = qs.Q[n] + alpha_hat.alpha_q[n] - zeta;
    d_hat[n] = qs.d[n] + alpha_hat.alpha_d[n] - zeta;
  }
  for (std::size_t m = 0; m < qs.H.size(); ++m) H_hat[m] = qs.H[m] + alpha_hat.alpha_h[m] - zeta;
}

QueueState ShiftState::apply(const QueueState& qs) const {
  QueueState out;
  apply(qs, out.Q, out.H, out.d);
  return out;
}

void dram_slot(const SystemConfig& cfg, std::size_t k, QueueState& qs, const ShiftState& shift,
               const PolicyParams& p, CounterRng& reward_rng, SlotRecord& rec, const DramOptions& opts) {
  thread_local QueueState view;
  shift.apply(qs, view.Q, view.H, view.d);
  decide_slot(cfg, k, view.Q, view.H, view.d, p, false, rec);

  const std::size_t N = cfg.n_tasks();
  const std::size_t M = cfg.m_resources();
  thread_local std::vector<char> forfeit;
  forfeit.assign(N, 0);
  for (std::size_t m = 0; m < M; ++m) {
    if (rec.usage[m] <= qs.H[m] + kUnderflowTolerance) continue;
    const double target = std::min(rec.h[m], qs.H[m]);
    const double scale = target / rec.usage[m];
    double sum = 0.0;
    for (std::size_t n = 0; n < N; ++n) {
      double& bmn = rec.b[m * N + n];
      if (bmn > 0.0) forfeit[n] = 1;
      bmn *= scale;
      sum += bmn;
    }
    // Summed the same way as Matrix::row_sum so a replay reproduces H exactly.
    rec.usage[m] = sum;
    rec.dropped = true;
  }

  if (rec.dropped) {
    const Matrix b_tilde(M, N, rec.b);
    rec.cost = cfg.cost(k, b_tilde);
    if (opts.serve_with_actual) {
      const Vec mu = cfg.service(k, b_tilde);
      std::copy(mu.begin(), mu.end(), rec.mu.begin());
      std::fill(forfeit.begin(), forfeit.end(), 0);
    }
  }
  for (std::size_t n = 0; n < N; ++n) rec.mu_tilde[n] = forfeit[n] ? 0.0 : std::min(qs.Q[n], rec.mu[n]);
  sample_reward(reward_rng, cfg, k, rec.action, rec.mu_tilde, rec.kappa);
  for (std::size_t n = 0; n < N; ++n)
    if (forfeit[n]) rec.kappa[n] = 0.0;
  step_queues_inplace(qs, rec.mu, rec.R, rec.usage, rec.h, rec.kappa, rec.gamma);
}

RewardEstimate learn_rewards(const SystemConfig& cfg, double V, const LearnerSpec& learners, std::uint64_t seed) {
  using RS = LearnerSpec::RewardSource;
  switch (learners.reward_source) {
    case RS::exact: return exact_rewards(cfg);
    case RS::tbs: {
      CounterRng rng(seed, Stream::reward_learning);
      return run_tbs(cfg, learners.s_th ? learners.s_th : default_sample_threshold(V), rng);
    }
    case RS::perturbed: {
      CounterRng rng(seed, Stream::perturbation);
      return perturbed_oracle(cfg, learners.delta_r, rng);
    }
    case RS::provided:
      if (!learners.rewards) throw std::invalid_argument("provided reward estimate missing");
      return *learners.rewards;
  }
  return exact_rewards(cfg);
}

DramController assemble_dram(const SystemConfig& cfg, double V, const LearnerSpec& learners,
                             const DualOptions& dual_opts, std::uint64_t seed, std::optional<double> zeta_override) {
  DramController c;
  c.rewards = learn_rewards(cfg, V, learners, seed);

  using SS = LearnerSpec::StateSource;
  switch (learners.state_source) {
    case SS::exact: c.states = exact_states(cfg); break;
    case SS::tls: {
      std::size_t t_th = learners.t_th;
      if (t_th == 0) t_th = c.rewards.learn_time ? c.rewards.learn_time : default_sample_threshold(V);
      CounterRng rng(seed, Stream::state_learning);
      c.states = run_tls(cfg, t_th, rng);
      break;
    }
    case SS::provided:
      if (!learners.states) throw std::invalid_argument("provided state estimate missing");
      c.states = *learners.states;
      break;
  }
  c.learn_time = std::max(c.rewards.learn_time, c.states.learn_time);

  const double beta_hat = compute_beta_r_hat(c.rewards.r_hat, cfg);
  c.constants = derive_constants(cfg, V, beta_hat, c.states.delta_z);
  if (zeta_override) c.constants.zeta = *zeta_override;
  c.params = make_policy_params(cfg, c.constants, std::make_shared<const RewardTable>(c.rewards.r_hat));
  c.dual = solve_empirical_dual(cfg, c.states.pi_hat, c.rewards.r_hat, c.constants.theta1, c.constants.theta2, V,
                                dual_opts);
  c.shift.alpha_hat = c.dual.alpha_star;
  c.shift.zeta = c.constants.zeta;
  return c;
}

nlohmann::json to_json(const ShiftState& s) { return {{"alpha_hat", to_json(s.alpha_hat)}, {"zeta", s.zeta}}; }

}  // namespace matchq
