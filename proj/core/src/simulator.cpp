#include "matchq/simulator.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "matchq/learning.hpp"

namespace matchq {

PolicySpec PolicySpec::ram() { return PolicySpec{}; }

PolicySpec PolicySpec::lram(double delta_r) {
  PolicySpec p;
  p.kind = PolicyKind::lram;
  p.learners.reward_source = LearnerSpec::RewardSource::perturbed;
  p.learners.delta_r = delta_r;
  return p;
}

PolicySpec PolicySpec::lram_tbs(std::size_t s_th) {
  PolicySpec p;
  p.kind = PolicyKind::lram;
  p.learners.reward_source = LearnerSpec::RewardSource::tbs;
  p.learners.s_th = s_th;
  return p;
}

PolicySpec PolicySpec::dram_learned(std::size_t s_th, std::size_t t_th) {
  PolicySpec p;
  p.kind = PolicyKind::dram;
  p.learners.reward_source = LearnerSpec::RewardSource::tbs;
  p.learners.s_th = s_th;
  p.learners.state_source = LearnerSpec::StateSource::tls;
  p.learners.t_th = t_th;
  return p;
}

PolicySpec PolicySpec::dram_state_only(std::size_t t_th) {
  PolicySpec p;
  p.kind = PolicyKind::dram;
  p.learners.reward_source = LearnerSpec::RewardSource::exact;
  p.learners.state_source = LearnerSpec::StateSource::tls;
  p.learners.t_th = t_th;
  return p;
}

std::string PolicySpec::id() const {
  using RS = LearnerSpec::RewardSource;
  switch (kind) {
    case PolicyKind::ram: return "ram";
    case PolicyKind::lram:
      if (learners.reward_source == RS::tbs) return "lram-tbs";
      if (learners.reward_source == RS::perturbed) return "lram-" + format_double(learners.delta_r);
      return "lram";
    case PolicyKind::dram: return learners.reward_source == RS::tbs ? "dram" : "dram-state";
  }
  return "unknown";
}

PolicySpec parse_policy(std::string_view id) {
  if (id == "ram") return PolicySpec::ram();
  if (id == "lram") return PolicySpec::lram(0.0);
  if (id == "lram-tbs") return PolicySpec::lram_tbs();
  if (id == "dram") return PolicySpec::dram_learned();
  if (id == "dram-state") return PolicySpec::dram_state_only();
  if (id.starts_with("lram-")) {
    const std::string_view num = id.substr(5);
    double delta = 0.0;
    auto [ptr, ec] = std::from_chars(num.data(), num.data() + num.size(), delta);
    if (ec == std::errc() && ptr == num.data() + num.size() && delta >= 0.0) return PolicySpec::lram(delta);
  }
  throw std::invalid_argument("unknown policy '" + std::string(id) +
                              "' (expected ram, lram, lram-<delta>, lram-tbs, dram, dram-state)");
}

SimTrace::SimTrace(std::size_t n_tasks, std::size_t m_resources) : N_(n_tasks), M_(m_resources) {
  std::size_t off = 0;
  auto take = [&](std::size_t len) {
    const std::size_t o = off;
    off += len;
    return o;
  };
  o_gamma_ = take(N_);
  o_R_ = take(N_);
  o_h_ = take(M_);
  o_b_ = take(M_ * N_);
  o_mu_ = take(N_);
  o_kappa_ = take(N_);
  o_cost_ = take(1);
  o_Q_ = take(N_);
  o_H_ = take(M_);
  o_d_ = take(N_);
  o_mut_ = take(N_);
  W_ = off;
  header.n_tasks = N_;
  header.m_resources = M_;
}

void SimTrace::reserve(std::size_t rows) {
  t_.reserve(rows);
  k_.reserve(rows);
  drop_.reserve(rows);
  v_.reserve(rows * W_);
}

void SimTrace::append(std::size_t t, const SlotRecord& rec, const QueueState& before) {
  t_.push_back(t);
  k_.push_back(rec.k);
  drop_.push_back(rec.dropped ? 1 : 0);
  const std::size_t base = v_.size();
  v_.resize(base + W_);
  double* row = v_.data() + base;
  std::copy(rec.gamma.begin(), rec.gamma.end(), row + o_gamma_);
  std::copy(rec.R.begin(), rec.R.end(), row + o_R_);
  std::copy(rec.h.begin(), rec.h.end(), row + o_h_);
  std::copy(rec.b.begin(), rec.b.end(), row + o_b_);
  std::copy(rec.mu.begin(), rec.mu.end(), row + o_mu_);
  std::copy(rec.kappa.begin(), rec.kappa.end(), row + o_kappa_);
  row[o_cost_] = rec.cost;
  std::copy(before.Q.begin(), before.Q.end(), row + o_Q_);
  std::copy(before.H.begin(), before.H.end(), row + o_H_);
  std::copy(before.d.begin(), before.d.end(), row + o_d_);
  std::copy(rec.mu_tilde.begin(), rec.mu_tilde.end(), row + o_mut_);
}

void SimTrace::append_raw(std::size_t t, std::size_t k, std::span<const double> csv_block, bool drop) {
  if (csv_block.size() != o_mut_) throw std::invalid_argument("trace row has the wrong number of values");
  t_.push_back(t);
  k_.push_back(k);
  drop_.push_back(drop ? 1 : 0);
  v_.insert(v_.end(), csv_block.begin(), csv_block.end());
  v_.insert(v_.end(), N_, std::nan(""));
}

QueueState SimTrace::queues(std::size_t i) const {
  const auto q = Q(i), hh = H(i), dd = d(i);
  return {Vec(q.begin(), q.end()), Vec(hh.begin(), hh.end()), Vec(dd.begin(), dd.end())};
}

Vec SimTrace::usage(std::size_t i) const { return Matrix(M_, N_, Vec(b(i).begin(), b(i).end())).row_sums(); }

namespace {

struct Caps {
  double d_max, q_cap, h_cap;
};

// Returns a description of the first broken guarantee, or empty.
std::string check_slot(const SlotRecord& rec, const QueueState& after, const Caps& caps) {
  constexpr double tol = 1e-9;
  std::ostringstream os;
  os.precision(17);
  for (std::size_t n = 0; n < rec.mu.size(); ++n) {
    if (rec.mu_tilde[n] != rec.mu[n]) {
      os << "task " << n << " served " << rec.mu_tilde[n] << " of nominal " << rec.mu[n];
      return os.str();
    }
    if (after.d[n] > caps.d_max + tol) {
      os << "deficit queue " << n << " reached " << after.d[n] << " above cap " << caps.d_max;
      return os.str();
    }
    if (after.Q[n] > caps.q_cap + tol) {
      os << "task queue " << n << " reached " << after.Q[n] << " above cap " << caps.q_cap;
      return os.str();
    }
  }
  for (std::size_t m = 0; m < after.H.size(); ++m) {
    if (after.H[m] > caps.h_cap + tol) {
      os << "resource queue " << m << " reached " << after.H[m] << " above cap " << caps.h_cap;
      return os.str();
    }
  }
  return {};
}

}  // namespace

SimTrace run_sim(const SystemConfig& cfg, const PolicySpec& policy, double V, std::size_t horizon,
                 std::uint64_t seed, const SimOptions& opts) {
  if (horizon == 0) throw std::invalid_argument("horizon must be at least 1");
  const std::size_t N = cfg.n_tasks();
  const std::size_t M = cfg.m_resources();
  SimTrace trace(N, M);
  TraceHeader& hd = trace.header;
  hd.config_hash = cfg.hash();
  hd.policy_id = policy.id();
  hd.V = V;
  hd.seed = seed;

  PolicyParams params;
  std::optional<DramController> dram;
  if (policy.kind == PolicyKind::dram) {
    dram = assemble_dram(cfg, V, policy.learners, policy.dual, seed, policy.zeta);
    params = dram->params;
    hd.learn_time = dram->learn_time;
    hd.constants = dram->constants;
    hd.shift = dram->shift;
    hd.delta_r = dram->rewards.delta_r;
  } else {
    RewardEstimate est = policy.kind == PolicyKind::ram ? exact_rewards(cfg) : learn_rewards(cfg, V, policy.learners, seed);
    hd.learn_time = est.learn_time;
    hd.delta_r = est.delta_r;
    hd.constants = derive_constants(cfg, V, compute_beta_r_hat(est.r_hat, cfg));
    if (policy.zeta) hd.constants.zeta = *policy.zeta;
    params = make_policy_params(cfg, hd.constants, std::make_shared<const RewardTable>(std::move(est.r_hat)));
  }
  const Caps caps{hd.constants.d_max, hd.constants.q_cap, hd.constants.h_cap};

  CounterRng state_rng(seed, Stream::control_state);
  CounterRng reward_rng(seed, Stream::control_reward);
  const auto cdf = cfg.state_cdf();
  QueueState qs = QueueState::zeros(N, M);
  QueueState before = qs;
  SlotRecord rec;
  rec.resize(N, M);
  trace.reserve(horizon);

  for (std::size_t i = 0; i < horizon; ++i) {
    const std::size_t k = sample_from_cdf(state_rng, cdf);
    before = qs;
    if (dram) {
      dram_slot(cfg, k, qs, dram->shift, params, reward_rng, rec, policy.dram);
    } else {
      ram_slot(cfg, k, qs, params, reward_rng, rec);
      if (opts.strict) {
        const std::string broken = check_slot(rec, qs, caps);
        if (!broken.empty())
          throw InvariantError("slot " + std::to_string(hd.learn_time + i) + " (" + hd.policy_id + "): " + broken);
      }
    }
    trace.append(hd.learn_time + i, rec, before);
  }
  return trace;
}

std::size_t default_burn_in(std::size_t rows) noexcept { return rows / 5; }

Metrics summarize(const SimTrace& trace, const SystemConfig& cfg, std::size_t burn_in) {
  const std::size_t N = trace.n_tasks();
  const std::size_t M = trace.m_resources();
  const std::size_t T = trace.size();
  if (burn_in >= T) throw std::invalid_argument("burn-in must be shorter than the trace");
  Metrics mt;
  mt.burn_in = burn_in;
  mt.rows = T - burn_in;
  mt.r_bar.assign(N, 0.0);
  mt.mean_Q.assign(N, 0.0);
  mt.max_Q.assign(N, 0.0);
  mt.mean_d.assign(N, 0.0);
  mt.max_d.assign(N, 0.0);
  mt.mean_H.assign(M, 0.0);
  mt.max_H.assign(M, 0.0);
  for (std::size_t i = burn_in; i < T; ++i) {
    const auto kap = trace.kappa(i), q = trace.Q(i), dd = trace.d(i), hh = trace.H(i);
    for (std::size_t n = 0; n < N; ++n) {
      mt.r_bar[n] += kap[n];
      mt.mean_Q[n] += q[n];
      mt.max_Q[n] = std::max(mt.max_Q[n], q[n]);
      mt.mean_d[n] += dd[n];
      mt.max_d[n] = std::max(mt.max_d[n], dd[n]);
    }
    for (std::size_t m = 0; m < M; ++m) {
      mt.mean_H[m] += hh[m];
      mt.max_H[m] = std::max(mt.max_H[m], hh[m]);
    }
    mt.cost_bar += trace.cost(i);
  }
  const double rows = static_cast<double>(mt.rows);
  for (std::size_t n = 0; n < N; ++n) {
    mt.r_bar[n] /= rows;
    mt.mean_Q[n] /= rows;
    mt.mean_d[n] /= rows;
    mt.mean_Q_total += mt.mean_Q[n];
    mt.mean_d_total += mt.mean_d[n];
  }
  for (std::size_t m = 0; m < M; ++m) {
    mt.mean_H[m] /= rows;
    mt.mean_H_total += mt.mean_H[m];
  }
  mt.cost_bar /= rows;
  mt.f_av = -mt.cost_bar;
  for (std::size_t n = 0; n < N; ++n) mt.f_av += cfg.utilities()[n].value(mt.r_bar[n]);
  for (std::size_t i = 0; i < T; ++i) mt.drops += trace.dropped(i) ? 1 : 0;
  mt.drop_fraction = static_cast<double>(mt.drops) / static_cast<double>(T);
  return mt;
}

Multipliers measured_point(const SimTrace& trace, std::size_t i) {
  const QueueState qs = trace.queues(i);
  if (trace.header.shift) {
    const QueueState s = trace.header.shift->apply(qs);
    return {s.d, s.Q, s.H};
  }
  return {qs.d, qs.Q, qs.H};
}

std::optional<std::size_t> convergence_time(const SimTrace& trace, const Multipliers& target, double D) {
  for (std::size_t i = 0; i < trace.size(); ++i)
    if (distance(measured_point(trace, i), target) <= D) return trace.t(i);
  return std::nullopt;
}

Vec residual_distances(const SimTrace& trace, const Multipliers& target, std::size_t from) {
  Vec out;
  for (std::size_t i = from; i < trace.size(); ++i) out.push_back(distance(measured_point(trace, i), target));
  return out;
}

Multipliers ConvergenceTarget::point_for(const DerivedConstants& dc) const {
  Multipliers p = raw;
  for (double& q : p.alpha_q) q += dc.theta1;
  for (double& h : p.alpha_h) h += dc.theta2;
  return p;
}

ConvergenceTarget true_convergence_target(const SystemConfig& cfg, double V, const DualOptions& opts) {
  ConvergenceTarget ct;
  ct.constants = derive_constants(cfg, V, compute_beta_r_hat(cfg.reward_mean(), cfg));
  const Vec pi = cfg.probabilities();
  ct.dual = solve_empirical_dual(cfg, pi, cfg.reward_mean(), ct.constants.theta1, ct.constants.theta2, V, opts);
  ct.raw = ct.dual.alpha_star;
  for (double& q : ct.raw.alpha_q) q -= ct.constants.theta1;
  for (double& h : ct.raw.alpha_h) h -= ct.constants.theta2;
  return ct;
}

double quantile(Vec samples, double q) {
  if (samples.empty()) throw std::invalid_argument("quantile of an empty sample");
  const double pos = std::ceil(std::clamp(q, 0.0, 1.0) * static_cast<double>(samples.size()));
  const std::size_t idx = std::min(samples.size() - 1, static_cast<std::size_t>(std::max(pos, 1.0)) - 1);
  std::nth_element(samples.begin(), samples.begin() + static_cast<std::ptrdiff_t>(idx), samples.end());
  return samples[idx];
}

double fit_convergence_radius(const SystemConfig& cfg, double V, std::size_t n_seeds, std::size_t horizon,
                              const ConvergenceTarget& target, double q) {
  Vec pooled;
  for (std::uint64_t s = 1; s <= n_seeds; ++s) {
    const SimTrace tr = run_sim(cfg, PolicySpec::ram(), V, horizon, s);
    const Vec r = residual_distances(tr, target.point_for(tr.header.constants), default_burn_in(tr.size()));
    pooled.insert(pooled.end(), r.begin(), r.end());
  }
  return quantile(std::move(pooled), q);
}

std::optional<std::size_t> replay_mismatch(const SimTrace& trace) {
  for (std::size_t i = 0; i + 1 < trace.size(); ++i) {
    QueueState qs = trace.queues(i);
    const Vec usage = trace.usage(i);
    try {
      step_queues_inplace(qs, trace.mu(i), trace.R(i), usage, trace.h(i), trace.kappa(i), trace.gamma(i));
    } catch (const UnderflowError&) {
      return i;
    }
    if (!(qs == trace.queues(i + 1))) return i;
  }
  return std::nullopt;
}

nlohmann::json to_json(const TraceHeader& h) {
  nlohmann::json j = {{"config_hash", h.config_hash},
                      {"policy", h.policy_id},
                      {"V", h.V},
                      {"seed", h.seed},
                      {"learn_time", h.learn_time},
                      {"n_tasks", h.n_tasks},
                      {"m_resources", h.m_resources},
                      {"delta_r", h.delta_r},
                      {"constants",
                       {{"G", h.constants.G},
                        {"theta1", h.constants.theta1},
                        {"theta2", h.constants.theta2},
                        {"beta_r_hat", h.constants.beta_r_hat},
                        {"d_max", h.constants.d_max},
                        {"Q_cap", h.constants.q_cap},
                        {"H_cap", h.constants.h_cap},
                        {"zeta", h.constants.zeta}}}};
  if (h.shift) j["shift"] = to_json(*h.shift);
  return j;
}

nlohmann::json to_json(const Metrics& m) {
  nlohmann::json j = {{"burn_in", m.burn_in},
                      {"rows", m.rows},
                      {"f_av", m.f_av},
                      {"r_bar", m.r_bar},
                      {"cost_bar", m.cost_bar},
                      {"mean_Q", m.mean_Q},
                      {"max_Q", m.max_Q},
                      {"mean_H", m.mean_H},
                      {"max_H", m.max_H},
                      {"mean_d", m.mean_d},
                      {"max_d", m.max_d},
                      {"mean_Q_total", m.mean_Q_total},
                      {"mean_H_total", m.mean_H_total},
                      {"mean_d_total", m.mean_d_total},
                      {"drops", m.drops},
                      {"drop_fraction", m.drop_fraction}};
  j["convergence_time"] = m.convergence_time ? nlohmann::json(*m.convergence_time) : nlohmann::json(nullptr);
  return j;
}

}  // namespace matchq
