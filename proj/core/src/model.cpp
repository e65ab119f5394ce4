#include "matchq/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace matchq {

namespace {

constexpr double kTol = 1e-12;

std::string fmt(double x) {
  std::ostringstream os;
  os << x;
  return os.str();
}

}  // namespace

double resolve_zeta(const ZetaRule& rule, double V, double delta_z) noexcept {
  const double l2 = std::pow(std::log(V), 2);
  switch (rule.kind) {
    case ZetaRule::Kind::explicit_value: return rule.value;
    case ZetaRule::Kind::log_squared: return l2;
    case ZetaRule::Kind::general: return 2.0 * std::max(delta_z * V * l2, l2);
  }
  return l2;
}

RewardTable::RewardTable(const std::vector<std::size_t>& actions_per_state, std::size_t n_tasks, double fill)
    : n_(n_tasks) {
  offsets_.resize(actions_per_state.size() + 1, 0);
  for (std::size_t k = 0; k < actions_per_state.size(); ++k) offsets_[k + 1] = offsets_[k] + actions_per_state[k];
  v_.assign(offsets_.back() * n_, fill);
}

double RewardTable::max_abs_diff(const RewardTable& o) const {
  if (!same_shape(o)) throw std::invalid_argument("reward tables differ in shape");
  double m = 0.0;
  for (std::size_t i = 0; i < v_.size(); ++i) m = std::max(m, std::abs(v_[i] - o.v_[i]));
  return m;
}

SystemConfig::SystemConfig(ConfigSpec spec) : spec_(std::move(spec)) {
  const std::size_t N = spec_.n_tasks;
  const std::size_t M = spec_.m_resources;
  const std::size_t K = spec_.states.size();
  if (N == 0 || M == 0) throw ConfigError("n_tasks and m_resources must be positive");
  if (K == 0) throw ConfigError("at least one state is required");
  if (spec_.action_sets.size() != K)
    throw ConfigError("action_sets has " + std::to_string(spec_.action_sets.size()) + " entries for " +
                      std::to_string(K) + " states");
  if (spec_.utilities.size() != N)
    throw ConfigError("expected " + std::to_string(N) + " utilities, got " + std::to_string(spec_.utilities.size()));
  if (!spec_.service) throw ConfigError("service function missing");
  if (!spec_.cost) throw ConfigError("cost function missing");
  for (std::size_t k = 0; k < K; ++k) {
    const auto& s = spec_.states[k];
    if (s.arrivals.size() != N) throw ConfigError("state " + std::to_string(k) + ": arrivals must have length N");
    if (s.resource_arrivals.size() != M)
      throw ConfigError("state " + std::to_string(k) + ": resource_arrivals must have length M");
    if (spec_.action_sets[k].empty()) throw ConfigError("state " + std::to_string(k) + ": empty action set");
  }
  std::sort(spec_.gamma_domain.grid.begin(), spec_.gamma_domain.grid.end());

  actions_.resize(K);
  std::vector<std::size_t> counts(K);
  for (std::size_t k = 0; k < K; ++k) {
    for (const Matrix& b : spec_.action_sets[k]) {
      if (b.rows() != M || b.cols() != N)
        throw ConfigError("state " + std::to_string(k) + ": action matrix must be M x N");
      Action act;
      act.b = b;
      act.mu = spec_.service(k, b);
      if (act.mu.size() != N) throw ConfigError("service function must return N rates");
      act.usage = b.row_sums();
      act.cost = spec_.cost(k, b);
      actions_[k].push_back(std::move(act));
    }
    counts[k] = actions_[k].size();
    max_actions_ = std::max(max_actions_, counts[k]);
  }
  if (spec_.reward_mean.pair_count() == 0) {
    spec_.reward_mean = RewardTable(counts, N, 0.0);
  } else if (!spec_.reward_mean.same_shape(RewardTable(counts, N))) {
    throw ConfigError("reward_mean table does not match the action sets");
  }

  cdf_.resize(K);
  double acc = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    acc += spec_.states[k].prob;
    cdf_[k] = acc;
  }
}

std::vector<std::size_t> SystemConfig::actions_per_state() const {
  std::vector<std::size_t> out(actions_.size());
  for (std::size_t k = 0; k < actions_.size(); ++k) out[k] = actions_[k].size();
  return out;
}

std::optional<std::size_t> SystemConfig::zero_action(std::size_t k) const noexcept {
  for (std::size_t a = 0; a < actions_[k].size(); ++a)
    if (actions_[k][a].b.is_zero()) return a;
  return std::nullopt;
}

std::optional<std::size_t> SystemConfig::find_action(std::size_t k, const Matrix& b) const noexcept {
  for (std::size_t a = 0; a < actions_[k].size(); ++a)
    if (actions_[k][a].b == b) return a;
  return std::nullopt;
}

Vec SystemConfig::probabilities() const {
  Vec p(spec_.states.size());
  for (std::size_t k = 0; k < p.size(); ++k) p[k] = spec_.states[k].prob;
  return p;
}

double SystemConfig::reward_at(const RewardTable& r, std::size_t k, std::size_t a, std::size_t n,
                               double served) const noexcept {
  const double mu = actions_[k][a].mu[n];
  const double full = r.at(k, a, n);
  if (served >= mu) return full;
  if (mu <= 0.0) return full;
  switch (spec_.partial_service) {
    case PartialService::linear: return full * (served / mu);
    case PartialService::all_or_nothing: return 0.0;
  }
  return full;
}

double SystemConfig::reward_at_matrix(const RewardTable& r, std::size_t k, const Matrix& b, std::size_t n) const {
  if (auto a = find_action(k, b)) return r.at(k, *a, n);
  const double target = service(k, b)[n];
  if (target <= 0.0) return 0.0;
  std::optional<std::size_t> ref;
  for (std::size_t a = 0; a < actions_[k].size(); ++a) {
    const double mu = actions_[k][a].mu[n];
    if (mu >= target && (!ref || mu < actions_[k][*ref].mu[n])) ref = a;
  }
  if (!ref)
    throw ConfigError("no tabulated action in state " + std::to_string(k) + " serves task " + std::to_string(n) +
                      " at rate >= " + fmt(target));
  return r.at(k, *ref, n) * (target / actions_[k][*ref].mu[n]);
}

std::vector<Violation> validate_config(const SystemConfig& cfg) {
  std::vector<Violation> out;
  auto add = [&](std::string code, std::string msg) { out.push_back({std::move(code), std::move(msg)}); };
  const std::size_t N = cfg.n_tasks();
  const std::size_t M = cfg.m_resources();
  const std::size_t K = cfg.n_states();
  const Bounds& B = cfg.bounds();
  const RewardTable& r = cfg.reward_mean();

  double psum = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    psum += cfg.state(k).prob;
    if (!(cfg.state(k).prob > 0.0))
      add("nonpositive_probability", "state " + std::to_string(k) + " has probability " + fmt(cfg.state(k).prob));
  }
  if (std::abs(psum - 1.0) > kTol) add("probability_sum", "probabilities sum to " + fmt(psum));

  for (std::size_t k = 0; k < K; ++k) {
    const std::string sk = "state " + std::to_string(k);
    const auto& st = cfg.state(k);
    for (std::size_t n = 0; n < N; ++n)
      if (st.arrivals[n] < 0.0 || st.arrivals[n] > B.a_max + kTol)
        add("arrival_bound", sk + ": arrival " + fmt(st.arrivals[n]) + " outside [0, A_max]");
    for (std::size_t m = 0; m < M; ++m)
      if (st.resource_arrivals[m] < 0.0 || st.resource_arrivals[m] > B.h_max + kTol)
        add("resource_arrival_bound", sk + ": resource arrival " + fmt(st.resource_arrivals[m]) + " outside [0, h_max]");

    if (!cfg.zero_action(k)) add("missing_zero_action", sk + ": action set B_" + std::to_string(k) + " lacks the all-zero matrix");

    const Vec mu0 = cfg.service(k, Matrix(M, N));
    for (std::size_t n = 0; n < N; ++n)
      if (mu0[n] != 0.0) add("zero_service", sk + ": zero allocation serves task " + std::to_string(n));

    const auto acts = cfg.actions(k);
    for (std::size_t a = 0; a < acts.size(); ++a) {
      const Action& act = acts[a];
      const std::string sa = sk + ", action " + std::to_string(a);
      for (double x : act.b.values())
        if (x < 0.0 || x > B.b_max + kTol) add("allocation_bound", sa + ": entry " + fmt(x) + " outside [0, b_max]");
      if (act.cost < -kTol || act.cost > B.c_max + kTol)
        add("cost_bound", sa + ": cost " + fmt(act.cost) + " outside [0, c_max]");
      for (std::size_t n = 0; n < N; ++n) {
        const double mu = act.mu[n];
        if (mu < 0.0 || mu > B.mu_max + kTol)
          add("service_bound", sa + ": rate " + fmt(mu) + " outside [0, mu_max]");
        const double rv = r.at(k, a, n);
        if (rv < 0.0 || rv > B.r_max + kTol) add("reward_bound", sa + ": reward " + fmt(rv) + " outside [0, r_max]");
        if (mu == 0.0 && rv != 0.0) add("reward_without_service", sa + ": positive reward at zero service");
        if (mu > 0.0) {
          double min_pos = INFINITY;
          for (std::size_t m = 0; m < M; ++m)
            if (act.b(m, n) > 0.0) min_pos = std::min(min_pos, act.b(m, n));
          if (std::isinf(min_pos))
            add("service_without_resource", sa + ": task " + std::to_string(n) + " served with no resource");
          else if (mu + kTol < B.beta_mu_l * min_pos)
            add("service_lower_slope", sa + ": rate " + fmt(mu) + " below beta_mu_l * min allocation");
        }
        for (std::size_t m = 0; m < M; ++m) {
          if (act.b(m, n) <= 0.0) continue;
          Matrix z = act.b;
          z(m, n) = 0.0;
          const double drop = mu - cfg.service(k, z)[n];
          if (drop > B.beta_mu_u * act.b(m, n) + kTol)
            add("service_upper_slope", sa + ": zeroing entry (" + std::to_string(m) + "," + std::to_string(n) +
                                           ") lowers the rate by " + fmt(drop));
        }
      }
      for (std::size_t a2 = 0; a2 < acts.size(); ++a2) {
        if (a2 == a) continue;
        const Action& o = acts[a2];
        bool dominated = true;
        for (std::size_t i = 0; i < act.b.values().size(); ++i)
          if (act.b.values()[i] > o.b.values()[i]) dominated = false;
        if (dominated && act.cost > o.cost + kTol)
          add("cost_monotone", sk + ": action " + std::to_string(a) + " costs more than the larger action " +
                                   std::to_string(a2));
        for (std::size_t n = 0; n < N; ++n)
          if (act.mu[n] <= o.mu[n] && r.at(k, a, n) > r.at(k, a2, n) + kTol)
            add("reward_monotone", sk + ": task " + std::to_string(n) + " reward decreases with service (actions " +
                                       std::to_string(a) + ", " + std::to_string(a2) + ")");
      }
    }
  }

  for (std::size_t n = 0; n < N; ++n) {
    const Utility& u = cfg.utilities()[n];
    if (u.max_derivative() > B.beta + kTol)
      add("utility_slope", "utility " + std::to_string(n) + " has slope " + fmt(u.max_derivative()) + " above beta");
  }

  const NoiseModel& nm = cfg.noise();
  if (nm.kind == NoiseModel::Kind::two_point) {
    if (!(nm.low >= 0.0 && nm.low <= 1.0 && nm.high >= 1.0 && nm.high > nm.low))
      add("noise_support", "two-point noise needs 0 <= low <= 1 <= high, low < high");
    const double rmax_table =
        r.values().empty() ? 0.0 : *std::max_element(r.values().begin(), r.values().end());
    if (nm.high * rmax_table > B.r_max + kTol)
      add("noise_range", "largest realized reward " + fmt(nm.high * rmax_table) + " exceeds r_max");
  }

  if (!cfg.gamma_domain().continuous()) {
    for (double g : cfg.gamma_domain().grid)
      if (g < 0.0 || g > B.r_max + kTol) add("gamma_grid", "gamma grid point " + fmt(g) + " outside [0, r_max]");
  }
  return out;
}

double compute_beta_r_hat(const RewardTable& r_hat, const SystemConfig& cfg) {
  const std::size_t N = cfg.n_tasks();
  const std::size_t M = cfg.m_resources();
  double beta = 0.0;
  for (std::size_t k = 0; k < cfg.n_states(); ++k) {
    const auto acts = cfg.actions(k);
    for (std::size_t a = 0; a < acts.size(); ++a) {
      const Matrix& b = acts[a].b;
      for (std::size_t m = 0; m < M; ++m) {
        for (std::size_t n = 0; n < N; ++n) {
          const double bmn = b(m, n);
          if (bmn <= 0.0) continue;
          Matrix z = b;
          z(m, n) = 0.0;
          const double diff = r_hat.at(k, a, n) - cfg.reward_at_matrix(r_hat, k, z, n);
          beta = std::max(beta, diff / bmn);
        }
      }
    }
  }
  return beta;
}

void sample_reward(CounterRng& rng, const SystemConfig& cfg, std::size_t k, std::size_t a,
                   std::span<const double> served, std::span<double> kappa_out) {
  const NoiseModel& nm = cfg.noise();
  const double r_max = cfg.bounds().r_max;
  const RewardTable& r = cfg.reward_mean();
  for (std::size_t n = 0; n < cfg.n_tasks(); ++n) {
    const double mean = cfg.reward_at(r, k, a, n, served[n]);
    double x = mean;
    switch (nm.kind) {
      case NoiseModel::Kind::deterministic:
        rng();
        break;
      case NoiseModel::Kind::two_point: {
        const double p_low = (nm.high - 1.0) / (nm.high - nm.low);
        x = rng.uniform() < p_low ? nm.low * mean : nm.high * mean;
        break;
      }
      case NoiseModel::Kind::truncated_gaussian: {
        const double sd = nm.rel_sigma * mean;
        const double w = std::min(mean, r_max - mean);
        if (sd <= 0.0 || w <= 0.0) {
          rng();
          break;
        }
        if (w < 0.5 * sd) {
          // Density is nearly flat on such a narrow window.
          x = mean + (2.0 * rng.uniform() - 1.0) * w;
          break;
        }
        for (;;) {
          const double u1 = 1.0 - rng.uniform();
          const double u2 = rng.uniform();
          const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
          if (std::abs(sd * z) <= w) {
            x = mean + sd * z;
            break;
          }
        }
        break;
      }
    }
    kappa_out[n] = std::clamp(x, 0.0, r_max);
  }
}

Vec sample_reward(CounterRng& rng, const SystemConfig& cfg, std::size_t k, std::size_t a,
                  std::span<const double> served) {
  Vec out(cfg.n_tasks());
  sample_reward(rng, cfg, k, a, served, out);
  return out;
}

double drift_constant(const SystemConfig& cfg) noexcept {
  const Bounds& b = cfg.bounds();
  const double N = static_cast<double>(cfg.n_tasks());
  const double M = static_cast<double>(cfg.m_resources());
  return N * (b.a_max * b.a_max + b.mu_max * b.mu_max + 2.0 * b.r_max * b.r_max) + M * b.h_max * b.h_max +
         M * N * N * b.b_max * b.b_max;
}

DerivedConstants derive_constants(const SystemConfig& cfg, double V, double beta_r_hat, double delta_z) {
  const Bounds& b = cfg.bounds();
  DerivedConstants c;
  c.V = V;
  c.G = drift_constant(cfg);
  c.beta_r_hat = beta_r_hat;
  const ThetaRule& tr = cfg.theta_rule();
  switch (tr.kind) {
    case ThetaRule::Kind::formula: {
      const double core = (V * b.beta + b.r_max) * beta_r_hat;
      c.theta1 = (b.h_max + core) / b.beta_mu_l + b.mu_max;
      c.theta2 = core + b.r_max * b.beta_mu_u + static_cast<double>(cfg.n_tasks()) * b.b_max;
      break;
    }
    case ThetaRule::Kind::affine:
      c.theta1 = (tr.a * V + tr.b) * beta_r_hat + tr.q_offset;
      c.theta2 = (tr.a * V + tr.b) * beta_r_hat + tr.h_offset;
      break;
    case ThetaRule::Kind::fixed:
      c.theta1 = tr.theta1;
      c.theta2 = tr.theta2;
      break;
  }
  c.d_max = V * b.beta + b.r_max;
  c.q_cap = c.theta1 + b.a_max;
  c.h_cap = c.theta2 + b.h_max;
  c.zeta = resolve_zeta(cfg.zeta_rule(), V, delta_z);
  return c;
}

}  // namespace matchq
