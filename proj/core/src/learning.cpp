#include "matchq/learning.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace matchq {

double declared_delta(std::size_t samples) noexcept {
  if (samples <= 1) return samples == 1 ? 0.0 : INFINITY;
  const double s = static_cast<double>(samples);
  return std::log(s) / std::sqrt(s);
}

std::size_t default_sample_threshold(double V) noexcept {
  const double l = std::log(V);
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(l * l)));
}

RewardEstimate run_tbs(const SystemConfig& cfg, std::size_t s_th, CounterRng& rng) {
  if (s_th == 0) throw std::invalid_argument("TBS threshold must be at least 1");
  for (std::size_t k = 0; k < cfg.n_states(); ++k)
    if (!(cfg.state(k).prob > 0.0))
      throw std::invalid_argument("TBS never terminates: state " + std::to_string(k) + " has zero probability");

  const std::size_t N = cfg.n_tasks();
  RewardEstimate est;
  est.r_hat = RewardTable(cfg.actions_per_state(), N, 0.0);
  est.sample_counts.assign(est.r_hat.pair_count(), 0);
  std::vector<double>& sums = est.r_hat.values();
  std::size_t pending = est.r_hat.pair_count();
  Vec kappa(N);
  const auto cdf = cfg.state_cdf();

  std::size_t t = 0;
  while (pending > 0) {
    ++t;
    const std::size_t k = sample_from_cdf(rng, cdf);
    const std::size_t na = cfg.actions(k).size();
    std::size_t a = 0;
    for (std::size_t j = 1; j < na; ++j)
      if (est.sample_counts[est.r_hat.pair(k, j)] < est.sample_counts[est.r_hat.pair(k, a)]) a = j;
    const Action& act = cfg.action(k, a);
    sample_reward(rng, cfg, k, a, act.mu, kappa);
    const std::size_t p = est.r_hat.pair(k, a);
    for (std::size_t n = 0; n < N; ++n) sums[p * N + n] += kappa[n];
    if (++est.sample_counts[p] == s_th) --pending;
  }
  for (std::size_t p = 0; p < est.sample_counts.size(); ++p)
    for (std::size_t n = 0; n < N; ++n) sums[p * N + n] /= static_cast<double>(est.sample_counts[p]);
  est.delta_r = declared_delta(s_th);
  est.learn_time = t;
  return est;
}

StateEstimate run_tls(const SystemConfig& cfg, std::size_t t_th, CounterRng& rng) {
  if (t_th == 0) throw std::invalid_argument("TLS needs at least one observation");
  StateEstimate est;
  est.pi_hat.assign(cfg.n_states(), 0.0);
  const auto cdf = cfg.state_cdf();
  for (std::size_t t = 0; t < t_th; ++t) est.pi_hat[sample_from_cdf(rng, cdf)] += 1.0;
  for (double& p : est.pi_hat) p /= static_cast<double>(t_th);
  est.delta_z = declared_delta(t_th);
  est.learn_time = t_th;
  return est;
}

RewardEstimate perturbed_oracle(const SystemConfig& cfg, double delta_r, CounterRng& rng) {
  if (!(delta_r >= 0.0)) throw std::invalid_argument("delta_r must be nonnegative");
  RewardEstimate est = exact_rewards(cfg);
  const double r_max = cfg.bounds().r_max;
  for (std::size_t k = 0; k < cfg.n_states(); ++k) {
    for (std::size_t a = 0; a < cfg.actions(k).size(); ++a) {
      for (std::size_t n = 0; n < cfg.n_tasks(); ++n) {
        if (cfg.action(k, a).mu[n] <= 0.0) continue;
        double& r = est.r_hat.at(k, a, n);
        r = std::clamp(rng.coin() ? r + delta_r : r - delta_r, 0.0, r_max);
      }
    }
  }
  est.delta_r = delta_r;
  return est;
}

RewardEstimate exact_rewards(const SystemConfig& cfg) {
  RewardEstimate est;
  est.r_hat = cfg.reward_mean();
  return est;
}

StateEstimate exact_states(const SystemConfig& cfg) {
  StateEstimate est;
  est.pi_hat = cfg.probabilities();
  return est;
}

nlohmann::json to_json(const RewardEstimate& e) {
  nlohmann::json j;
  j["values"] = e.r_hat.values();
  j["sample_counts"] = e.sample_counts;
  j["delta_r"] = e.delta_r;
  j["learn_time"] = e.learn_time;
  return j;
}

nlohmann::json to_json(const StateEstimate& e) {
  nlohmann::json j;
  j["pi_hat"] = e.pi_hat;
  j["delta_z"] = e.delta_z;
  j["learn_time"] = e.learn_time;
  return j;
}

RewardEstimate reward_estimate_from_json(const nlohmann::json& j, const SystemConfig& cfg) {
  RewardEstimate e;
  e.r_hat = RewardTable(cfg.actions_per_state(), cfg.n_tasks(), 0.0);
  auto vals = j.at("values").get<std::vector<double>>();
  if (vals.size() != e.r_hat.values().size()) throw ConfigError("reward estimate does not match the action sets");
  e.r_hat.values() = std::move(vals);
  e.sample_counts = j.value("sample_counts", std::vector<std::size_t>{});
  e.delta_r = j.value("delta_r", 0.0);
  e.learn_time = j.value("learn_time", std::size_t{0});
  return e;
}

StateEstimate state_estimate_from_json(const nlohmann::json& j, const SystemConfig& cfg) {
  StateEstimate e;
  e.pi_hat = j.at("pi_hat").get<Vec>();
  if (e.pi_hat.size() != cfg.n_states()) throw ConfigError("state estimate does not match the state count");
  e.delta_z = j.value("delta_z", 0.0);
  e.learn_time = j.value("learn_time", std::size_t{0});
  return e;
}

}  // namespace matchq
