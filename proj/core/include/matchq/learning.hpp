#pragma once

#include <cstddef>
#include <vector>

#include <nlohmann/json.hpp>

#include "matchq/model.hpp"
#include "matchq/rng.hpp"

namespace matchq {

struct RewardEstimate {
  RewardTable r_hat;
  std::vector<std::size_t> sample_counts;  // per (k, a) pair; empty when not sampled
  double delta_r = 0.0;                    // declared error level
  std::size_t learn_time = 0;              // slots consumed
};

struct StateEstimate {
  Vec pi_hat;
  double delta_z = 0.0;
  std::size_t learn_time = 0;
};

/// log(s) / sqrt(s), the error level a sampler declares after s samples.
double declared_delta(std::size_t samples) noexcept;

/// ceil(log(V)^2), at least 1.
std::size_t default_sample_threshold(double V) noexcept;

/// Threshold-based sampling: each slot draw a state, play its least-sampled
/// action (first in list order on ties) at full service, until every pair has
/// s_th samples. Throws std::invalid_argument if s_th == 0 or some pi_k == 0.
RewardEstimate run_tbs(const SystemConfig& cfg, std::size_t s_th, CounterRng& rng);

/// Empirical state frequencies over exactly t_th draws.
StateEstimate run_tls(const SystemConfig& cfg, std::size_t t_th, CounterRng& rng);

/// True means moved up or down by delta_r (fair coin per entry), clipped to
/// [0, r_max]. Entries with zero service stay zero. learn_time = 0.
RewardEstimate perturbed_oracle(const SystemConfig& cfg, double delta_r, CounterRng& rng);

RewardEstimate exact_rewards(const SystemConfig& cfg);
StateEstimate exact_states(const SystemConfig& cfg);

nlohmann::json to_json(const RewardEstimate& e);
nlohmann::json to_json(const StateEstimate& e);
RewardEstimate reward_estimate_from_json(const nlohmann::json& j, const SystemConfig& cfg);
StateEstimate state_estimate_from_json(const nlohmann::json& j, const SystemConfig& cfg);

}  // namespace matchq
