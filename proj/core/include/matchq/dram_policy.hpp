#pragma once

#include <cstdint>
#include <memory>
#include <optional>

#include <nlohmann/json.hpp>

#include "matchq/dual.hpp"
#include "matchq/learning.hpp"
#include "matchq/ram_policy.hpp"

namespace matchq {

/// Multiplier shift: the controller sees Q + a^q - zeta, H + a^h - zeta, d + a^d - zeta.
struct ShiftState {
  Multipliers alpha_hat;  // queue coordinates
  double zeta = 0.0;

  void apply(const QueueState& qs, Vec& Q_hat, Vec& H_hat, Vec& d_hat) const;
  QueueState apply(const QueueState& qs) const;
};

struct DramOptions {
  /// Serve with the rescaled allocation on a drop instead of forfeiting the slot.
  bool serve_with_actual = false;
};

/// One DRAM slot. Decisions come from RAM on the shifted queues; if the chosen
/// allocation spends more of resource m than H_m holds, row m is scaled to sum
/// to min(h_m, H_m), every task fed by that row forfeits this slot's service
/// and reward while still losing min(Q_n, mu_n) tasks, and rec.dropped is set.
void dram_slot(const SystemConfig& cfg, std::size_t k, QueueState& qs, const ShiftState& shift,
               const PolicyParams& p, CounterRng& reward_rng, SlotRecord& rec, const DramOptions& opts = {});

/// Where the learned statistics come from.
struct LearnerSpec {
  enum class RewardSource { exact, tbs, perturbed, provided };
  enum class StateSource { exact, tls, provided };

  RewardSource reward_source = RewardSource::tbs;
  std::size_t s_th = 0;        // 0: ceil(log(V)^2)
  double delta_r = 0.0;        // for perturbed
  std::optional<RewardEstimate> rewards;  // for provided

  StateSource state_source = StateSource::tls;
  std::size_t t_th = 0;        // 0: the reward learning time, or ceil(log(V)^2) if that is 0
  std::optional<StateEstimate> states;    // for provided
};

/// Learned statistics, offsets, multiplier and shift for the control phase.
struct DramController {
  DerivedConstants constants;
  PolicyParams params;
  ShiftState shift;
  RewardEstimate rewards;
  StateEstimate states;
  DualSolution dual;
  std::size_t learn_time = 0;  // max of the two learning times
};

/// Runs the learners on their own streams of `seed`, derives the offsets from
/// the estimated reward slope, solves the empirical dual and picks zeta.
/// `zeta_override` takes precedence over the config's rule.
DramController assemble_dram(const SystemConfig& cfg, double V, const LearnerSpec& learners,
                             const DualOptions& dual_opts, std::uint64_t seed,
                             std::optional<double> zeta_override = std::nullopt);

/// Reward estimate for a learner spec (shared by LRAM and DRAM).
RewardEstimate learn_rewards(const SystemConfig& cfg, double V, const LearnerSpec& learners, std::uint64_t seed);

nlohmann::json to_json(const ShiftState& s);

}  // namespace matchq
