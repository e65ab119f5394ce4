#pragma once

#include <cstddef>
#include <memory>
#include <span>

#include "matchq/model.hpp"
#include "matchq/queueing.hpp"
#include "matchq/rng.hpp"

namespace matchq {

struct PolicyParams {
  double V = 1.0;
  double theta1 = 0.0;
  double theta2 = 0.0;
  std::shared_ptr<const RewardTable> reward_table;  // r-hat used by the resource step
  GammaDomain gamma_domain;
};

PolicyParams make_policy_params(const SystemConfig& cfg, const DerivedConstants& dc,
                                std::shared_ptr<const RewardTable> r_hat);

/// argmax of V U_n(g) - d_n g over the gamma domain. d_n may be negative.
double quota_step(const SystemConfig& cfg, double d_n, const PolicyParams& p, std::size_t n) noexcept;

/// R_n = A_n if Q_n < theta1 else 0; h_m = e_m if H_m < theta2 else 0.
void admission_step(std::span<const double> Q, std::span<const double> H, std::span<const double> A,
                    std::span<const double> e, const PolicyParams& p, std::span<double> R_out,
                    std::span<double> h_out) noexcept;

/// Resource-step objective of action a in state k (smaller is better).
double psi(const SystemConfig& cfg, std::size_t k, std::size_t a, std::span<const double> Q,
           std::span<const double> H, std::span<const double> d, const PolicyParams& p) noexcept;

/// Index into B_k minimizing psi; near-ties (1e-9 relative) go to the
/// lexicographically smallest matrix. With enforce_underflow only actions
/// whose usage fits in H are considered. Throws std::runtime_error if nothing
/// is feasible.
std::size_t resource_step(const SystemConfig& cfg, std::size_t k, std::span<const double> Q,
                          std::span<const double> H, std::span<const double> d, const PolicyParams& p,
                          bool enforce_underflow = false);

/// Everything that happened in one control slot.
struct SlotRecord {
  std::size_t k = 0;
  Vec gamma, R, h;
  std::size_t action = 0;
  Vec b;          // realized allocation, row-major M x N (differs from B_k only on a drop)
  Vec usage;      // row sums of b
  Vec mu;         // service rates applied to Q
  Vec mu_tilde;   // delivered service min(Q, mu), zero for forfeited tasks
  Vec kappa;
  double cost = 0.0;
  bool dropped = false;

  void resize(std::size_t N, std::size_t M);
};

/// Quota, admission and resource decisions computed from the given queue view.
void decide_slot(const SystemConfig& cfg, std::size_t k, std::span<const double> Q, std::span<const double> H,
                 std::span<const double> d, const PolicyParams& p, bool enforce_underflow, SlotRecord& rec);

/// One full RAM slot on the raw queues: decide, serve, sample rewards, update.
/// Propagates UnderflowError.
void ram_slot(const SystemConfig& cfg, std::size_t k, QueueState& qs, const PolicyParams& p,
              CounterRng& reward_rng, SlotRecord& rec);

}  // namespace matchq
