#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include <nlohmann/json.hpp>

#include "matchq/model.hpp"

namespace matchq {

class OracleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct OracleOptions {
  const RewardTable* rewards = nullptr;  // defaults to the true means
  std::span<const double> pi;            // defaults to the true probabilities
  double rel_tol = 1e-10;                // on the outer-approximation gap
  std::size_t max_rounds = 1000;
};

/// Best stationary randomized policy.
struct OfflineSolution {
  double f_star = 0.0;        // sum_n U_n(r_bar_n) - cost_bar
  double upper_bound = 0.0;   // certificate: f_star <= optimum <= upper_bound
  double phi_star = 0.0;      // V * f_star
  Vec r_bar;                  // mean reward under the rewards used
  Vec mu_bar;                 // mean service (= admitted rate)
  Vec usage_bar;              // mean resource use (= admitted resource rate)
  double cost_bar = 0.0;
  std::vector<Vec> weights;   // lambda^k over B_k
  std::size_t rounds = 0;
};

/// Maximizes sum_n U_n(r_bar_n) - cost_bar over per-state action mixtures
/// subject to mu_bar <= A_bar and usage_bar <= e_bar. The concave objective is
/// handled by tangent cuts refined at each LP solution until the gap closes.
/// Throws OracleError if a state has no zero action or the LP misbehaves.
OfflineSolution solve_offline_optimal(const SystemConfig& cfg, double V = 1.0, const OracleOptions& opts = {});

/// Closed form for the two-queue example with rewards misestimated as
/// (1 + delta_n) * service: the service split chosen under the wrong rewards
/// and the true utility it earns.
struct TwoQueueResult {
  double r1 = 0.0;
  double r2 = 0.0;
  double u_total = 0.0;        // log(1 + r1) + log(1 + 2 r2)
  double r1_first_order = 0.0; // 1/4 + (2 d1 - d2) / 4
  double r2_first_order = 0.0; // 3/4 - (2 d1 - d2) / 4
};

/// Requires d1, d2 > -1.
TwoQueueResult two_queue_perturbed(double d1, double d2);

nlohmann::json to_json(const OfflineSolution& s);

}  // namespace matchq
