#pragma once

#include <cstddef>
#include <span>

#include <nlohmann/json.hpp>

#include "matchq/model.hpp"

namespace matchq {

/// Dual vector (alpha_d, alpha_q, alpha_h); alpha_d >= 0.
struct Multipliers {
  Vec alpha_d;
  Vec alpha_q;
  Vec alpha_h;

  static Multipliers zeros(std::size_t n_tasks, std::size_t m_resources) {
    return {Vec(n_tasks, 0.0), Vec(n_tasks, 0.0), Vec(m_resources, 0.0)};
  }
  std::size_t size() const noexcept { return alpha_d.size() + alpha_q.size() + alpha_h.size(); }
  /// Concatenation (alpha_d, alpha_q, alpha_h).
  Vec flatten() const;
  static Multipliers from_flat(std::span<const double> v, std::size_t n_tasks, std::size_t m_resources);
  friend bool operator==(const Multipliers&, const Multipliers&) = default;
};

double distance(const Multipliers& a, const Multipliers& b) noexcept;

struct InnerMaximizer {
  Vec gamma;
  Vec R;
  Vec h;
  std::size_t action = 0;
};

struct GkResult {
  double value = 0.0;
  InnerMaximizer argmax;
};

/// Per-state dual function
///   g_k(a) = sup V [sum_n U_n(gamma_n) - c] + sum_n a^d_n (r_n - gamma_n)
///            + sum_n a^q_n (mu_n - R_n) + sum_m a^h_m (sum_n b_mn - h_m)
/// over gamma in the domain, R in {0, A^k}, h in {0, e^k}, b in B_k, with r
/// read from r_table. Ties in b go to the lexicographically smallest matrix.
GkResult eval_g_k(const SystemConfig& cfg, std::size_t k, const Multipliers& alpha, const RewardTable& r_table,
                  double V, const GammaDomain& domain);

struct DualEvaluation {
  double value = 0.0;
  Multipliers subgradient;
};

/// G(a) = sum_k pi_k g_k(a^d, a^q - theta1, a^h - theta2). The argument is in
/// queue coordinates, so its minimizer is directly comparable to (d, Q, H).
DualEvaluation eval_dual(const SystemConfig& cfg, std::span<const double> pi, const RewardTable& r_table,
                         const Multipliers& alpha, double theta1, double theta2, double V,
                         const GammaDomain& domain);

struct DualOptions {
  double step0 = 0.0;           // 0 means V
  std::size_t max_iters = 20000;
  double tol = 0.0;             // 0 means 1e-4 V
  std::size_t window = 2000;    // improvement window for the stopping rule
  std::size_t check_every = 25; // how often the averaged iterate is evaluated
};

struct DualSolution {
  Multipliers alpha_star;   // queue coordinates
  double g_value = 0.0;
  std::size_t iterations = 0;
  double residual = 0.0;    // improvement of the best value over the last window
  bool converged = false;
};

/// Projected subgradient descent on G with step step0 / sqrt(t) from a = 0,
/// averaging iterates over epochs that restart at powers of two. Returns the
/// best evaluated point (raw or averaged).
DualSolution solve_empirical_dual(const SystemConfig& cfg, std::span<const double> pi_hat, const RewardTable& r_hat,
                                  double theta1, double theta2, double V, const DualOptions& opts = {});

nlohmann::json to_json(const Multipliers& m);
nlohmann::json to_json(const DualSolution& s);
Multipliers multipliers_from_json(const nlohmann::json& j);

}  // namespace matchq
