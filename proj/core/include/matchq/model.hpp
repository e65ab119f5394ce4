#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "matchq/matrix.hpp"
#include "matchq/rng.hpp"
#include "matchq/utility.hpp"

namespace matchq {

/// Structural problem with a configuration (shape mismatch, bad value).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct StateSpec {
  Vec arrivals;            // A^k, length N
  Vec resource_arrivals;   // e^k, length M
  std::string omega;       // environment label, opaque
  double prob = 0.0;       // pi_k
};

struct Bounds {
  double a_max = 0.0;
  double h_max = 0.0;
  double r_max = 0.0;
  double mu_max = 0.0;
  double c_max = 0.0;
  double b_max = 0.0;
  double beta = 0.0;        // bound on every U_n'
  double beta_mu_l = 1.0;
  double beta_mu_u = 1.0;
};

using ServiceFn = std::function<Vec(std::size_t k, const Matrix& b)>;
using CostFn = std::function<double(std::size_t k, const Matrix& b)>;

/// How the mean reward scales when only part of the nominal service is delivered.
enum class PartialService {
  linear,          // r(k, mu~) = r(k, mu) * mu~ / mu
  all_or_nothing,  // full mean only when mu~ == mu
};

/// Distribution of the realized reward around its mean m.
struct NoiseModel {
  enum class Kind { two_point, deterministic, truncated_gaussian };
  Kind kind = Kind::two_point;
  double low = 0.5;        // two_point: kappa in {low*m, high*m}, weights chosen to keep mean m
  double high = 1.5;
  double rel_sigma = 0.5;  // truncated_gaussian: sd = rel_sigma * m, window symmetric around m
};

/// How the placeholder offsets theta1/theta2 are chosen.
struct ThetaRule {
  enum class Kind { formula, affine, fixed };
  Kind kind = Kind::formula;
  // affine: theta = (a V + b) * beta_r_hat + offset
  double a = 0.0;
  double b = 0.0;
  double q_offset = 0.0;
  double h_offset = 0.0;
  // fixed
  double theta1 = 0.0;
  double theta2 = 0.0;
};

/// DRAM shift size. Precedence: explicit value, then log(V)^2, then
/// 2 max(delta_z V log(V)^2, log(V)^2).
struct ZetaRule {
  enum class Kind { explicit_value, log_squared, general };
  Kind kind = Kind::log_squared;
  double value = 0.0;
};

double resolve_zeta(const ZetaRule& rule, double V, double delta_z) noexcept;

/// Mean-reward table indexed by (state k, action index a within B_k, task n).
class RewardTable {
 public:
  RewardTable() = default;
  RewardTable(const std::vector<std::size_t>& actions_per_state, std::size_t n_tasks, double fill = 0.0);

  std::size_t states() const noexcept { return offsets_.empty() ? 0 : offsets_.size() - 1; }
  std::size_t actions(std::size_t k) const noexcept { return offsets_[k + 1] - offsets_[k]; }
  std::size_t n_tasks() const noexcept { return n_; }
  std::size_t pair_count() const noexcept { return offsets_.empty() ? 0 : offsets_.back(); }
  /// Flat (k, a) pair index.
  std::size_t pair(std::size_t k, std::size_t a) const noexcept { return offsets_[k] + a; }

  double at(std::size_t k, std::size_t a, std::size_t n) const noexcept { return v_[(offsets_[k] + a) * n_ + n]; }
  double& at(std::size_t k, std::size_t a, std::size_t n) noexcept { return v_[(offsets_[k] + a) * n_ + n]; }
  std::span<const double> row(std::size_t k, std::size_t a) const noexcept {
    return std::span<const double>(v_).subspan((offsets_[k] + a) * n_, n_);
  }

  std::vector<double>& values() noexcept { return v_; }
  const std::vector<double>& values() const noexcept { return v_; }
  bool same_shape(const RewardTable& o) const noexcept { return n_ == o.n_ && offsets_ == o.offsets_; }
  double max_abs_diff(const RewardTable& o) const;

  friend bool operator==(const RewardTable&, const RewardTable&) = default;

 private:
  std::size_t n_ = 0;
  std::vector<std::size_t> offsets_;
  std::vector<double> v_;
};

/// Precomputed per-(state, action) data.
struct Action {
  Matrix b;
  Vec mu;        // mu_n(k, b)
  Vec usage;     // sum_n b_mn per resource
  double cost = 0.0;
};

/// Everything needed to build a SystemConfig; plain data.
struct ConfigSpec {
  std::string name;
  std::size_t n_tasks = 0;
  std::size_t m_resources = 0;
  std::vector<StateSpec> states;
  std::vector<std::vector<Matrix>> action_sets;  // one list per state
  ServiceFn service;
  CostFn cost;
  RewardTable reward_mean;
  PartialService partial_service = PartialService::linear;
  NoiseModel noise;
  std::vector<Utility> utilities;
  Bounds bounds;
  GammaDomain gamma_domain;
  ThetaRule theta_rule;
  ZetaRule zeta_rule;
  std::string hash;  // content hash of the source document, if any
};

/// Immutable problem instance with per-action tables.
class SystemConfig {
 public:
  /// Throws ConfigError on shape mismatches; semantic checks live in validate_config.
  explicit SystemConfig(ConfigSpec spec);

  const ConfigSpec& spec() const noexcept { return spec_; }
  const std::string& name() const noexcept { return spec_.name; }
  const std::string& hash() const noexcept { return spec_.hash; }
  std::size_t n_tasks() const noexcept { return spec_.n_tasks; }
  std::size_t m_resources() const noexcept { return spec_.m_resources; }
  std::size_t n_states() const noexcept { return spec_.states.size(); }
  const StateSpec& state(std::size_t k) const noexcept { return spec_.states[k]; }
  const std::vector<StateSpec>& states() const noexcept { return spec_.states; }
  const Bounds& bounds() const noexcept { return spec_.bounds; }
  const std::vector<Utility>& utilities() const noexcept { return spec_.utilities; }
  const GammaDomain& gamma_domain() const noexcept { return spec_.gamma_domain; }
  const ThetaRule& theta_rule() const noexcept { return spec_.theta_rule; }
  const ZetaRule& zeta_rule() const noexcept { return spec_.zeta_rule; }
  const NoiseModel& noise() const noexcept { return spec_.noise; }
  PartialService partial_service() const noexcept { return spec_.partial_service; }
  const RewardTable& reward_mean() const noexcept { return spec_.reward_mean; }

  std::span<const Action> actions(std::size_t k) const noexcept { return actions_[k]; }
  const Action& action(std::size_t k, std::size_t a) const noexcept { return actions_[k][a]; }
  std::size_t max_actions() const noexcept { return max_actions_; }
  std::vector<std::size_t> actions_per_state() const;
  /// Index of the all-zero matrix in B_k, if present.
  std::optional<std::size_t> zero_action(std::size_t k) const noexcept;
  std::optional<std::size_t> find_action(std::size_t k, const Matrix& b) const noexcept;

  Vec service(std::size_t k, const Matrix& b) const { return spec_.service(k, b); }
  double cost(std::size_t k, const Matrix& b) const { return spec_.cost(k, b); }

  /// State probabilities and their running sums (for sampling).
  Vec probabilities() const;
  std::span<const double> state_cdf() const noexcept { return cdf_; }

  /// Mean reward of task n when action a in state k delivers `served` units,
  /// per the partial-service rule, under the given table.
  double reward_at(const RewardTable& r, std::size_t k, std::size_t a, std::size_t n, double served) const noexcept;

  /// Mean reward r_n(k, mu_n(k, b)) at an arbitrary matrix b, interpolated from
  /// the tabulated action with the smallest service >= mu_n(k, b) for task n.
  /// Throws ConfigError if no tabulated action serves at least as much.
  double reward_at_matrix(const RewardTable& r, std::size_t k, const Matrix& b, std::size_t n) const;

 private:
  ConfigSpec spec_;
  std::vector<std::vector<Action>> actions_;
  std::size_t max_actions_ = 0;
  Vec cdf_;
};

struct Violation {
  std::string code;
  std::string message;
};

/// All violated modelling assumptions; empty when the instance is well-formed.
std::vector<Violation> validate_config(const SystemConfig& cfg);

/// Smallest beta >= 0 with r(k, b) - r(k, b') <= beta * b_mn for every single
/// positive entry zeroed to give b'.
double compute_beta_r_hat(const RewardTable& r_hat, const SystemConfig& cfg);

/// One realized reward vector for a slot. Consumes exactly N uniforms for the
/// two-point and deterministic models.
void sample_reward(CounterRng& rng, const SystemConfig& cfg, std::size_t k, std::size_t a,
                   std::span<const double> served, std::span<double> kappa_out);
Vec sample_reward(CounterRng& rng, const SystemConfig& cfg, std::size_t k, std::size_t a,
                  std::span<const double> served);

struct DerivedConstants {
  double V = 0.0;
  double G = 0.0;
  double theta1 = 0.0;
  double theta2 = 0.0;
  double beta_r_hat = 0.0;
  double d_max = 0.0;
  double q_cap = 0.0;
  double h_cap = 0.0;
  double zeta = 0.0;
};

/// Drift constant G.
double drift_constant(const SystemConfig& cfg) noexcept;

DerivedConstants derive_constants(const SystemConfig& cfg, double V, double beta_r_hat, double delta_z = 0.0);

}  // namespace matchq
