#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "matchq/dram_policy.hpp"
#include "matchq/dual.hpp"
#include "matchq/model.hpp"
#include "matchq/ram_policy.hpp"

namespace matchq {

/// A per-slot guarantee that a RAM/LRAM run must satisfy was broken.
class InvariantError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class PolicyKind { ram, lram, dram };

struct PolicySpec {
  PolicyKind kind = PolicyKind::ram;
  LearnerSpec learners;
  DualOptions dual;
  std::optional<double> zeta;  // overrides the config's rule
  DramOptions dram;

  static PolicySpec ram();
  /// LRAM with true means moved by +-delta.
  static PolicySpec lram(double delta_r);
  /// LRAM learning rewards with threshold sampling (0: ceil(log(V)^2)).
  static PolicySpec lram_tbs(std::size_t s_th = 0);
  /// DRAM with threshold sampling for rewards and time-limited sampling for states.
  static PolicySpec dram_learned(std::size_t s_th = 0, std::size_t t_th = 0);
  /// DRAM with known rewards and t_th state observations (0: ceil(log(V)^2)).
  static PolicySpec dram_state_only(std::size_t t_th = 0);

  /// "ram", "lram-<delta>", "lram-tbs", "dram", "dram-state".
  std::string id() const;
};

/// Inverse of PolicySpec::id; "lram" alone means delta 0. Throws std::invalid_argument.
PolicySpec parse_policy(std::string_view id);

struct TraceHeader {
  std::string config_hash;
  std::string policy_id;
  double V = 0.0;
  std::uint64_t seed = 0;
  std::size_t learn_time = 0;
  std::size_t n_tasks = 0;
  std::size_t m_resources = 0;
  DerivedConstants constants;
  std::optional<ShiftState> shift;  // DRAM only
  double delta_r = 0.0;
};

/// Control-phase rows. Q, H, d are the values at the start of the slot; the
/// slot index t counts learning slots too, so the first row has t = learn_time.
class SimTrace {
 public:
  TraceHeader header;

  SimTrace() = default;
  SimTrace(std::size_t n_tasks, std::size_t m_resources);

  std::size_t size() const noexcept { return t_.size(); }
  std::size_t n_tasks() const noexcept { return N_; }
  std::size_t m_resources() const noexcept { return M_; }
  void reserve(std::size_t rows);
  void append(std::size_t t, const SlotRecord& rec, const QueueState& before);

  std::size_t t(std::size_t i) const noexcept { return t_[i]; }
  std::size_t k(std::size_t i) const noexcept { return k_[i]; }
  bool dropped(std::size_t i) const noexcept { return drop_[i] != 0; }
  std::span<const double> gamma(std::size_t i) const noexcept { return field(i, o_gamma_, N_); }
  std::span<const double> R(std::size_t i) const noexcept { return field(i, o_R_, N_); }
  std::span<const double> h(std::size_t i) const noexcept { return field(i, o_h_, M_); }
  std::span<const double> b(std::size_t i) const noexcept { return field(i, o_b_, M_ * N_); }
  std::span<const double> mu(std::size_t i) const noexcept { return field(i, o_mu_, N_); }
  std::span<const double> mu_tilde(std::size_t i) const noexcept { return field(i, o_mut_, N_); }
  std::span<const double> kappa(std::size_t i) const noexcept { return field(i, o_kappa_, N_); }
  double cost(std::size_t i) const noexcept { return v_[i * W_ + o_cost_]; }
  std::span<const double> Q(std::size_t i) const noexcept { return field(i, o_Q_, N_); }
  std::span<const double> H(std::size_t i) const noexcept { return field(i, o_H_, M_); }
  std::span<const double> d(std::size_t i) const noexcept { return field(i, o_d_, N_); }

  /// Queue values at the start of row i.
  QueueState queues(std::size_t i) const;
  /// Sum over m of b_mn, per resource.
  Vec usage(std::size_t i) const;

  /// Row-wise writer used by the CSV reader: t, k, the double block in the
  /// column order of the CSV (mu_tilde excluded), drop.
  void append_raw(std::size_t t, std::size_t k, std::span<const double> csv_block, bool drop);

 private:
  std::span<const double> field(std::size_t i, std::size_t off, std::size_t len) const noexcept {
    return std::span<const double>(v_).subspan(i * W_ + off, len);
  }
  std::size_t N_ = 0, M_ = 0, W_ = 0;
  std::size_t o_gamma_ = 0, o_R_ = 0, o_h_ = 0, o_b_ = 0, o_mu_ = 0, o_kappa_ = 0, o_cost_ = 0, o_Q_ = 0,
              o_H_ = 0, o_d_ = 0, o_mut_ = 0;
  std::vector<std::size_t> t_;
  std::vector<std::size_t> k_;
  std::vector<char> drop_;
  std::vector<double> v_;
};

struct SimOptions {
  /// Throw InvariantError on the first RAM/LRAM slot that breaks a queue cap,
  /// delivers less than the nominal service, or would underflow.
  bool strict = true;
};

/// Learning phase (if the policy has one), queue reset, then `horizon` control
/// slots. Deterministic in `seed`.
SimTrace run_sim(const SystemConfig& cfg, const PolicySpec& policy, double V, std::size_t horizon,
                 std::uint64_t seed, const SimOptions& opts = {});

struct Metrics {
  std::size_t burn_in = 0;
  std::size_t rows = 0;
  double f_av = 0.0;        // sum_n U_n(mean kappa_n) - mean cost
  Vec r_bar;
  double cost_bar = 0.0;
  Vec mean_Q, max_Q, mean_H, max_H, mean_d, max_d;
  double mean_Q_total = 0.0;  // sum over task queues
  double mean_H_total = 0.0;
  double mean_d_total = 0.0;
  std::size_t drops = 0;      // over all control rows
  double drop_fraction = 0.0;
  std::optional<std::size_t> convergence_time;
};

/// First 20% of the control rows.
std::size_t default_burn_in(std::size_t rows) noexcept;

/// Averages over rows [burn_in, size).
Metrics summarize(const SimTrace& trace, const SystemConfig& cfg, std::size_t burn_in);

/// Queue vector the convergence criterion looks at: shifted for DRAM, raw otherwise.
Multipliers measured_point(const SimTrace& trace, std::size_t i);

/// Slot index t of the first row whose measured point lies within D of target.
std::optional<std::size_t> convergence_time(const SimTrace& trace, const Multipliers& target, double D);

/// Distances of the measured point to target for rows [from, size).
Vec residual_distances(const SimTrace& trace, const Multipliers& target, std::size_t from);

/// Minimizer of the true-statistics dual. `raw` has the offsets removed, so the
/// point a controller with offsets (theta1, theta2) should settle near is
/// raw + theta (see point_for).
struct ConvergenceTarget {
  Multipliers raw;
  DualSolution dual;
  DerivedConstants constants;  // offsets used to solve the dual

  Multipliers point_for(const DerivedConstants& dc) const;
};
ConvergenceTarget true_convergence_target(const SystemConfig& cfg, double V, const DualOptions& opts = {});

/// Value below which a fraction q of the samples lie (nearest rank).
double quantile(Vec samples, double q);

/// Steady-state residual radius of RAM: the q-quantile of the distances to
/// the true target, pooled over seeds 1..n_seeds after the default burn-in.
double fit_convergence_radius(const SystemConfig& cfg, double V, std::size_t n_seeds, std::size_t horizon,
                              const ConvergenceTarget& target, double q = 0.95);

/// Row index i such that re-applying the queue recursions to row i does not
/// reproduce row i+1 bit-for-bit; nullopt when the whole trace replays.
std::optional<std::size_t> replay_mismatch(const SimTrace& trace);

/// RFC 4180 CSV with doubles in shortest round-trip form.
void write_trace_csv(const SimTrace& trace, std::ostream& out);
std::string trace_csv_header(std::size_t n_tasks, std::size_t m_resources);
/// Reads a CSV written by write_trace_csv (header metadata is not part of it).
SimTrace read_trace_csv(std::istream& in);

/// Shortest decimal form that parses back to the same double.
std::string format_double(double x);

nlohmann::json to_json(const TraceHeader& h);
nlohmann::json to_json(const Metrics& m);

}  // namespace matchq
