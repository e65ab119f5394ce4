#pragma once

#include <span>
#include <stdexcept>
#include <string>

#include "matchq/matrix.hpp"

namespace matchq {

struct QueueState {
  Vec Q;  // task backlog, length N
  Vec H;  // resource stock, length M
  Vec d;  // reward deficit, length N

  static QueueState zeros(std::size_t n_tasks, std::size_t m_resources) {
    return {Vec(n_tasks, 0.0), Vec(m_resources, 0.0), Vec(n_tasks, 0.0)};
  }
  friend bool operator==(const QueueState&, const QueueState&) = default;
};

/// Spending more of resource m than the queue holds. Controllers built on the
/// placeholder offsets never trigger this; seeing it means a bug or a config
/// that breaks the offset assumptions.
class UnderflowError : public std::runtime_error {
 public:
  UnderflowError(std::size_t resource, double requested, double available);
  std::size_t resource() const noexcept { return resource_; }
  double requested() const noexcept { return requested_; }
  double available() const noexcept { return available_; }

 private:
  std::size_t resource_;
  double requested_;
  double available_;
};

/// Absolute slack allowed on the no-underflow check for rounding in row sums.
inline constexpr double kUnderflowTolerance = 1e-9;

/// One slot of queue dynamics, in place:
///   Q' = max(Q - mu, 0) + R,  H' = H - usage + h,  d' = max(d - kappa, 0) + gamma.
/// `usage` holds sum_n b_mn per resource. Throws UnderflowError if usage > H.
void step_queues_inplace(QueueState& qs, std::span<const double> mu, std::span<const double> R,
                         std::span<const double> usage, std::span<const double> h,
                         std::span<const double> kappa, std::span<const double> gamma);

QueueState step_queues(const QueueState& qs, std::span<const double> mu, std::span<const double> R, const Matrix& b,
                       std::span<const double> h, std::span<const double> kappa, std::span<const double> gamma);

}  // namespace matchq
