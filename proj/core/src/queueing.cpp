#include "matchq/queueing.hpp"

#include <algorithm>
#include <sstream>

namespace matchq {

namespace {

std::string underflow_message(std::size_t m, double req, double avail) {
  std::ostringstream os;
  os.precision(17);
  os << "resource underflow on queue " << m << ": allocating " << req << " with only " << avail << " available";
  return os.str();
}

}  // namespace

UnderflowError::UnderflowError(std::size_t resource, double requested, double available)
    : std::runtime_error(underflow_message(resource, requested, available)),
      resource_(resource),
      requested_(requested),
      available_(available) {}

void step_queues_inplace(QueueState& qs, std::span<const double> mu, std::span<const double> R,
                         std::span<const double> usage, std::span<const double> h,
                         std::span<const double> kappa, std::span<const double> gamma) {
  for (std::size_t m = 0; m < qs.H.size(); ++m)
    if (usage[m] > qs.H[m] + kUnderflowTolerance) throw UnderflowError(m, usage[m], qs.H[m]);
  for (std::size_t n = 0; n < qs.Q.size(); ++n) {
    qs.Q[n] = std::max(qs.Q[n] - mu[n], 0.0) + R[n];
    qs.d[n] = std::max(qs.d[n] - kappa[n], 0.0) + gamma[n];
  }
  for (std::size_t m = 0; m < qs.H.size(); ++m) {
    // Only rounding slack can make the difference negative here.
    qs.H[m] = std::max(qs.H[m] - usage[m], 0.0) + h[m];
  }
}

QueueState step_queues(const QueueState& qs, std::span<const double> mu, std::span<const double> R, const Matrix& b,
                       std::span<const double> h, std::span<const double> kappa, std::span<const double> gamma) {
  QueueState out = qs;
  const Vec usage = b.row_sums();
  step_queues_inplace(out, mu, R, usage, h, kappa, gamma);
  return out;
}

}  // namespace matchq
