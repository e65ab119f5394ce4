#pragma once

#include <cstddef>
#include <vector>

namespace matchq::detail {

/// maximize c.x  s.t.  A x <= b, x >= 0, with b >= 0 (the origin is feasible).
/// Dense tableau simplex; Dantzig pricing with a switch to Bland's rule after a
/// run of degenerate pivots.
struct LpProblem {
  std::vector<double> c;               // n
  std::vector<std::vector<double>> A;  // m rows of length n
  std::vector<double> b;               // m, nonnegative
};

struct LpResult {
  enum class Status { optimal, unbounded, iteration_limit };
  Status status = Status::optimal;
  std::vector<double> x;
  std::vector<double> dual;  // one per row, >= 0
  double value = 0.0;
  std::size_t pivots = 0;
};

LpResult lp_maximize(const LpProblem& p, std::size_t max_pivots = 100000);

}  // namespace matchq::detail
