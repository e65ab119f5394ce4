#include "matchq/detail/lp.hpp"

#include <cmath>
#include <stdexcept>

namespace matchq::detail {

LpResult lp_maximize(const LpProblem& p, std::size_t max_pivots) {
  const std::size_t m = p.A.size();
  const std::size_t n = p.c.size();
  if (p.b.size() != m) throw std::invalid_argument("lp: b has the wrong length");
  for (std::size_t i = 0; i < m; ++i) {
    if (p.A[i].size() != n) throw std::invalid_argument("lp: row length mismatch");
    if (p.b[i] < 0.0) throw std::invalid_argument("lp: right-hand side must be nonnegative");
  }
  constexpr double eps = 1e-11;

  // Tableau rows 0..m-1: [A | I | b]; row m: reduced costs [-c | 0 | value].
  const std::size_t w = n + m + 1;
  std::vector<double> T((m + 1) * w, 0.0);
  auto at = [&](std::size_t r, std::size_t col) -> double& { return T[r * w + col]; };
  std::vector<std::size_t> basis(m);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) at(i, j) = p.A[i][j];
    at(i, n + i) = 1.0;
    at(i, w - 1) = p.b[i];
    basis[i] = n + i;
  }
  for (std::size_t j = 0; j < n; ++j) at(m, j) = -p.c[j];

  LpResult res;
  std::size_t degenerate_run = 0;
  for (;;) {
    if (res.pivots >= max_pivots) {
      res.status = LpResult::Status::iteration_limit;
      break;
    }
    const bool bland = degenerate_run > 50;
    std::size_t enter = w;
    double best = -eps;
    for (std::size_t j = 0; j + 1 < w; ++j) {
      const double rc = at(m, j);
      if (rc < best) {
        enter = j;
        if (bland) break;
        best = rc;
      }
    }
    if (enter == w) break;

    std::size_t leave = m;
    double ratio = INFINITY;
    for (std::size_t i = 0; i < m; ++i) {
      const double a = at(i, enter);
      if (a > eps) {
        const double r = at(i, w - 1) / a;
        if (r < ratio - 1e-14 || (std::abs(r - ratio) <= 1e-14 && leave < m && basis[i] < basis[leave])) {
          ratio = r;
          leave = i;
        }
      }
    }
    if (leave == m) {
      res.status = LpResult::Status::unbounded;
      return res;
    }
    degenerate_run = ratio <= 1e-14 ? degenerate_run + 1 : 0;

    const double piv = at(leave, enter);
    for (std::size_t j = 0; j < w; ++j) at(leave, j) /= piv;
    for (std::size_t i = 0; i <= m; ++i) {
      if (i == leave) continue;
      const double f = at(i, enter);
      if (f == 0.0) continue;
      for (std::size_t j = 0; j < w; ++j) at(i, j) -= f * at(leave, j);
    }
    basis[leave] = enter;
    ++res.pivots;
  }

  res.x.assign(n, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    if (basis[i] < n) res.x[basis[i]] = std::max(at(i, w - 1), 0.0);
  res.dual.assign(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) res.dual[i] = at(m, n + i);
  res.value = 0.0;
  for (std::size_t j = 0; j < n; ++j) res.value += p.c[j] * res.x[j];
  return res;
}

}  // namespace matchq::detail
