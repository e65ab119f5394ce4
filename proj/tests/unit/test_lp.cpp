#include <doctest.h>

#include <cmath>

#include "matchq/detail/lp.hpp"
#include "matchq/rng.hpp"

using namespace matchq;
using matchq::detail::LpProblem;
using matchq::detail::LpResult;
using matchq::detail::lp_maximize;

TEST_CASE("small LP with known vertex and duals") {
  LpProblem p{{3, 2}, {{1, 1}, {1, 3}, {1, 0}}, {4, 6, 3}};
  const auto r = lp_maximize(p);
  REQUIRE(r.status == LpResult::Status::optimal);
  CHECK(r.value == doctest::Approx(11));
  CHECK(r.x[0] == doctest::Approx(3));
  CHECK(r.x[1] == doctest::Approx(1));
  CHECK(r.dual[0] == doctest::Approx(2));
  CHECK(r.dual[1] == doctest::Approx(0));
  CHECK(r.dual[2] == doctest::Approx(1));
}

TEST_CASE("unbounded LP is reported") {
  LpProblem p{{1, 0}, {{-1, 1}}, {1}};
  CHECK(lp_maximize(p).status == LpResult::Status::unbounded);
}

TEST_CASE("Klee-Minty cube") {
  LpProblem p{{4, 2, 1}, {{1, 0, 0}, {4, 1, 0}, {8, 4, 1}}, {5, 25, 125}};
  const auto r = lp_maximize(p);
  REQUIRE(r.status == LpResult::Status::optimal);
  CHECK(r.value == doctest::Approx(125));
}

TEST_CASE("degenerate vertex terminates") {
  LpProblem p{{1, 1}, {{1, 0}, {0, 1}, {1, 1}, {1, -1}}, {1, 1, 2, 0}};
  const auto r = lp_maximize(p);
  REQUIRE(r.status == LpResult::Status::optimal);
  CHECK(r.value == doctest::Approx(2));
}

TEST_CASE("random bounded LPs satisfy strong duality") {
  CounterRng rng(8, Stream::perturbation);
  for (int t = 0; t < 300; ++t) {
    const std::size_t n = 2 + t % 6, m = 2 + (t / 6) % 6;
    LpProblem p;
    for (std::size_t j = 0; j < n; ++j) p.c.push_back(rng.uniform() * 2 - 0.5);
    for (std::size_t i = 0; i < m; ++i) {
      std::vector<double> row;
      for (std::size_t j = 0; j < n; ++j) row.push_back(rng.uniform() * 2 - 0.3);
      p.A.push_back(row);
      p.b.push_back(rng.uniform() * 5);
    }
    // A box keeps every instance bounded.
    for (std::size_t j = 0; j < n; ++j) {
      std::vector<double> row(n, 0.0);
      row[j] = 1.0;
      p.A.push_back(row);
      p.b.push_back(10.0);
    }
    const auto r = lp_maximize(p);
    REQUIRE(r.status == LpResult::Status::optimal);
    double cx = 0.0, by = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      CHECK(r.x[j] >= -1e-9);
      cx += p.c[j] * r.x[j];
    }
    for (std::size_t i = 0; i < p.A.size(); ++i) {
      double ax = 0.0;
      for (std::size_t j = 0; j < n; ++j) ax += p.A[i][j] * r.x[j];
      CHECK(ax <= p.b[i] + 1e-8);
      CHECK(r.dual[i] >= -1e-9);
      by += p.b[i] * r.dual[i];
    }
    for (std::size_t j = 0; j < n; ++j) {
      double aty = 0.0;
      for (std::size_t i = 0; i < p.A.size(); ++i) aty += p.A[i][j] * r.dual[i];
      CHECK(aty >= p.c[j] - 1e-8);
    }
    CHECK(cx == doctest::Approx(r.value).epsilon(1e-9));
    CHECK(by == doctest::Approx(cx).epsilon(1e-8));
  }
}
