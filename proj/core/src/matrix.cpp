#include "matchq/matrix.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace matchq {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), v_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), v_(std::move(values)) {
  if (v_.size() != rows * cols) throw std::invalid_argument("matrix value count does not match shape");
}

double Matrix::row_sum(std::size_t m) const noexcept {
  auto r = row(m);
  return std::accumulate(r.begin(), r.end(), 0.0);
}

Vec Matrix::row_sums() const {
  Vec out(rows_);
  for (std::size_t m = 0; m < rows_; ++m) out[m] = row_sum(m);
  return out;
}

double Matrix::max_entry() const noexcept {
  return v_.empty() ? 0.0 : *std::max_element(v_.begin(), v_.end());
}

bool Matrix::is_zero() const noexcept {
  return std::all_of(v_.begin(), v_.end(), [](double x) { return x == 0.0; });
}

std::partial_ordering operator<=>(const Matrix& a, const Matrix& b) noexcept {
  if (auto c = a.rows_ <=> b.rows_; c != 0) return c;
  if (auto c = a.cols_ <=> b.cols_; c != 0) return c;
  return std::lexicographical_compare_three_way(a.v_.begin(), a.v_.end(), b.v_.begin(), b.v_.end());
}

}  // namespace matchq
