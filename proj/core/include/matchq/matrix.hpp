#pragma once

#include <compare>
#include <cstddef>
#include <span>
#include <vector>

namespace matchq {

using Vec = std::vector<double>;

/// Dense row-major M x N matching matrix; entry (m, n) is resource m given to task n.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> values);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double operator()(std::size_t m, std::size_t n) const noexcept { return v_[m * cols_ + n]; }
  double& operator()(std::size_t m, std::size_t n) noexcept { return v_[m * cols_ + n]; }

  std::span<const double> values() const noexcept { return v_; }
  std::span<const double> row(std::size_t m) const noexcept {
    return std::span<const double>(v_).subspan(m * cols_, cols_);
  }

  double row_sum(std::size_t m) const noexcept;
  Vec row_sums() const;
  double max_entry() const noexcept;
  bool is_zero() const noexcept;

  /// Row-major lexicographic order on the entries (shape first).
  friend std::partial_ordering operator<=>(const Matrix& a, const Matrix& b) noexcept;
  friend bool operator==(const Matrix& a, const Matrix& b) noexcept = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> v_;
};

}  // namespace matchq
