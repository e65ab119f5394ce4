#pragma once

#include <vector>

namespace matchq {

/// Concave increasing utility with U(0) = 0.
///   scaled_log: U(r) = a * log(1 + c r)
///   linear:     U(r) = a r
class Utility {
 public:
  enum class Kind { scaled_log, linear };

  static Utility scaled_log(double a, double c);
  static Utility linear(double a);

  Kind kind() const noexcept { return kind_; }
  double a() const noexcept { return a_; }
  double c() const noexcept { return c_; }

  double value(double r) const noexcept;
  double derivative(double r) const noexcept;
  /// Largest slope on [0, inf), i.e. U'(0).
  double max_derivative() const noexcept { return derivative(0.0); }

  /// Maximizer of scale * U(g) - price * g over [0, upper].
  double argmax_penalized(double scale, double price, double upper) const noexcept;

 private:
  Utility(Kind k, double a, double c) : kind_(k), a_(a), c_(c) {}
  Kind kind_;
  double a_;
  double c_;
};

/// Auxiliary-variable domain: continuous [0, r_max] when grid is empty,
/// otherwise the listed points (sorted ascending).
struct GammaDomain {
  std::vector<double> grid;
  bool continuous() const noexcept { return grid.empty(); }
};

/// argmax of scale * U(g) - price * g over the domain (clipped to [0, r_max]);
/// grid ties go to the smaller point.
double maximize_penalized(const Utility& u, double scale, double price, double r_max,
                          const GammaDomain& domain) noexcept;

}  // namespace matchq
