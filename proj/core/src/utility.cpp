#include "matchq/utility.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace matchq {

Utility Utility::scaled_log(double a, double c) {
  if (!(a > 0.0) || !(c > 0.0)) throw std::invalid_argument("scaled_log utility needs a > 0 and c > 0");
  return Utility(Kind::scaled_log, a, c);
}

Utility Utility::linear(double a) {
  if (!(a >= 0.0)) throw std::invalid_argument("linear utility needs a >= 0");
  return Utility(Kind::linear, a, 0.0);
}

double Utility::value(double r) const noexcept {
  switch (kind_) {
    case Kind::scaled_log: return a_ * std::log1p(c_ * r);
    case Kind::linear: return a_ * r;
  }
  return 0.0;
}

double Utility::derivative(double r) const noexcept {
  switch (kind_) {
    case Kind::scaled_log: return a_ * c_ / (1.0 + c_ * r);
    case Kind::linear: return a_;
  }
  return 0.0;
}

double Utility::argmax_penalized(double scale, double price, double upper) const noexcept {
  if (upper <= 0.0) return 0.0;
  switch (kind_) {
    case Kind::scaled_log: {
      // scale * a * c / (1 + c g) = price
      if (price <= 0.0) return upper;
      const double g = (scale * a_ / price) - 1.0 / c_;
      return std::clamp(g, 0.0, upper);
    }
    case Kind::linear:
      // Flat objective when scale * a == price; the smaller point wins.
      return scale * a_ > price ? upper : 0.0;
  }
  return 0.0;
}

double maximize_penalized(const Utility& u, double scale, double price, double r_max,
                          const GammaDomain& domain) noexcept {
  if (domain.continuous()) return u.argmax_penalized(scale, price, r_max);
  double best_g = 0.0;
  double best = -INFINITY;
  for (double g : domain.grid) {
    if (g < 0.0 || g > r_max) continue;
    const double v = scale * u.value(g) - price * g;
    if (v > best) {
      best = v;
      best_g = g;
    }
  }
  return best_g;
}

}  // namespace matchq
