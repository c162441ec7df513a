#pragma once

// Reference values computed independently of the library: closed forms,
// plain finite differences and a fixed-panel Simpson rule.

#include <cmath>
#include <functional>
#include <numbers>

namespace oracle {

// y' = b y^gamma, y(0) = a.
inline double power_x_star(double a, double b, double gamma) {
  return 1.0 / (std::pow(a, gamma - 1.0) * b * (gamma - 1.0));
}
inline double power_y(double x, double a, double b, double gamma) {
  return a * std::pow(1.0 - x / power_x_star(a, b, gamma), -1.0 / (gamma - 1.0));
}

// y' = y^2 (b - x), y(0) = a: root of a x^2/2 - a b x + 1.
inline double zero_rhs_x_star(double a, double b) { return b - std::sqrt(b * b - 2.0 / a); }

inline double sing_pole1_x_star(double a, double b) { return b * (1.0 - std::exp(-1.0 / a)); }

inline const double kRiccatiDecreasingXStar = 2.0 - std::numbers::sqrt2;

// Central difference with step scaled to |x|.
inline double central_diff(const std::function<double(double)>& f, double x) {
  const double h = 1e-6 * std::max(1.0, std::abs(x));
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

// Composite Simpson with n (even) panels.
inline double simpson(const std::function<double(double)>& f, double a, double b, int n = 20000) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

inline double rel_err(double got, double want) { return std::abs(got - want) / std::abs(want); }

}  // namespace oracle
