#include "blowup/solution.hpp"

#include <algorithm>
#include <cmath>

#include "blowup/error.hpp"

namespace blowup {

std::size_t ParametricSolution::column(std::string_view name) const {
  auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end()) throw ValidationError("no column named '" + std::string(name) + "'");
  return static_cast<std::size_t>(it - columns.begin());
}

double lambda_m(double y, double dy_dx) { return std::min(std::abs(y), std::abs(dy_dx / y)); }

std::vector<double> hermite_interpolate(const std::vector<double>& x, const std::vector<double>& y,
                                        const std::vector<double>& dy, const std::vector<double>& query) {
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n || dy.size() != n) throw ValidationError("interpolation needs at least two nodes");
  for (std::size_t i = 1; i < n; ++i) {
    if (!(x[i] > x[i - 1])) throw ValidationError("x must be strictly increasing for interpolation");
  }
  std::vector<double> out;
  out.reserve(query.size());
  for (double q : query) {
    if (!(q >= x.front() && q <= x.back())) throw ValidationError("x outside the solution range");
    auto it = std::upper_bound(x.begin(), x.end(), q);
    std::size_t k = it == x.end() ? n - 2 : static_cast<std::size_t>(it - x.begin()) - 1;
    k = std::min(k, n - 2);
    const double hk = x[k + 1] - x[k];
    const double delta = (y[k + 1] - y[k]) / hk;
    double m0 = dy[k];
    double m1 = dy[k + 1];
    // Fritsch-Carlson limiter, applied per interval.
    if (delta == 0.0) {
      m0 = m1 = 0.0;
    } else {
      double a = m0 / delta;
      double b = m1 / delta;
      if (a < 0.0) a = 0.0;
      if (b < 0.0) b = 0.0;
      const double r = a * a + b * b;
      if (r > 9.0) {
        const double tau = 3.0 / std::sqrt(r);
        a *= tau;
        b *= tau;
      }
      m0 = a * delta;
      m1 = b * delta;
    }
    const double s = (q - x[k]) / hk;
    const double s2 = s * s;
    const double s3 = s2 * s;
    const double h00 = 2 * s3 - 3 * s2 + 1;
    const double h10 = s3 - 2 * s2 + s;
    const double h01 = -2 * s3 + 3 * s2;
    const double h11 = s3 - s2;
    out.push_back(h00 * y[k] + h10 * hk * m0 + h01 * y[k + 1] + h11 * hk * m1);
  }
  return out;
}

std::vector<double> reconstruct_on_x(const ParametricSolution& ps, const std::vector<double>& xs,
                                     std::size_t column) {
  if (column == 0 || column >= ps.columns.size()) throw ValidationError("invalid column for reconstruction");
  std::vector<double> slopes(ps.size());
  for (std::size_t i = 0; i < ps.size(); ++i) slopes[i] = ps.slope(column, i);
  return hermite_interpolate(ps.x(), ps.values[column], slopes, xs);
}

std::vector<double> reconstruct_on_x(const ParametricSolution& ps, const std::vector<double>& xs) {
  return reconstruct_on_x(ps, xs, ps.primary);
}

}  // namespace blowup
