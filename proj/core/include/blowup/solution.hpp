#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace blowup {

/// Parametric solution on a uniform grid of the transform parameter.
/// Column 0 is always x; the remaining columns are the original state
/// variables (y, t, w, ... or y1..yn). `rates` hold d(column)/d(parameter).
struct ParametricSolution {
  std::string parameter = "xi";
  std::vector<std::string> columns;
  std::vector<double> xi;
  std::vector<std::vector<double>> values;  // [column][node]
  std::vector<std::vector<double>> rates;   // [column][node]
  std::vector<double> lambda_m;
  /// Column used for the stopping rule and error measurement.
  std::size_t primary = 1;
  double x_star_estimate = 0.0;

  std::size_t size() const noexcept { return xi.size(); }
  const std::vector<double>& x() const { return values.at(0); }
  const std::vector<double>& y() const { return values.at(primary); }
  /// Index of a named column. Throws ValidationError if absent.
  std::size_t column(std::string_view name) const;
  /// dy/dx of column c at node i by the chain rule.
  double slope(std::size_t c, std::size_t i) const { return rates[c][i] / rates[0][i]; }
};

/// Stopping quantity min(|y|, |y'_x / y|) of a decoded node.
double lambda_m(double y, double dy_dx);

/// Monotone-preserving cubic Hermite interpolation of (x, y) with slopes
/// `dy` (limited where they would break monotonicity). `x` must be strictly
/// increasing. Throws ValidationError outside [x.front(), x.back()].
std::vector<double> hermite_interpolate(const std::vector<double>& x, const std::vector<double>& y,
                                        const std::vector<double>& dy, const std::vector<double>& query);

/// y at `xs` for the primary column (or `column`), interpolating in x.
std::vector<double> reconstruct_on_x(const ParametricSolution& ps, const std::vector<double>& xs);
std::vector<double> reconstruct_on_x(const ParametricSolution& ps, const std::vector<double>& xs,
                                     std::size_t column);

}  // namespace blowup
