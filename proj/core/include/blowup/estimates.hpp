#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "blowup/expr.hpp"
#include "blowup/problems.hpp"
#include "blowup/quadrature.hpp"
#include "blowup/solution.hpp"

namespace blowup {

using ScalarFunction = std::function<double(double)>;

// ---------------------------------------------------------------------------
// Existence criteria for autonomous y' = f(y), sampled on y = a*10^j,
// j = 1..8, against the ratio at y = a.

/// f(y)/y grows without bound. The ladder must be strictly increasing and
/// either gain three orders of magnitude or keep its last-decade increment
/// at least a tenth of the first one (slow logarithmic growth).
bool criterion_necessary(const ScalarFunction& f, double a = 1.0);
bool criterion_necessary(const Expr& f, double a = 1.0, const ParamMap& params = {});

/// f(y)/y^(1+kappa) tends to a positive, possibly infinite, limit.
bool criterion_sufficient(const ScalarFunction& f, double kappa, double a = 1.0);
bool criterion_sufficient(const Expr& f, double kappa, double a = 1.0, const ParamMap& params = {});

// ---------------------------------------------------------------------------
// Critical values.

/// Integral of dy/f(y) over [a, inf); nullopt when it diverges. f = +inf
/// contributes zero. Throws ValidationError when f <= 0 at a sample.
std::optional<double> x_star_autonomous(const ScalarFunction& f, double a, const QuadratureOptions& opts = {});
std::optional<double> x_star_autonomous(const Expr& f, double a, const ParamMap& params = {},
                                        const QuadratureOptions& opts = {});

/// Upper bound x* <= I_g for y' = f(x, y) >= g(y). f >= g is spot-checked
/// on a 20x20 grid over [x0, x0 + I_g] x [a, a*10^6]; a violation throws
/// ValidationError. Throws NumericalError when I_g diverges.
double one_sided_bound(const Expr& f, const Expr& minorant, double a, const ParamMap& params = {},
                       double x0 = 0.0, const QuadratureOptions& opts = {});

enum class BoundsCase { FxNonNegative, FxNonPositive, OneSidedOnly };

const char* to_string(BoundsCase c);

struct BoundsReport {
  std::optional<double> I_g;
  std::optional<double> I1;
  std::optional<double> I2;
  std::optional<std::pair<double, double>> bracket;
  BoundsCase bounds_case = BoundsCase::OneSidedOnly;
};

/// Two-sided bracket for y' = f(x, y), y(x0) = a. I1 freezes f at x0, I2 at
/// x0 + I1. The sign of f_x is sampled by forward-mode derivatives on a
/// 20x20 grid; a mixed or undefined sign gives OneSidedOnly. Throws
/// NumericalError when I1 diverges.
BoundsReport two_sided_bound(const Expr& f, double a, const ParamMap& params = {}, double x0 = 0.0,
                             const QuadratureOptions& opts = {});

/// First integral of y'' = f(y), y(x0) = a, y'(x0) = b:
/// F(y) = sqrt(2 * integral_a^y f + b^2), evaluated by quadrature.
ScalarFunction reduce_autonomous_second_order(const Expr& f, double a, double b, const ParamMap& params = {},
                                              const QuadratureOptions& opts = {});

// ---------------------------------------------------------------------------
// Power-law exponents of y_m ~ alpha_m (x* - x)^(-beta_m).

struct ExponentReport {
  std::vector<double> betas;
  std::size_t growing_index = 1;  // 1-based
};

/// Dominant-balance exponents for a polynomial system (a first-order scalar
/// problem counts as a 1-system). Throws ValidationError for non-polynomial
/// right-hand sides and NumericalError when no unique consistent balance
/// exists (including singular systems such as y' = y).
ExponentReport exponent_solve(const Problem& sys);

// ---------------------------------------------------------------------------
// Diagnostics on a computed parametric solution.

struct DiagnosticSeries {
  std::vector<double> xi;
  std::vector<double> inv_beta;

  /// Mean of the last quarter of the series.
  double tail_value() const;
  /// Largest |inv_beta - expected| over the last quarter.
  double tail_deviation(double expected) const;
};

/// 1/beta = (y / y') (y'' / y' - x'' / x') - 1. First derivatives are the
/// stored rates and second derivatives are second-order differences of them;
/// without rates both come from differencing the values. Needs a uniform
/// grid of >= 5 nodes (ValidationError); throws NumericalError when y'
/// vanishes at an interior node.
DiagnosticSeries beta_diagnostic(const ParametricSolution& ps);

struct AsymptoticFit {
  double A = 0.0;
  double beta = 0.0;
  double x_star = 0.0;
  double residual = 0.0;  // RMS of the log-space fit
};

/// Least-squares fit of ln y = ln A - beta ln(x* - x) over the tail where y
/// spans two decades, with x* found by 1-D minimisation of the residual.
/// Throws NumericalError when the tail is too short.
AsymptoticFit asymptotic_fit(const ParametricSolution& ps);

}  // namespace blowup
