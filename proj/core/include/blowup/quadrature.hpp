#pragma once

#include <functional>
#include <optional>

namespace blowup {

struct QuadratureOptions {
  double tol = 1e-10;  // absolute
  int max_depth = 40;
  int max_segments = 1000;
};

/// Options with `tol` taken from BLOWUP_ODE_TOL when set and valid.
QuadratureOptions quadrature_options_from_env();

/// Adaptive Simpson on [a, b] with Richardson correction.
double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        const QuadratureOptions& opts = {});

/// Integral of f over [a, inf). The range is split into dyadic segments
/// [a + (2^k - 1) s, a + (2^(k+1) - 1) s], s = max(1, |a|), each integrated
/// by adaptive Simpson; the tail after the last segment is estimated from
/// the geometric ratio of consecutive segments. Returns nullopt when the
/// segment ratios show divergence.
std::optional<double> integrate_to_infinity(const std::function<double(double)>& f, double a,
                                            const QuadratureOptions& opts = {});

}  // namespace blowup
