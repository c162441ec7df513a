#include "blowup/quadrature.hpp"

#include <cmath>
#include <cstdlib>
#include <string>

#include "blowup/error.hpp"

namespace blowup {

QuadratureOptions quadrature_options_from_env() {
  QuadratureOptions opts;
  if (const char* env = std::getenv("BLOWUP_ODE_TOL")) {
    try {
      std::size_t used = 0;
      const double v = std::stod(env, &used);
      if (used > 0 && std::isfinite(v) && v > 0.0) opts.tol = v;
    } catch (const std::exception&) {
      // Malformed values keep the default.
    }
  }
  return opts;
}

namespace {

struct Panel {
  double a, m, b;
  double fa, fm, fb;
  double whole;
};

double simpson(double h, double fa, double fm, double fb) { return h / 6.0 * (fa + 4.0 * fm + fb); }

double refine(const std::function<double(double)>& f, const Panel& p, double tol, int depth) {
  const double lm = 0.5 * (p.a + p.m);
  const double rm = 0.5 * (p.m + p.b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = simpson(p.m - p.a, p.fa, flm, p.fm);
  const double right = simpson(p.b - p.m, p.fm, frm, p.fb);
  const double delta = left + right - p.whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol || !std::isfinite(delta)) {
    return left + right + delta / 15.0;
  }
  return refine(f, {p.a, lm, p.m, p.fa, flm, p.fm, left}, tol / 2.0, depth - 1) +
         refine(f, {p.m, rm, p.b, p.fm, frm, p.fb, right}, tol / 2.0, depth - 1);
}

}  // namespace

double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        const QuadratureOptions& opts) {
  if (a == b) return 0.0;
  const double m = 0.5 * (a + b);
  const double fa = f(a);
  const double fm = f(m);
  const double fb = f(b);
  return refine(f, {a, m, b, fa, fm, fb, simpson(b - a, fa, fm, fb)}, opts.tol, opts.max_depth);
}

std::optional<double> integrate_to_infinity(const std::function<double(double)>& f, double a,
                                            const QuadratureOptions& opts) {
  const double scale = std::max(1.0, std::abs(a));
  double total = 0.0;
  double previous = 0.0;
  double ratio = 0.0;
  double remainder = 0.0;
  int growing = 0;
  for (int k = 0; k < opts.max_segments; ++k) {
    const double lo = a + (std::ldexp(1.0, k) - 1.0) * scale;
    const double hi = a + (std::ldexp(1.0, k + 1) - 1.0) * scale;
    if (!std::isfinite(hi)) break;
    QuadratureOptions seg = opts;
    seg.tol = opts.tol / static_cast<double>((k + 1) * (k + 1));
    const double piece = adaptive_simpson(f, lo, hi, seg);
    if (!std::isfinite(piece)) throw NumericalError("integrand is not finite on [" + std::to_string(lo) + ", inf)");
    total += piece;
    if (k > 0) {
      if (previous == 0.0) {
        if (piece == 0.0) return total;
        ratio = 1.0;
      } else {
        ratio = piece / previous;
      }
      if (ratio >= 1.0) {
        if (++growing >= 3 && k >= 3) return std::nullopt;
      } else {
        growing = 0;
        remainder = piece * ratio / (1.0 - ratio);
        if (std::abs(remainder) < opts.tol) return total + remainder;
      }
    }
    previous = piece;
  }
  if (ratio >= 0.999) return std::nullopt;
  return total + remainder;
}

}  // namespace blowup
