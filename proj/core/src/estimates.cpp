#include "blowup/estimates.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <boost/math/tools/minima.hpp>
#include <cmath>
#include <limits>
#include <memory>

#include "blowup/error.hpp"

namespace blowup {

const char* to_string(BoundsCase c) {
  switch (c) {
    case BoundsCase::FxNonNegative:
      return "fx-non-negative";
    case BoundsCase::FxNonPositive:
      return "fx-non-positive";
    case BoundsCase::OneSidedOnly:
      return "one-sided-only";
  }
  return "?";
}

namespace {

constexpr int kLadder = 8;
constexpr int kGrid = 20;

void require_vars(const Expr& e, std::initializer_list<std::string_view> allowed, const ParamMap& params) {
  for (const auto& id : e.identifiers()) {
    if (params.count(id)) continue;
    if (std::find(allowed.begin(), allowed.end(), id) == allowed.end()) {
      throw ValidationError("unexpected identifier '" + id + "' in '" + e.to_string() + "'");
    }
  }
}

ScalarFunction bind_y(const Expr& f, const ParamMap& params) {
  require_vars(f, {"y"}, params);
  static const std::vector<std::string> slots{"y"};
  auto bound = std::make_shared<BoundExpr>(f, slots, params);
  return [bound](double y) { return (*bound)(std::span<const double>(&y, 1)); };
}

// Binary function f(x, y) plus its x-partial.
struct BoundXY {
  std::shared_ptr<BoundExpr> e;

  BoundXY(const Expr& f, const ParamMap& params) {
    require_vars(f, {"x", "y"}, params);
    static const std::vector<std::string> slots{"x", "y"};
    e = std::make_shared<BoundExpr>(f, slots, params);
  }
  double operator()(double x, double y) const {
    const std::array<double, 2> v{x, y};
    return (*e)(v);
  }
  double dx(double x, double y) const {
    const std::array<double, 2> v{x, y};
    const std::array<std::size_t, 1> seeds{0};
    return e->eval_dual(v, seeds).d[0];
  }
};

double sample(const ScalarFunction& f, double y) {
  const double v = f(y);
  if (std::isnan(v)) throw NumericalError("f is not finite at y = " + std::to_string(y));
  return v;
}

// Sample points y_k spanning six decades above a.
std::vector<double> y_grid(double a) {
  std::vector<double> ys;
  for (int k = 0; k < kGrid; ++k) {
    const double factor = std::pow(10.0, 6.0 * k / (kGrid - 1));
    ys.push_back(a > 0.0 ? a * factor : a + (factor - 1.0) * std::max(1.0, std::abs(a)));
  }
  return ys;
}

std::vector<double> x_grid(double lo, double hi) {
  std::vector<double> xs;
  for (int k = 0; k < kGrid; ++k) xs.push_back(lo + (hi - lo) * k / (kGrid - 1));
  return xs;
}

void require_positive_base(double a) {
  if (!(a > 0.0)) throw ValidationError("the sample ladder needs a > 0");
}

}  // namespace

bool criterion_necessary(const ScalarFunction& f, double a) {
  require_positive_base(a);
  std::array<double, kLadder + 1> r{};
  for (int j = 0; j <= kLadder; ++j) {
    const double y = a * std::pow(10.0, j);
    r[j] = sample(f, y) / y;
  }
  for (int j = 1; j <= kLadder; ++j) {
    if (std::isinf(r[j]) && r[j] > 0) return true;  // infinite limit reached
    if (!(r[j] > r[j - 1])) return false;
  }
  return r[kLadder] > 1e3 * r[0] || (r[kLadder] - r[kLadder - 1]) >= 0.1 * (r[1] - r[0]);
}

bool criterion_necessary(const Expr& f, double a, const ParamMap& params) {
  return criterion_necessary(bind_y(f, params), a);
}

bool criterion_sufficient(const ScalarFunction& f, double kappa, double a) {
  if (!(kappa > 0.0)) throw ValidationError("kappa must be positive");
  require_positive_base(a);
  std::array<double, kLadder + 1> q{};
  for (int j = 0; j <= kLadder; ++j) {
    const double y = a * std::pow(10.0, j);
    q[j] = sample(f, y) / std::pow(y, 1.0 + kappa);
  }
  const double last = q[kLadder];
  const double prev = q[kLadder - 1];
  if (std::isinf(last)) return last > 0;
  if (!(last > 0.0)) return false;
  if (q[kLadder - 2] <= prev && prev <= last) return true;
  return std::abs(last - prev) / last <= 0.1 && last >= 1e-3 * q[1];
}

bool criterion_sufficient(const Expr& f, double kappa, double a, const ParamMap& params) {
  return criterion_sufficient(bind_y(f, params), kappa, a);
}

std::optional<double> x_star_autonomous(const ScalarFunction& f, double a, const QuadratureOptions& opts) {
  auto integrand = [&f](double y) {
    const double v = f(y);
    if (std::isnan(v)) throw NumericalError("f is not finite at y = " + std::to_string(y));
    if (v <= 0.0) throw ValidationError("f must be positive on [a, inf); f(" + std::to_string(y) + ") <= 0");
    return std::isinf(v) ? 0.0 : 1.0 / v;
  };
  return integrate_to_infinity(integrand, a, opts);
}

std::optional<double> x_star_autonomous(const Expr& f, double a, const ParamMap& params,
                                        const QuadratureOptions& opts) {
  return x_star_autonomous(bind_y(f, params), a, opts);
}

double one_sided_bound(const Expr& f, const Expr& minorant, double a, const ParamMap& params, double x0,
                       const QuadratureOptions& opts) {
  const BoundXY fxy(f, params);
  const ScalarFunction g = bind_y(minorant, params);
  const auto Ig = x_star_autonomous(g, a, opts);
  if (!Ig) throw NumericalError("the minorant integral diverges; no upper bound");
  for (double x : x_grid(x0, x0 + *Ig)) {
    for (double y : y_grid(a)) {
      const double fv = fxy(x, y);
      const double gv = g(y);
      if (std::isnan(fv) || std::isnan(gv) || fv < gv - 1e-12 * std::abs(gv)) {
        throw ValidationError("minorant exceeds f at x = " + std::to_string(x) + ", y = " + std::to_string(y));
      }
    }
  }
  return *Ig;
}

namespace {

enum Sign { kZero = 0, kPositive = 1, kNegative = 2, kUndefined = 4 };

int fx_signs(const BoundXY& f, double x_lo, double x_hi, double a) {
  int seen = 0;
  for (double x : x_grid(x_lo, x_hi)) {
    for (double y : y_grid(a)) {
      const double d = f.dx(x, y);
      if (std::isnan(d)) {
        seen |= kUndefined;
      } else if (d > 0.0) {
        seen |= kPositive;
      } else if (d < 0.0) {
        seen |= kNegative;
      }
    }
  }
  return seen;
}

std::optional<double> frozen_integral(const BoundXY& f, double x, double a, const QuadratureOptions& opts) {
  return x_star_autonomous([&f, x](double y) { return f(x, y); }, a, opts);
}

}  // namespace

BoundsReport two_sided_bound(const Expr& f, double a, const ParamMap& params, double x0,
                             const QuadratureOptions& opts) {
  const BoundXY fxy(f, params);
  BoundsReport report;
  report.I1 = frozen_integral(fxy, x0, a, opts);
  if (!report.I1) throw NumericalError("I1 diverges; no blow-up certificate");
  const double I1 = *report.I1;

  const int signs = fx_signs(fxy, x0, x0 + I1, a);
  if ((signs & kUndefined) || ((signs & kPositive) && (signs & kNegative))) {
    report.bounds_case = BoundsCase::OneSidedOnly;
    return report;
  }
  try {
    report.I2 = frozen_integral(fxy, x0 + I1, a, opts);
  } catch (const ValidationError&) {
    report.I2.reset();
  }
  if (!report.I2) {
    report.bounds_case = BoundsCase::OneSidedOnly;
    return report;
  }
  const double I2 = *report.I2;
  if (!(signs & kNegative)) {
    report.bounds_case = BoundsCase::FxNonNegative;
    report.bracket = std::make_pair(x0 + std::min(I2, I1), x0 + I1);
    return report;
  }
  // f decreases in x: the bracket reaches I2, so the sign must hold there too.
  const int more = fx_signs(fxy, x0 + I1, x0 + I2, a);
  if ((more & kUndefined) || (more & kPositive)) {
    report.bounds_case = BoundsCase::OneSidedOnly;
    return report;
  }
  report.bounds_case = BoundsCase::FxNonPositive;
  report.bracket = std::make_pair(x0 + I1, x0 + std::max(I1, I2));
  return report;
}

ScalarFunction reduce_autonomous_second_order(const Expr& f, double a, double b, const ParamMap& params,
                                              const QuadratureOptions& opts) {
  if (!(a > 0.0) && a != 0.0) throw ValidationError("reduction needs a >= 0");
  if (!(b >= 0.0)) throw ValidationError("reduction needs b >= 0");
  const ScalarFunction fy = bind_y(f, params);
  return [fy, a, b, opts](double y) {
    if (y == a) return b;
    // Relative tolerance: the integral grows without bound.
    const double m = 0.5 * (a + y);
    const double crude = std::abs((y - a) / 6.0 * (fy(a) + 4.0 * fy(m) + fy(y)));
    QuadratureOptions local = opts;
    if (std::isfinite(crude)) local.tol = opts.tol * std::max(1.0, crude);
    local.max_depth = std::min(opts.max_depth, 30);
    const double integral = adaptive_simpson(fy, a, y, local);
    const double radicand = 2.0 * integral + b * b;
    if (radicand < 0.0) throw NumericalError("negative radicand in the first integral");
    return std::sqrt(radicand);
  };
}

// ---------------------------------------------------------------------------
// Dominant balance.

namespace {

struct Term {
  std::vector<double> exps;
  double coeff;
};

using Poly = std::vector<Term>;

bool same_exps(const std::vector<double>& a, const std::vector<double>& b) {
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::abs(a[i] - b[i]) > 1e-12) return false;
  }
  return true;
}

void add_term(Poly& p, const Term& t) {
  for (auto& existing : p) {
    if (same_exps(existing.exps, t.exps)) {
      existing.coeff += t.coeff;
      return;
    }
  }
  p.push_back(t);
}

Poly normalized(Poly p) {
  std::erase_if(p, [](const Term& t) { return t.coeff == 0.0; });
  return p;
}

class Expander {
 public:
  Expander(std::vector<std::string> names, double x0, const ParamMap& params)
      : names_(std::move(names)), x0_(x0), params_(params) {}

  Poly expand(const NodePtr& n) const {
    using Kind = ExprNode::Kind;
    if (!depends_on_state(n)) return constant(evaluate(n));
    switch (n->kind) {
      case Kind::Variable: {
        Term t{std::vector<double>(names_.size(), 0.0), 1.0};
        t.exps[index_of(n->name)] = 1.0;
        return {t};
      }
      case Kind::Negate: {
        Poly p = expand(n->lhs);
        for (auto& t : p) t.coeff = -t.coeff;
        return p;
      }
      case Kind::Add:
      case Kind::Sub: {
        Poly p = expand(n->lhs);
        Poly q = expand(n->rhs);
        for (auto t : q) {
          if (n->kind == Kind::Sub) t.coeff = -t.coeff;
          add_term(p, t);
        }
        return normalized(p);
      }
      case Kind::Mul:
        return multiply(expand(n->lhs), expand(n->rhs));
      case Kind::Div: {
        Poly den = expand(n->rhs);
        if (den.size() != 1) throw ValidationError("non-polynomial right-hand side (division by a sum)");
        Term inv = den.front();
        for (auto& e : inv.exps) e = -e;
        inv.coeff = 1.0 / inv.coeff;
        return multiply(expand(n->lhs), {inv});
      }
      case Kind::Pow: {
        if (depends_on_state(n->rhs)) throw ValidationError("non-polynomial right-hand side (variable exponent)");
        const double p = evaluate(n->rhs);
        Poly base = expand(n->lhs);
        if (base.size() == 1) {
          Term t = base.front();
          for (auto& e : t.exps) e *= p;
          t.coeff = std::pow(t.coeff, p);
          return {t};
        }
        if (p >= 0.0 && p <= 16.0 && std::nearbyint(p) == p) {
          Poly out = constant(1.0);
          for (int i = 0; i < static_cast<int>(p); ++i) out = multiply(out, base);
          return out;
        }
        throw ValidationError("non-polynomial right-hand side (power of a sum)");
      }
      default:
        throw ValidationError("non-polynomial right-hand side (function of the state)");
    }
  }

 private:
  bool depends_on_state(const NodePtr& n) const {
    if (!n) return false;
    if (n->kind == ExprNode::Kind::Variable) {
      return std::find(names_.begin(), names_.end(), n->name) != names_.end();
    }
    return depends_on_state(n->lhs) || depends_on_state(n->rhs);
  }

  std::size_t index_of(const std::string& name) const {
    return static_cast<std::size_t>(std::find(names_.begin(), names_.end(), name) - names_.begin());
  }

  double evaluate(const NodePtr& n) const { return eval(Expr(n), {{"x", x0_}}, params_); }

  Poly constant(double c) const {
    if (c == 0.0) return {};
    return {Term{std::vector<double>(names_.size(), 0.0), c}};
  }

  Poly multiply(const Poly& a, const Poly& b) const {
    Poly out;
    for (const auto& s : a) {
      for (const auto& t : b) {
        Term r{s.exps, s.coeff * t.coeff};
        for (std::size_t i = 0; i < r.exps.size(); ++i) r.exps[i] += t.exps[i];
        add_term(out, r);
      }
    }
    return normalized(out);
  }

  std::vector<std::string> names_;
  double x0_;
  const ParamMap& params_;
};

double balance(const Term& t, const Eigen::VectorXd& beta) {
  double v = 0.0;
  for (std::size_t j = 0; j < t.exps.size(); ++j) v += t.exps[j] * beta(static_cast<Eigen::Index>(j));
  return v;
}

}  // namespace

ExponentReport exponent_solve(const Problem& sys) {
  if (!(sys.is_system() || sys.kind == ProblemKind::FirstOrder)) {
    throw ValidationError("exponent_solve needs a system or a first-order problem");
  }
  const std::size_t n = sys.dimension();
  const Expander expander(sys.state_names(), sys.x0, sys.params);
  std::vector<Poly> polys;
  std::size_t combos = 1;
  for (const auto& f : sys.rhs) {
    polys.push_back(expander.expand(f.root()));
    if (polys.back().empty()) throw NumericalError("a right-hand side vanishes identically");
    combos *= polys.back().size();
    if (combos > 100000) throw NumericalError("too many dominant-balance candidates");
  }

  std::vector<Eigen::VectorXd> solutions;
  std::size_t singular = 0;
  std::vector<std::size_t> choice(n, 0);
  const auto N = static_cast<Eigen::Index>(n);
  for (std::size_t c = 0; c < combos; ++c) {
    std::size_t rest = c;
    for (std::size_t m = 0; m < n; ++m) {
      choice[m] = rest % polys[m].size();
      rest /= polys[m].size();
    }
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(N, N);
    for (std::size_t m = 0; m < n; ++m) {
      const Term& t = polys[m][choice[m]];
      for (std::size_t j = 0; j < n; ++j) A(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(j)) = t.exps[j];
      A(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m)) -= 1.0;
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
    if (!lu.isInvertible()) {
      ++singular;
      continue;
    }
    const Eigen::VectorXd beta = lu.solve(Eigen::VectorXd::Ones(N));
    bool consistent = true;
    for (std::size_t m = 0; m < n && consistent; ++m) {
      const double chosen = balance(polys[m][choice[m]], beta);
      for (const auto& t : polys[m]) {
        const double v = balance(t, beta);
        if (v > chosen + 1e-9 * (1.0 + std::abs(chosen))) {
          consistent = false;
          break;
        }
      }
    }
    if (!consistent || !(beta.maxCoeff() > 1e-12)) continue;
    const bool duplicate = std::any_of(solutions.begin(), solutions.end(),
                                       [&](const Eigen::VectorXd& s) { return (s - beta).norm() < 1e-9; });
    if (!duplicate) solutions.push_back(beta);
  }

  if (solutions.empty()) {
    if (singular == combos) throw NumericalError("singular exponent system; no power-law blow-up");
    throw NumericalError("no consistent dominant balance with a growing component");
  }
  if (solutions.size() > 1) throw NumericalError("ambiguous dominant balance");

  ExponentReport report;
  const Eigen::VectorXd& beta = solutions.front();
  report.betas.assign(beta.data(), beta.data() + beta.size());
  Eigen::Index best = 0;
  beta.maxCoeff(&best);
  report.growing_index = static_cast<std::size_t>(best) + 1;
  return report;
}

// ---------------------------------------------------------------------------
// Diagnostics.

namespace {

std::size_t tail_start(std::size_t n) { return n - std::max<std::size_t>(1, n / 4); }

double d1(const std::vector<double>& v, std::size_t i, double h) {
  const std::size_t n = v.size();
  if (i == 0) return (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h);
  if (i == n - 1) return (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) / (2.0 * h);
  return (v[i + 1] - v[i - 1]) / (2.0 * h);
}

double d2(const std::vector<double>& v, std::size_t i, double h) {
  const std::size_t n = v.size();
  if (i == 0) return (2.0 * v[0] - 5.0 * v[1] + 4.0 * v[2] - v[3]) / (h * h);
  if (i == n - 1) return (2.0 * v[n - 1] - 5.0 * v[n - 2] + 4.0 * v[n - 3] - v[n - 4]) / (h * h);
  return (v[i + 1] - 2.0 * v[i] + v[i - 1]) / (h * h);
}

}  // namespace

double DiagnosticSeries::tail_value() const {
  if (inv_beta.empty()) return std::numeric_limits<double>::quiet_NaN();
  double sum = 0.0;
  const std::size_t start = tail_start(inv_beta.size());
  for (std::size_t i = start; i < inv_beta.size(); ++i) sum += inv_beta[i];
  return sum / static_cast<double>(inv_beta.size() - start);
}

double DiagnosticSeries::tail_deviation(double expected) const {
  double worst = 0.0;
  for (std::size_t i = tail_start(inv_beta.size()); i < inv_beta.size(); ++i) {
    worst = std::max(worst, std::abs(inv_beta[i] - expected));
  }
  return worst;
}

DiagnosticSeries beta_diagnostic(const ParametricSolution& ps) {
  const std::size_t n = ps.size();
  if (n < 5) throw ValidationError("the 1/beta diagnostic needs at least 5 nodes");
  const double h = ps.xi[1] - ps.xi[0];
  for (std::size_t i = 1; i < n; ++i) {
    if (std::abs((ps.xi[i] - ps.xi[i - 1]) - h) > 1e-9 * std::max(1.0, std::abs(h))) {
      throw ValidationError("the 1/beta diagnostic needs a uniform grid");
    }
  }
  const auto& x = ps.x();
  const auto& y = ps.y();
  // Differencing x itself loses every digit once x* - x nears machine
  // epsilon, so stored parameter rates are differenced when available.
  const bool have_rates = ps.rates.size() == ps.values.size() && ps.rates.at(0).size() == n &&
                          ps.rates.at(ps.primary).size() == n;
  DiagnosticSeries out;
  out.xi = ps.xi;
  out.inv_beta.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double yp = have_rates ? ps.rates[ps.primary][i] : d1(y, i, h);
    if (yp == 0.0) {
      if (i > 0 && i + 1 < n) throw NumericalError("y' vanishes at an interior node");
      out.inv_beta[i] = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    const double xp = have_rates ? ps.rates[0][i] : d1(x, i, h);
    const double ypp = have_rates ? d1(ps.rates[ps.primary], i, h) : d2(y, i, h);
    const double xpp = have_rates ? d1(ps.rates[0], i, h) : d2(x, i, h);
    out.inv_beta[i] = (y[i] / yp) * (ypp / yp - xpp / xp) - 1.0;
  }
  return out;
}

AsymptoticFit asymptotic_fit(const ParametricSolution& ps) {
  const auto& x = ps.x();
  const auto& y = ps.y();
  const std::size_t n = ps.size();
  if (n < 5) throw NumericalError("tail too short for an asymptotic fit");
  const double y_last = std::abs(y.back());
  std::optional<std::size_t> start;
  for (std::size_t i = n; i-- > 0;) {
    if (std::abs(y[i]) * 100.0 <= y_last) {
      start = i;
      break;
    }
  }
  if (!start || n - *start < 5) throw NumericalError("tail too short: y spans less than two decades");
  const std::size_t s0 = *start;
  const double x_last = x.back();

  struct LineFit {
    double intercept, slope, rms;
  };
  auto fit_at = [&](double x_star) {
    double su = 0, sv = 0, suu = 0, suv = 0;
    const double m = static_cast<double>(n - s0);
    for (std::size_t i = s0; i < n; ++i) {
      const double u = std::log(x_star - x[i]);
      const double v = std::log(std::abs(y[i]));
      su += u;
      sv += v;
      suu += u * u;
      suv += u * v;
    }
    const double slope = (m * suv - su * sv) / (m * suu - su * su);
    const double intercept = (sv - slope * su) / m;
    double ss = 0;
    for (std::size_t i = s0; i < n; ++i) {
      const double r = std::log(std::abs(y[i])) - (intercept + slope * std::log(x_star - x[i]));
      ss += r * r;
    }
    return LineFit{intercept, slope, std::sqrt(ss / m)};
  };

  const double span = std::max(x_last - x[s0], 1e-300);
  const double lo = std::log(1e-12 * std::max(1.0, std::abs(x_last)));
  const double hi = std::log(10.0 * span);
  auto objective = [&](double s) {
    const double r = fit_at(x_last + std::exp(s)).rms;
    return std::isfinite(r) ? r : std::numeric_limits<double>::max();
  };
  const auto best = boost::math::tools::brent_find_minima(objective, lo, hi, 50);
  const double x_star = x_last + std::exp(best.first);
  const LineFit line = fit_at(x_star);
  const double beta = -line.slope;
  if (!(beta > 0.0)) throw NumericalError("no power-law growth in the tail");
  return AsymptoticFit{std::exp(line.intercept), beta, x_star, line.rms};
}

}  // namespace blowup
