#include "blowup/transforms.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <memory>
#include <set>

#include "blowup/error.hpp"
#include "blowup/estimates.hpp"

namespace blowup {

namespace {

struct MethodName {
  Method method;
  const char* name;
};

constexpr std::array<MethodName, 13> kMethodNames{{
    {Method::Differential, "differential"},
    {Method::ModifiedDifferential, "modified-differential"},
    {Method::NonLocal, "nonlocal"},
    {Method::DifferentialConstraint, "constraint"},
    {Method::Hodograph, "hodograph"},
    {Method::ArcLength, "arc-length"},
    {Method::OnePlusAbs, "one-plus-abs"},
    {Method::ExpTypeFOverY, "exp-f-over-y"},
    {Method::ExpTypeTOverY, "exp-t-over-y"},
    {Method::ExpTypeFOverT, "exp-f-over-t"},
    {Method::ExpTypeWOverT, "exp-w-over-t"},
    {Method::ExpTypeFOverW, "exp-f-over-w"},
    {Method::SystemGrowthComponent, "growth"},
}};

}  // namespace

const char* to_string(Method m) {
  for (const auto& entry : kMethodNames) {
    if (entry.method == m) return entry.name;
  }
  return "?";
}

Method method_from_string(std::string_view name) {
  if (name == "growth-auto") return Method::SystemGrowthComponent;
  for (const auto& entry : kMethodNames) {
    if (name == entry.name) return entry.method;
  }
  throw ValidationError("unknown method '" + std::string(name) + "'");
}

namespace {

constexpr std::size_t kMaxDim = 32;
constexpr double kGuard = 1e-14;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// The original problem as u' = F(x, u).
struct Model {
  bool system = false;
  std::size_t n = 0;
  std::vector<std::string> names;
  std::vector<BoundExpr> f;

  explicit Model(const Problem& p) : system(p.is_system()), n(p.dimension()), names(p.state_names()) {
    if (n + 1 > kMaxDim) throw ValidationError("problem dimension too large");
    std::vector<std::string> slots{"x"};
    slots.insert(slots.end(), names.begin(), names.end());
    for (const auto& e : p.rhs) f.emplace_back(e, slots, p.params);
  }

  // xu = [x, u0..u_{n-1}]
  void rhs(const double* xu, double* F) const {
    const std::span<const double> vars(xu, n + 1);
    if (system) {
      for (std::size_t m = 0; m < n; ++m) F[m] = f[m](vars);
      return;
    }
    for (std::size_t k = 0; k + 1 < n; ++k) F[k] = xu[k + 2];
    F[n - 1] = f[0](vars);
  }
};

using ModelPtr = std::shared_ptr<const Model>;

// g(xi, xu, F); NaN propagates as non-finite.
using GaugeFn = std::function<double(double, const double*, const double*)>;

GaugeFn make_expression_gauge(const ModelPtr& model, const Expr& g, const ParamMap& params) {
  std::vector<std::string> slots{"x"};
  slots.insert(slots.end(), model->names.begin(), model->names.end());
  slots.push_back("xi");
  if (model->system) {
    for (std::size_t m = 0; m < model->n; ++m) slots.push_back("f" + std::to_string(m + 1));
  } else {
    slots.push_back("f");
  }
  const bool first_order = !model->system && model->n == 1;
  const bool partials = first_order && (g.depends_on("fx") || g.depends_on("fy"));
  if (first_order) {
    slots.push_back("fx");
    slots.push_back("fy");
  }
  for (const auto& v : g.free_vars()) {
    if (std::find(slots.begin(), slots.end(), v) == slots.end()) {
      throw ValidationError("gauge uses unknown identifier '" + v + "'");
    }
  }
  auto bound = std::make_shared<BoundExpr>(g, slots, params);
  const std::size_t width = slots.size();
  return [model, bound, width, partials, first_order](double xi, const double* xu, const double* F) {
    std::array<double, 2 * kMaxDim + 4> vars{};
    const std::size_t n = model->n;
    std::copy(xu, xu + n + 1, vars.begin());
    vars[n + 1] = xi;
    if (model->system) {
      std::copy(F, F + n, vars.begin() + static_cast<std::ptrdiff_t>(n + 2));
    } else {
      vars[n + 2] = F[n - 1];
    }
    if (first_order) {
      if (partials) {
        const std::array<std::size_t, 2> seeds{0, 1};
        const Dual d = model->f[0].eval_dual(std::span<const double>(xu, 2), seeds);
        vars[n + 3] = d.d[0];
        vars[n + 4] = d.d[1];
      }
    }
    return (*bound)(std::span<const double>(vars.data(), width));
  };
}

bool positive(double g) { return g > kGuard; }

std::size_t scalar_order(const Problem& p) { return p.is_system() ? 0 : p.dimension(); }

void require(bool ok, const std::string& msg) {
  if (!ok) throw ValidationError(msg);
}

TailModel tail_for(Method m) {
  switch (m) {
    case Method::Differential:
    case Method::Hodograph:
    case Method::ArcLength:
    case Method::OnePlusAbs:
      return TailModel::PowerLaw;
    case Method::NonLocal:
    case Method::DifferentialConstraint:
      return TailModel::Auto;
    default:
      return TailModel::Exponential;
  }
}

// ---------------------------------------------------------------------------
// Gauge transforms: state = [x, u without the closed slot], parameter xi.
// A log slot is stored as ln|u| with the sign of its initial value.

TransformedProblem build_gauge(const Problem& p, const ModelPtr& model, GaugeFn gauge,
                               std::optional<std::size_t> closed_slot, double tau0,
                               std::optional<std::size_t> log_slot = std::nullopt) {
  const std::size_t n = model->n;
  TransformedProblem tp;
  tp.tau0 = tau0;
  tp.parameter = "xi";
  tp.columns.push_back("x");
  tp.layout.push_back("x");
  tp.state0.push_back(p.x0);
  for (std::size_t k = 0; k < n; ++k) {
    tp.columns.push_back(model->names[k]);
    if (closed_slot && *closed_slot == k) continue;
    tp.layout.push_back(model->names[k]);
    if (log_slot && *log_slot == k) {
      require(p.initial[k] != 0.0, "the slot '" + model->names[k] + "' starts at zero");
      tp.state0.push_back(std::log(std::abs(p.initial[k])));
    } else {
      tp.state0.push_back(p.initial[k]);
    }
  }

  const double u0 = closed_slot ? p.initial[*closed_slot] : 0.0;
  const double log_sign = log_slot ? std::copysign(1.0, p.initial[*log_slot]) : 1.0;
  auto assemble = [model, closed_slot, log_slot, log_sign, u0, tau0](double tau, std::span<const double> s,
                                                                      double* xu) {
    xu[0] = s[0];
    std::size_t pos = 1;
    for (std::size_t k = 0; k < model->n; ++k) {
      if (closed_slot && *closed_slot == k) {
        xu[k + 1] = u0 * std::exp(tau - tau0);
      } else if (log_slot && *log_slot == k) {
        xu[k + 1] = log_sign * std::exp(s[pos++]);
      } else {
        xu[k + 1] = s[pos++];
      }
    }
  };

  tp.field.dim = tp.layout.size();
  tp.field.eval = [model, gauge, closed_slot, log_slot, assemble](std::span<const double> s, double tau,
                                                                  std::span<double> out) {
    std::array<double, kMaxDim> xu{};
    std::array<double, kMaxDim> F{};
    assemble(tau, s, xu.data());
    model->rhs(xu.data(), F.data());
    const double g = gauge(tau, xu.data(), F.data());
    if (!std::isfinite(g)) {
      std::fill(out.begin(), out.end(), kNaN);
      return true;
    }
    if (!positive(g)) return false;
    out[0] = 1.0 / g;
    std::size_t pos = 1;
    for (std::size_t k = 0; k < model->n; ++k) {
      if (closed_slot && *closed_slot == k) continue;
      out[pos++] = (log_slot && *log_slot == k) ? F[k] / (g * xu[k + 1]) : F[k] / g;
    }
    return true;
  };

  tp.decode_node = [model, gauge, assemble](double tau, std::span<const double> s, std::span<double> values,
                                            std::span<double> rates) {
    std::array<double, kMaxDim> F{};
    assemble(tau, s, values.data());
    model->rhs(values.data(), F.data());
    const double g = gauge(tau, values.data(), F.data());
    if (!std::isfinite(g) || !positive(g)) {
      std::fill(rates.begin(), rates.end(), kNaN);
      return false;
    }
    rates[0] = 1.0 / g;
    for (std::size_t k = 0; k < model->n; ++k) rates[k + 1] = F[k] / g;
    return true;
  };
  return tp;
}

GaugeFn ratio_gauge(std::size_t j) {
  return [j](double, const double* xu, const double* F) { return F[j] / xu[j + 1]; };
}

GaugeFn power_gauge(std::size_t n, std::vector<double> c, double s) {
  return [n, c = std::move(c), s](double, const double*, const double* F) {
    double acc = c[0];
    if (s == 2.0) {
      for (std::size_t m = 0; m < n; ++m) acc += c[m + 1] * F[m] * F[m];
      return std::sqrt(acc);
    }
    if (s == 1.0) {
      for (std::size_t m = 0; m < n; ++m) acc += c[m + 1] * std::abs(F[m]);
      return acc;
    }
    for (std::size_t m = 0; m < n; ++m) acc += c[m + 1] * std::pow(std::abs(F[m]), s);
    return std::pow(acc, 1.0 / s);
  };
}

// ---------------------------------------------------------------------------
// Differential variable t = y' as the parameter (first and second order).

TransformedProblem build_differential(const Problem& p, const ModelPtr& model, bool modified, double lambda) {
  const std::size_t order = model->n;
  require(!model->system && (order == 1 || order == 2),
          "the differential transform applies to first- and second-order scalar problems");

  std::array<double, 3> xu0{p.x0, p.initial[0], order == 2 ? p.initial[1] : 0.0};
  std::array<double, 3> F0{};
  model->rhs(xu0.data(), F0.data());
  const double t0 = order == 1 ? F0[0] : p.initial[1];
  require(std::isfinite(t0), "initial derivative is not finite");
  if (modified) {
    require(lambda > 0.0, "lambda must be positive");
    require(t0 > 0.0, "the modified differential transform needs a positive initial derivative");
  }

  TransformedProblem tp;
  tp.parameter = modified ? "tau" : "t";
  tp.tau0 = modified ? 0.0 : t0;
  tp.layout = {"x", "y"};
  tp.columns = {"x", "y", "t"};
  tp.state0 = {p.x0, p.initial[0]};

  // rates of (x, y) per unit parameter, given the denominator D.
  auto core = [model, order, modified, lambda, t0](double tau, std::span<const double> s, double& t,
                                                   double& rx, double& ry) -> int {
    t = modified ? t0 * std::exp(lambda * tau) : tau;
    double D;
    if (order == 1) {
      const std::array<double, 2> xu{s[0], s[1]};
      const std::array<std::size_t, 2> seeds{0, 1};
      const Dual d = model->f[0].eval_dual(xu, seeds);
      D = d.d[0] + t * d.d[1];
    } else {
      const std::array<double, 3> xu{s[0], s[1], t};
      D = model->f[0](xu);
    }
    if (!std::isfinite(D)) return -1;
    if (!positive(D)) return 0;
    const double scale = modified ? lambda * t : 1.0;
    rx = scale / D;
    ry = scale * t / D;
    return 1;
  };

  tp.field.dim = 2;
  tp.field.eval = [core](std::span<const double> s, double tau, std::span<double> out) {
    double t, rx, ry;
    const int r = core(tau, s, t, rx, ry);
    if (r < 0) {
      out[0] = out[1] = kNaN;
      return true;
    }
    if (r == 0) return false;
    out[0] = rx;
    out[1] = ry;
    return true;
  };
  tp.decode_node = [core, modified, lambda](double tau, std::span<const double> s, std::span<double> values,
                                            std::span<double> rates) {
    double t, rx, ry;
    const int r = core(tau, s, t, rx, ry);
    values[0] = s[0];
    values[1] = s[1];
    values[2] = t;
    if (r <= 0) {
      std::fill(rates.begin(), rates.end(), kNaN);
      return false;
    }
    rates[0] = rx;
    rates[1] = ry;
    rates[2] = modified ? lambda * t : 1.0;
    return true;
  };
  return tp;
}

bool initial_ok(const TransformedProblem& tp) {
  std::vector<double> out(tp.field.dim);
  if (!tp.field.eval(tp.state0, tp.tau0, out)) return false;
  return std::all_of(out.begin(), out.end(), [](double v) { return std::isfinite(v); }) && out[0] > 0.0;
}

}  // namespace

std::size_t detect_growing_component(const Problem& sys) {
  require(sys.is_system(), "growing component detection needs a system");
  try {
    return exponent_solve(sys).growing_index;
  } catch (const std::invalid_argument&) {
  } catch (const NumericalError&) {
  }
  auto model = std::make_shared<const Model>(sys);
  VectorField fld;
  fld.dim = sys.dimension();
  fld.eval = [model](std::span<const double> s, double x, std::span<double> out) {
    std::array<double, kMaxDim> xu{};
    xu[0] = x;
    std::copy(s.begin(), s.end(), xu.begin() + 1);
    model->rhs(xu.data(), out.data());
    return true;
  };
  const Trajectory tr = rk4_fixed(fld, sys.initial, sys.x0, 0.01, 50);
  const auto last = tr.back();
  std::array<double, kMaxDim> xu{};
  std::array<double, kMaxDim> F{};
  xu[0] = tr.tau(tr.size() - 1);
  std::copy(last.begin(), last.end(), xu.begin() + 1);
  model->rhs(xu.data(), F.data());
  std::size_t best = 0;
  double best_rate = -1.0;
  for (std::size_t k = 0; k < sys.dimension(); ++k) {
    if (last[k] == 0.0) continue;
    const double rate = std::abs(F[k] / last[k]);
    if (std::isfinite(rate) && rate > best_rate) {
      best_rate = rate;
      best = k;
    }
  }
  return best + 1;
}

TransformedProblem build(const Problem& p, const TransformSpec& spec) {
  auto model = std::make_shared<const Model>(p);
  const std::size_t order = scalar_order(p);
  const std::size_t n = model->n;
  std::set<std::string> param_names;
  for (const auto& [k, v] : p.params) param_names.insert(k);

  std::size_t growing = 0;
  if (p.is_system()) {
    if (spec.k) {
      require(*spec.k >= 1 && *spec.k <= n, "growing component index out of range");
      growing = *spec.k;
    } else {
      growing = detect_growing_component(p);
    }
  }

  TransformedProblem tp;
  switch (spec.method) {
    case Method::Differential:
    case Method::ModifiedDifferential:
      tp = build_differential(p, model, spec.method == Method::ModifiedDifferential, spec.lambda);
      break;

    case Method::NonLocal:
    case Method::DifferentialConstraint: {
      require(spec.g.has_value(), std::string(to_string(spec.method)) + " needs a gauge expression g");
      const Expr g = parse(*spec.g, param_names);
      const bool constraint = spec.method == Method::DifferentialConstraint;
      if (!constraint && g.depends_on("xi")) {
        throw ValidationError("a non-local gauge may not depend on xi; use the constraint method");
      }
      tp = build_gauge(p, model, make_expression_gauge(model, g, p.params), std::nullopt,
                       constraint ? spec.xi0 : 0.0);
      break;
    }

    case Method::Hodograph:
      require(!p.is_system(), "the hodograph transform applies to scalar problems");
      tp = build_gauge(p, model, [](double, const double*, const double* F) { return F[0]; }, std::nullopt, 0.0);
      break;

    case Method::ArcLength:
    case Method::OnePlusAbs: {
      const bool one_plus = spec.method == Method::OnePlusAbs;
      const double s = spec.s.value_or(one_plus ? 1.0 : 2.0);
      std::vector<double> c = spec.c.empty() ? std::vector<double>(n + 1, 1.0) : spec.c;
      require(s > 0.0, "s must be positive");
      require(c.size() == n + 1, "expected " + std::to_string(n + 1) + " c-coefficients");
      require(std::all_of(c.begin(), c.end(), [](double v) { return v >= 0.0; }) &&
                  std::any_of(c.begin(), c.end(), [](double v) { return v > 0.0; }),
              "c-coefficients must be non-negative with at least one positive");
      tp = build_gauge(p, model, power_gauge(n, std::move(c), s), std::nullopt, 0.0);
      break;
    }

    case Method::ExpTypeFOverY:
    case Method::ExpTypeTOverY:
    case Method::ExpTypeFOverT:
    case Method::ExpTypeWOverT:
    case Method::ExpTypeFOverW:
    case Method::SystemGrowthComponent: {
      std::size_t j = 0;
      switch (spec.method) {
        case Method::ExpTypeFOverY:
          require(order == 1, "g = f/y applies to first-order problems");
          j = 0;
          break;
        case Method::ExpTypeTOverY:
          require(order >= 2, "g = t/y applies to scalar problems of order >= 2");
          j = 0;
          break;
        case Method::ExpTypeFOverT:
          require(order == 2, "g = f/t applies to second-order problems");
          j = 1;
          break;
        case Method::ExpTypeWOverT:
          require(order == 3, "g = w/t applies to third-order problems");
          j = 1;
          break;
        case Method::ExpTypeFOverW:
          require(order == 3, "g = f/w applies to third-order problems");
          j = 2;
          break;
        default:
          require(p.is_system(), "the growth-component transform applies to systems");
          j = growing - 1;
          break;
      }
      require(p.initial[j] != 0.0, "the exponential slot '" + model->names[j] + "' starts at zero");
      std::optional<std::size_t> closed;
      std::optional<std::size_t> log_slot;
      if (spec.closed_form) {
        closed = j;
        // A numerator that is itself a state slot keeps the sign of the
        // closed slot while g > 0 and grows exponentially too.
        if (!p.is_system() && j + 1 < n) log_slot = j + 1;
      }
      tp = build_gauge(p, model, ratio_gauge(j), closed, 0.0, log_slot);
      break;
    }
  }

  tp.method = spec.method;
  tp.tail = tail_for(spec.method);
  tp.growing_component = growing;
  tp.primary = p.is_system() ? growing : 1;
  if (!initial_ok(tp)) {
    throw ValidationError(std::string(to_string(spec.method)) +
                          ": gauge must be positive and finite at the initial point");
  }
  return tp;
}

ParametricSolution decode(const TransformedProblem& tp, const Trajectory& traj) {
  if (traj.dim != tp.layout.size()) throw ValidationError("trajectory layout does not match the transform");
  ParametricSolution ps;
  ps.parameter = tp.parameter;
  ps.columns = tp.columns;
  ps.primary = tp.primary;
  const std::size_t nc = tp.columns.size();
  const std::size_t nodes = traj.size();
  ps.values.assign(nc, std::vector<double>(nodes));
  ps.rates.assign(nc, std::vector<double>(nodes));
  ps.xi.resize(nodes);
  ps.lambda_m.resize(nodes);
  std::vector<double> values(nc);
  std::vector<double> rates(nc);
  for (std::size_t i = 0; i < nodes; ++i) {
    const double tau = traj.tau(i);
    tp.decode_node(tau, traj.row(i), values, rates);
    ps.xi[i] = tau;
    for (std::size_t c = 0; c < nc; ++c) {
      ps.values[c][i] = values[c];
      ps.rates[c][i] = rates[c];
    }
    ps.lambda_m[i] = lambda_m(values[tp.primary], rates[tp.primary] / rates[0]);
  }
  ps.x_star_estimate = nodes ? ps.values[0].back() : kNaN;
  return ps;
}

}  // namespace blowup
