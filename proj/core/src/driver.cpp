#include "blowup/driver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "blowup/error.hpp"

namespace blowup {

const char* to_string(StopReason r) {
  switch (r) {
    case StopReason::LambdaTarget:
      return "lambda-target";
    case StopReason::OverflowCap:
      return "overflow-cap";
    case StopReason::HardXiMax:
      return "hard-xi-max";
    case StopReason::NonFinite:
      return "non-finite";
    case StopReason::Guard:
      return "guard";
  }
  return "?";
}

namespace {

double aitken(const std::vector<double>& x) {
  const std::size_t n = x.size();
  if (n < 3) return x.back();
  const double d1 = x[n - 2] - x[n - 3];
  const double d2 = x[n - 1] - x[n - 2];
  if (!(d1 > 0.0 && d2 > 0.0 && d2 < d1)) return x.back();
  const double r = d2 / d1;
  return x.back() + d2 * r / (1.0 - r);
}

std::size_t nearest(const std::vector<double>& sigma, double target) {
  auto it = std::lower_bound(sigma.begin(), sigma.end(), target);
  if (it == sigma.end()) return sigma.size() - 1;
  const auto i = static_cast<std::size_t>(it - sigma.begin());
  if (i > 0 && target - sigma[i - 1] < sigma[i] - target) return i - 1;
  return i;
}

double power_law(const std::vector<double>& xi, const std::vector<double>& x, double xi0) {
  const std::size_t n = x.size();
  if (n < 3) return x.back();
  std::vector<double> sigma(n);
  for (std::size_t i = 0; i < n; ++i) sigma[i] = xi[i] - xi0 + 1.0;
  const std::size_t c = n - 1;
  const std::size_t b = nearest(sigma, sigma[c] / 2.0);
  const std::size_t a = nearest(sigma, sigma[c] / 4.0);
  if (!(a < b && b < c) || !(sigma[a] > 0.0)) return x.back();
  const double observed = (x[c] - x[b]) / (x[b] - x[a]);
  if (!(observed > 0.0)) return x.back();
  auto ratio = [&](double q) {
    const double pa = std::pow(sigma[a], -q);
    const double pb = std::pow(sigma[b], -q);
    const double pc = std::pow(sigma[c], -q);
    return (pb - pc) / (pa - pb);
  };
  double lo = 1e-6;
  double hi = 50.0;
  // ratio(q) decreases in q.
  if (!(observed < ratio(lo) && observed > ratio(hi))) return x.back();
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (ratio(mid) > observed) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const double q = 0.5 * (lo + hi);
  const double C = (x[c] - x[b]) / (std::pow(sigma[b], -q) - std::pow(sigma[c], -q));
  return x[c] + C * std::pow(sigma[c], -q);
}

}  // namespace

double extrapolate_x_star(const std::vector<double>& xi, const std::vector<double>& x, double xi0, TailModel model) {
  if (x.empty()) return std::numeric_limits<double>::quiet_NaN();
  double estimate = x.back();
  switch (model) {
    case TailModel::Exponential:
      estimate = aitken(x);
      break;
    case TailModel::PowerLaw:
      estimate = power_law(xi, x, xi0);
      break;
    case TailModel::Auto: {
      const std::size_t n = x.size();
      if (n < 4) {
        estimate = aitken(x);
        break;
      }
      const double r1 = (x[n - 2] - x[n - 3]) / (x[n - 3] - x[n - 4]);
      const double r2 = (x[n - 1] - x[n - 2]) / (x[n - 2] - x[n - 3]);
      estimate = r2 <= r1 * (1.0 + 1e-6) ? aitken(x) : power_law(xi, x, xi0);
      break;
    }
  }
  if (!std::isfinite(estimate)) return x.back();
  return std::max(estimate, x.back());
}

SolveReport solve(const Problem& p, const TransformSpec& spec, const StopPolicy& stop, double h) {
  if (!(h > 0.0)) throw ValidationError("step size must be positive");
  if (!(stop.lambda_target > 0.0)) throw ValidationError("lambda target must be positive");
  const TransformedProblem tp = build(p, spec);

  std::size_t max_steps = stop.max_steps;
  if (std::isfinite(stop.hard_xi_max)) {
    max_steps = std::min<std::size_t>(max_steps, static_cast<std::size_t>(std::floor(stop.hard_xi_max / h + 1e-9)));
  }

  const std::size_t nc = tp.columns.size();
  std::vector<double> values(nc);
  std::vector<double> rates(nc);
  std::optional<StopReason> fired;
  auto guard = [&](std::span<const double> s, double tau) {
    tp.decode_node(tau, s, values, rates);
    for (double v : values) {
      if (std::abs(v) > stop.overflow_cap) {
        fired = StopReason::OverflowCap;
        return true;
      }
    }
    const double lam = lambda_m(values[tp.primary], rates[tp.primary] / rates[0]);
    if (lam >= stop.lambda_target) {
      fired = StopReason::LambdaTarget;
      return true;
    }
    return false;
  };
  const Trajectory traj = rk4_fixed(tp.field, tp.state0, tp.tau0, h, max_steps, guard);

  SolveReport report;
  switch (traj.halt_reason) {
    case HaltReason::GuardTriggered:
      report.stop_reason = fired.value_or(StopReason::Guard);
      break;
    case HaltReason::NonFinite:
      report.stop_reason = StopReason::NonFinite;
      break;
    case HaltReason::ReachedEnd:
      report.stop_reason = StopReason::HardXiMax;
      break;
  }
  report.ps = decode(tp, traj);
  report.x_star_estimate = report.ps.x_star_estimate;
  report.x_star_extrapolated = extrapolate_x_star(report.ps.xi, report.ps.x(), tp.tau0, tp.tail);
  try {
    report.diagnostics = beta_diagnostic(report.ps);
  } catch (const std::exception&) {
    report.diagnostics.reset();
  }
  report.growing_component = tp.growing_component;
  report.method = spec.method;
  report.h = h;
  return report;
}

namespace {

VectorField original_field(const Problem& p) {
  if (p.kind != ProblemKind::FirstOrder) throw ValidationError("this operation needs a first-order problem");
  static const std::vector<std::string> slots{"x", "y"};
  auto f = std::make_shared<BoundExpr>(p.rhs.front(), slots, p.params);
  VectorField fld;
  fld.dim = 1;
  fld.eval = [f](std::span<const double> s, double x, std::span<double> out) {
    const std::array<double, 2> v{x, s[0]};
    out[0] = (*f)(v);
    return true;
  };
  return fld;
}

std::size_t steps_to(double from, double to, double h) {
  return static_cast<std::size_t>(std::ceil((to - from) / h - 1e-9));
}

}  // namespace

SolveReport solve_two_stage(const Problem& p, const StopPolicy& stop, double h, const TwoStageOptions& opts) {
  if (!(h > 0.0)) throw ValidationError("step size must be positive");
  const VectorField fld = original_field(p);
  const double h1 = opts.stage1_h.value_or(std::min(h, kDefaultStage1Step));
  if (!(h1 > 0.0)) throw ValidationError("stage-1 step size must be positive");
  const double x_limit = opts.x_limit.value_or(p.x0 + 10.0);
  const double y0 = p.initial.front();
  const double scale = y0 != 0.0 ? std::abs(y0) : 1.0;

  std::array<double, 1> rate{};
  auto switch_value = [&](std::span<const double> s, double x) {
    fld.eval(s, x, rate);
    return std::min(std::abs(s[0]) / scale, std::abs(rate[0] / s[0]));
  };
  const Trajectory stage1 = rk4_fixed(fld, p.initial, p.x0, h1, steps_to(p.x0, x_limit, h1),
                                      [&](std::span<const double> s, double x) {
                                        return switch_value(s, x) >= opts.threshold;
                                      });

  auto stage1_columns = [&](ParametricSolution& ps, std::size_t count) {
    for (std::size_t i = 0; i < count; ++i) {
      const double x = stage1.tau(i);
      const double y = stage1.row(i)[0];
      fld.eval(stage1.row(i), x, rate);
      ps.xi.push_back(x);
      ps.values[0].push_back(x);
      ps.values[1].push_back(y);
      ps.rates[0].push_back(1.0);
      ps.rates[1].push_back(rate[0]);
      ps.lambda_m.push_back(lambda_m(y, rate[0]));
    }
  };

  SolveReport report;
  report.method = Method::ExpTypeFOverY;
  report.h = h;
  if (stage1.halt_reason != HaltReason::GuardTriggered) {
    ParametricSolution& ps = report.ps;
    ps.parameter = "x";
    ps.columns = {"x", "y"};
    ps.values.assign(2, {});
    ps.rates.assign(2, {});
    stage1_columns(ps, stage1.size());
    ps.x_star_estimate = ps.values[0].back();
    report.x_star_estimate = ps.x_star_estimate;
    report.x_star_extrapolated = ps.x_star_estimate;
    report.stop_reason = stage1.halt_reason == HaltReason::NonFinite ? StopReason::NonFinite : StopReason::HardXiMax;
    return report;
  }

  const std::size_t m = stage1.size() - 1;
  const double x_m = stage1.tau(m);
  const double y_m = stage1.row(m)[0];
  Problem tail = p;
  tail.x0 = x_m;
  tail.initial = {y_m};
  TransformSpec spec;
  spec.method = Method::ExpTypeFOverY;
  report = solve(tail, spec, stop, h);

  ParametricSolution stitched;
  stitched.parameter = "x|xi";
  stitched.columns = report.ps.columns;
  stitched.primary = report.ps.primary;
  stitched.values.assign(stitched.columns.size(), {});
  stitched.rates.assign(stitched.columns.size(), {});
  stage1_columns(stitched, m);
  const ParametricSolution& second = report.ps;
  for (std::size_t i = 0; i < second.size(); ++i) {
    stitched.xi.push_back(x_m + second.xi[i]);
    for (std::size_t c = 0; c < stitched.columns.size(); ++c) {
      stitched.values[c].push_back(second.values[c][i]);
      stitched.rates[c].push_back(second.rates[c][i]);
    }
    stitched.lambda_m.push_back(second.lambda_m[i]);
  }
  stitched.x_star_estimate = second.x_star_estimate;
  report.ps = std::move(stitched);
  report.stage_boundary = StageBoundary{x_m, y_m};
  return report;
}

NaiveResult naive_failure_demo(const Problem& p, Integrator method, double h, std::optional<double> x_max) {
  const VectorField fld = original_field(p);
  const double end = x_max.value_or(p.x0 + 10.0);
  NaiveResult result;
  result.trajectory = integrate_fixed(method, fld, p.initial, p.x0, h, steps_to(p.x0, end, h));
  if (result.trajectory.halt_reason == HaltReason::NonFinite) {
    result.x_halt = result.trajectory.tau(result.trajectory.size());
  }
  return result;
}

}  // namespace blowup
