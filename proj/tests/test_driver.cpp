#include <cmath>
#include <numbers>

#include "blowup/bench.hpp"
#include "blowup/driver.hpp"
#include "blowup/error.hpp"
#include "blowup/problems.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace blowup;

namespace {

TransformSpec spec_of(Method m) {
  TransformSpec s;
  s.method = m;
  return s;
}

// Largest relative error (percent) over every state column at nodes whose
// primary value stays within `cap`.
double max_error_pct_all(const RegistryEntry& e, const SolveReport& r, double cap) {
  const auto names = e.problem.state_names();
  double worst = 0.0;
  for (std::size_t i = 0; i < r.ps.size(); ++i) {
    if (std::abs(r.ps.y()[i]) > cap) continue;
    const auto exact = exact_eval(e.exact, r.ps.x()[i]);
    for (std::size_t k = 0; k < names.size(); ++k) {
      const double got = r.ps.values[r.ps.column(names[k])][i];
      worst = std::max(worst, std::abs(got - exact[k]) / std::abs(exact[k]) * 100.0);
    }
  }
  return worst;
}

}  // namespace

TEST_CASE("solve error examples") {
  StopPolicy stop;
  const RegistryEntry p1 = registry_get("power1");
  CHECK(measure_error(p1, spec_of(Method::ExpTypeFOverY), 0.2, stop) <= 0.005);
  CHECK(measure_error(p1, spec_of(Method::Differential), 0.2, stop) <= 0.02);
  const RegistryEntry o2 = registry_get("ode2-power");
  CHECK(measure_error(o2, spec_of(Method::ExpTypeTOverY), 0.4, stop) <= 0.1);
}

TEST_CASE("system3 growth transform: accurate at small h, guard trip at h = 0.1") {
  const RegistryEntry e = registry_get("system3");
  const TransformSpec spec = spec_of(Method::SystemGrowthComponent);
  StopPolicy stop;
  stop.lambda_target = 100.0;
  const SolveReport fine = solve(e.problem, spec, stop, 0.005);
  CHECK(fine.stop_reason == StopReason::LambdaTarget);
  CHECK(fine.growing_component == 2);
  CHECK(max_error_pct_all(e, fine, 100.0) <= 0.05);
  CHECK(std::abs(fine.x_star_extrapolated - 1.0) <= 1e-4);

  // Unstable mode with growth rate 2 + sqrt(2) in the transformed variable.
  const SolveReport coarse = solve(e.problem, spec, stop, 0.1);
  CHECK(coarse.stop_reason != StopReason::LambdaTarget);
}

TEST_CASE("stopping rule and report fields") {
  const Problem p = registry_get("power1").problem;
  StopPolicy stop;
  stop.lambda_target = 50.0;
  const SolveReport r = solve(p, spec_of(Method::ExpTypeFOverY), stop, 0.1);
  CHECK(r.stop_reason == StopReason::LambdaTarget);
  CHECK(r.ps.lambda_m.back() >= 50.0);
  CHECK(r.ps.lambda_m[r.ps.size() - 2] < 50.0);
  CHECK(r.x_star_estimate == r.ps.x().back());
  CHECK(r.x_star_extrapolated >= r.x_star_estimate);
  CHECK(r.diagnostics.has_value());
  CHECK(r.h == 0.1);

  StopPolicy capped;
  capped.hard_xi_max = 1.0;
  const SolveReport h = solve(p, spec_of(Method::ExpTypeFOverY), capped, 0.1);
  CHECK(h.stop_reason == StopReason::HardXiMax);
  CHECK(h.ps.xi.back() <= 1.0 + 1e-12);

  StopPolicy overflow;
  overflow.lambda_target = 1e30;
  const SolveReport o = solve(p, spec_of(Method::ExpTypeFOverY), overflow, 0.5);
  CHECK(o.stop_reason == StopReason::OverflowCap);

  StopPolicy bad;
  bad.lambda_target = 0.0;
  CHECK_THROWS_AS((void)solve(p, spec_of(Method::ExpTypeFOverY), bad, 0.1), ValidationError);
  CHECK_THROWS_AS((void)solve(p, spec_of(Method::ExpTypeFOverY), stop, 0.0), ValidationError);
  CHECK_THROWS_AS((void)solve(p, spec_of(Method::ExpTypeTOverY), stop, 0.1), ValidationError);
}

TEST_CASE("Lambda is nondecreasing over the last quarter of exp-type runs") {
  struct Case {
    const char* name;
    Method m;
  };
  for (const Case& c : {Case{"power1", Method::ExpTypeFOverY}, Case{"sing-pole1", Method::ExpTypeFOverY},
                        Case{"ode2-power", Method::ExpTypeTOverY}, Case{"ode3-power", Method::ExpTypeWOverT},
                        Case{"exp1", Method::ModifiedDifferential}}) {
    const SolveReport r = solve(registry_get(c.name).problem, spec_of(c.m), StopPolicy{}, 0.05);
    const auto& lam = r.ps.lambda_m;
    for (std::size_t i = lam.size() * 3 / 4 + 1; i < lam.size(); ++i) CHECK_MESSAGE(lam[i] >= lam[i - 1], c.name);
  }
}

TEST_CASE("extrapolation consistency when the target doubles") {
  const Problem p = registry_get("power1").problem;
  TransformSpec spec = spec_of(Method::ExpTypeFOverY);
  spec.closed_form = false;
  for (double target : {25.0, 50.0, 100.0}) {
    StopPolicy a;
    a.lambda_target = target;
    StopPolicy b;
    b.lambda_target = 2.0 * target;
    const SolveReport ra = solve(p, spec, a, 0.1);
    const SolveReport rb = solve(p, spec, b, 0.1);
    CHECK(std::abs(rb.x_star_extrapolated - ra.x_star_extrapolated) <
          std::abs(ra.x_star_extrapolated - ra.x_star_estimate));
  }
}

TEST_CASE("tail extrapolation models") {
  std::vector<double> xi;
  std::vector<double> xe;
  std::vector<double> xp;
  for (int i = 0; i <= 40; ++i) {
    const double s = 0.25 * i;
    xi.push_back(s);
    xe.push_back(1.0 - 0.7 * std::exp(-1.3 * s));
    xp.push_back(2.0 - 1.0 / std::pow(s + 1.0, 1.5));
  }
  CHECK(extrapolate_x_star(xi, xe, 0.0, TailModel::Exponential) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(extrapolate_x_star(xi, xe, 0.0, TailModel::Auto) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(extrapolate_x_star(xi, xp, 0.0, TailModel::PowerLaw) == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(extrapolate_x_star(xi, xp, 0.0, TailModel::Auto) == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(extrapolate_x_star(xi, xp, 0.0, TailModel::Exponential) >= xp.back());
}

TEST_CASE("two-stage solve on the decreasing Riccati problem") {
  const RegistryEntry e = registry_get("riccati-decreasing");
  StopPolicy stop;
  stop.lambda_target = 100.0;
  const SolveReport r = solve_two_stage(e.problem, stop, 0.01);
  REQUIRE(r.stage_boundary.has_value());
  CHECK(r.stop_reason == StopReason::LambdaTarget);
  CHECK(std::abs(r.x_star_extrapolated - oracle::kRiccatiDecreasingXStar) <= 1e-3);
  for (std::size_t i = 0; i < r.ps.size(); ++i) {
    const double x = r.ps.x()[i];
    const double exact = 2.0 / (x * x - 4.0 * x + 2.0);
    CHECK(oracle::rel_err(r.ps.y()[i], exact) <= 1e-3);
  }
  // Stage switch happens where min(|y/y0|, |f/y|) first reaches 30.
  const double ym = r.stage_boundary->y_m;
  const double xm = r.stage_boundary->x_m;
  CHECK(std::min(ym, (2.0 - xm) * ym) >= 30.0);
  // Continuity across the boundary: the stitched nodes straddle (x_m, y_m).
  bool found = false;
  for (std::size_t i = 0; i < r.ps.size(); ++i) {
    if (r.ps.x()[i] == xm) {
      CHECK(r.ps.y()[i] == ym);
      found = true;
    }
  }
  CHECK(found);
}

TEST_CASE("two-stage solve without blow-up returns the stage-1 run") {
  const double b = 1.38;
  const RegistryEntry e = registry_get("zero-rhs", {{"a", 1.0}, {"b", b}});
  TwoStageOptions opts;
  opts.x_limit = 4.0;
  const SolveReport r = solve_two_stage(e.problem, StopPolicy{}, 0.001, opts);
  CHECK_FALSE(r.stage_boundary.has_value());
  CHECK(r.stop_reason == StopReason::HardXiMax);
  std::size_t arg = 0;
  for (std::size_t i = 0; i < r.ps.size(); ++i) {
    if (r.ps.y()[i] > r.ps.y()[arg]) arg = i;
  }
  CHECK(std::abs(r.ps.x()[arg] - b) <= 0.001);
  CHECK(r.ps.y()[arg] == doctest::Approx(1.0 / (1.0 - b * b / 2.0)).epsilon(1e-6));
}

TEST_CASE("two-stage solve on power1 matches the plain solve after the trigger") {
  const Problem p = registry_get("power1").problem;
  StopPolicy stop;
  stop.lambda_target = 100.0;
  const SolveReport two = solve_two_stage(p, stop, 0.01);
  REQUIRE(two.stage_boundary.has_value());
  CHECK(std::abs(two.x_star_extrapolated - 1.0) <= 1e-3);
  const SolveReport one = solve(p, spec_of(Method::ExpTypeFOverY), stop, 0.01);
  CHECK(two.x_star_extrapolated == doctest::Approx(one.x_star_extrapolated).epsilon(1e-6));
}

TEST_CASE("naive integration demonstration") {
  const Problem p = registry_get("power1").problem;
  const NaiveResult rk4 = naive_failure_demo(p, Integrator::RK4, 0.01);
  const NaiveResult euler = naive_failure_demo(p, Integrator::Euler, 0.01);
  const NaiveResult mid = naive_failure_demo(p, Integrator::Midpoint, 0.01);
  CHECK(rk4.trajectory.halt_reason == HaltReason::NonFinite);
  CHECK(euler.trajectory.halt_reason == HaltReason::NonFinite);
  REQUIRE(rk4.x_halt);
  REQUIRE(euler.x_halt);
  REQUIRE(mid.x_halt);
  CHECK(*rk4.x_halt > 1.0);
  CHECK(*rk4.x_halt < *mid.x_halt);
  CHECK(*mid.x_halt < *euler.x_halt);

  const Problem lin = make_problem(ProblemKind::FirstOrder, {"y"}, 0.0, {1.0});
  for (Integrator m : {Integrator::Euler, Integrator::Midpoint, Integrator::RK4}) {
    const NaiveResult r = naive_failure_demo(lin, m, 0.01, 5.0);
    CHECK(r.trajectory.halt_reason == HaltReason::ReachedEnd);
    CHECK_FALSE(r.x_halt.has_value());
  }
  CHECK_THROWS_AS((void)naive_failure_demo(registry_get("system3").problem, Integrator::RK4, 0.01),
                  ValidationError);
}

TEST_CASE("critical values for every closed-form registry problem") {
  struct Case {
    const char* name;
    Method m;
    double h;
  };
  StopPolicy stop;
  stop.lambda_target = 100.0;
  for (const Case& c : {Case{"power1", Method::ExpTypeFOverY, 0.1}, Case{"exp1", Method::ModifiedDifferential, 0.1},
                        Case{"sing-pole1", Method::ExpTypeFOverY, 0.1}, Case{"zero-rhs", Method::ExpTypeFOverY, 0.1},
                        Case{"ode2-power", Method::ExpTypeTOverY, 0.1}, Case{"ode2-exp", Method::ExpTypeFOverT, 0.1},
                        Case{"ode3-power", Method::ExpTypeWOverT, 0.1}}) {
    const RegistryEntry e = registry_get(c.name);
    const SolveReport r = solve(e.problem, spec_of(c.m), stop, c.h);
    CHECK_MESSAGE(oracle::rel_err(r.x_star_extrapolated, *e.exact.x_star()) <= 1e-3, c.name);
  }
}
