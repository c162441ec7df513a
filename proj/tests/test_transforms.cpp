#include <cmath>
#include <random>

#include "blowup/error.hpp"
#include "blowup/problems.hpp"
#include "blowup/solution.hpp"
#include "blowup/stepper.hpp"
#include "blowup/transforms.hpp"
#include "doctest.h"

using namespace blowup;

namespace {

ParametricSolution run(const Problem& p, const TransformSpec& spec, double h, std::size_t steps) {
  const TransformedProblem tp = build(p, spec);
  const Trajectory tr = rk4_fixed(tp.field, tp.state0, tp.tau0, h, steps);
  REQUIRE(tr.halt_reason == HaltReason::ReachedEnd);
  return decode(tp, tr);
}

TransformSpec spec_of(Method m) {
  TransformSpec s;
  s.method = m;
  return s;
}

TransformSpec gauge_spec(Method m, const std::string& g) {
  TransformSpec s = spec_of(m);
  s.g = g;
  return s;
}

}  // namespace

TEST_CASE("method names round trip") {
  for (Method m : {Method::Differential, Method::ModifiedDifferential, Method::NonLocal,
                   Method::DifferentialConstraint, Method::Hodograph, Method::ArcLength, Method::OnePlusAbs,
                   Method::ExpTypeFOverY, Method::ExpTypeTOverY, Method::ExpTypeFOverT, Method::ExpTypeWOverT,
                   Method::ExpTypeFOverW, Method::SystemGrowthComponent}) {
    CHECK(method_from_string(to_string(m)) == m);
  }
  CHECK(method_from_string("growth-auto") == Method::SystemGrowthComponent);
  CHECK_THROWS_AS((void)method_from_string("bogus"), ValidationError);
}

TEST_CASE("differential transform of power1: initial data and field") {
  const double a = 2.0;
  const double b = 0.5;
  const double g = 3.0;
  const Problem p = registry_get("power1", {{"a", a}, {"b", b}, {"gamma", g}}).problem;
  const TransformedProblem tp = build(p, spec_of(Method::Differential));
  const double t0 = std::pow(a, g) * b;
  CHECK(tp.tau0 == doctest::Approx(t0));
  CHECK(tp.parameter == "t");
  REQUIRE(tp.state0.size() == 2);
  std::vector<double> out(2);
  const std::vector<double> s{0.1, 2.5};
  const double t = 7.0;
  REQUIRE(tp.field.eval(s, t, out));
  CHECK(out[0] == doctest::Approx(1.0 / (b * g * t * std::pow(2.5, g - 1.0))));
  CHECK(out[1] == doctest::Approx(1.0 / (b * g * std::pow(2.5, g - 1.0))));
}

TEST_CASE("exp-type f/y on power1 follows x = 1 - exp(-xi), y = exp(xi)") {
  const ParametricSolution ps = run(registry_get("power1").problem, spec_of(Method::ExpTypeFOverY), 0.1, 40);
  for (std::size_t i = 0; i < ps.size(); ++i) {
    CHECK(ps.x()[i] == doctest::Approx(1.0 - std::exp(-ps.xi[i])).epsilon(1e-7));
    CHECK(ps.y()[i] == std::exp(ps.xi[i]));  // closed-form slot
  }
  // Without extrapolation the last x sits exp(-4) below x*.
  CHECK(std::abs(1.0 - ps.x_star_estimate - std::exp(-4.0)) <= 1e-6);
}

TEST_CASE("exp-type f/y on the general power law") {
  const double a = 2.0;
  const double b = 0.5;
  const double g = 3.0;
  const Problem p = registry_get("power1", {{"a", a}, {"b", b}, {"gamma", g}}).problem;
  const ParametricSolution ps = run(p, spec_of(Method::ExpTypeFOverY), 0.05, 60);
  const double xs = 1.0 / (std::pow(a, g - 1.0) * b * (g - 1.0));
  for (std::size_t i = 0; i < ps.size(); ++i) {
    CHECK(ps.x()[i] == doctest::Approx(xs * (1.0 - std::exp(-(g - 1.0) * ps.xi[i]))).epsilon(1e-7));
  }
}

TEST_CASE("one-plus-abs on power1 matches the elementary parametric solution") {
  const ParametricSolution ps = run(registry_get("power1").problem, spec_of(Method::OnePlusAbs), 0.05, 200);
  for (std::size_t i = 0; i < ps.size(); ++i) {
    const double xi = ps.xi[i];
    const double r = std::sqrt(xi * xi + 4.0);
    CHECK(ps.x()[i] == doctest::Approx(1.0 + xi / 2.0 - r / 2.0).epsilon(1e-8));
    CHECK(ps.y()[i] == doctest::Approx(xi / 2.0 + r / 2.0).epsilon(1e-8));
  }
}

TEST_CASE("exp-type t/y on ode2-power") {
  const ParametricSolution ps = run(registry_get("ode2-power").problem, spec_of(Method::ExpTypeTOverY), 0.02, 150);
  const std::size_t t_col = ps.column("t");
  for (std::size_t i = 0; i < ps.size(); ++i) {
    const double xi = ps.xi[i];
    CHECK(ps.x()[i] == doctest::Approx(1.0 - std::exp(-xi)).epsilon(1e-7));
    CHECK(ps.y()[i] == doctest::Approx(std::exp(xi)));
    CHECK(ps.values[t_col][i] == doctest::Approx(std::exp(2.0 * xi)).epsilon(1e-7));
  }
}

TEST_CASE("differential constraint on ode2-power") {
  const double a = 2.0;
  const Problem p = registry_get("ode2-power", {{"a", a}}).problem;
  const ParametricSolution ps =
      run(p, gauge_spec(Method::DifferentialConstraint, "f/(2*t*(1+2*xi))"), 0.0025, 600);
  for (std::size_t i = 0; i < ps.size(); ++i) {
    const double xi = ps.xi[i];
    CHECK(ps.x()[i] == doctest::Approx((1.0 - std::exp(-xi - xi * xi)) / a).epsilon(1e-7));
    CHECK(ps.y()[i] == doctest::Approx(a * std::exp(xi + xi * xi)).epsilon(1e-7));
  }
}

TEST_CASE("growth component on system3") {
  TransformSpec spec = spec_of(Method::SystemGrowthComponent);
  spec.k = 2;
  const ParametricSolution ps = run(registry_get("system3").problem, spec, 0.01, 200);
  CHECK(ps.primary == 2);
  const std::size_t y1 = ps.column("y1");
  const std::size_t y3 = ps.column("y3");
  for (std::size_t i = 0; i < ps.size(); ++i) {
    const double xi = ps.xi[i];
    CHECK(ps.x()[i] == doctest::Approx(1.0 - std::exp(-xi)).epsilon(1e-7));
    CHECK(ps.values[y1][i] == doctest::Approx(std::exp(-xi)).epsilon(1e-7));
    CHECK(ps.values[y3][i] == doctest::Approx(std::exp(-2.0 * xi)).epsilon(1e-7));
    CHECK(ps.y()[i] == std::exp(xi));
  }
}

TEST_CASE("growing component detection") {
  CHECK(detect_growing_component(registry_get("system3").problem) == 2);
  // Not polynomial: falls back to the trial run.
  const Problem sys = make_problem(ProblemKind::System, {"y1", "exp(y2)"}, 0.0, {1.0, 1.0});
  CHECK(detect_growing_component(sys) == 2);
  CHECK_THROWS_AS((void)detect_growing_component(registry_get("power1").problem), ValidationError);
}

TEST_CASE("hodograph run: xi = y - y0 and x approaches 1 - 1/(1 + xi)") {
  const Problem p = registry_get("power1").problem;
  for (const TransformSpec& spec : {spec_of(Method::Hodograph), gauge_spec(Method::NonLocal, "f")}) {
    const ParametricSolution ps = run(p, spec, 0.5, 98);
    for (std::size_t i = 0; i < ps.size(); ++i) CHECK(ps.xi[i] == doctest::Approx(ps.y()[i] - 1.0).epsilon(1e-10));
    CHECK(ps.x_star_estimate == doctest::Approx(0.98).epsilon(1e-3));
  }
}

TEST_CASE("differential on power1 and on ode2-chain give the same field") {
  const TransformedProblem first = build(registry_get("power1").problem, spec_of(Method::Differential));
  const TransformedProblem second = build(registry_get("ode2-chain").problem, spec_of(Method::Differential));
  CHECK(first.tau0 == second.tau0);
  CHECK(first.state0 == second.state0);
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> xd(0.0, 0.5);
  std::uniform_real_distribution<double> yd(1.0, 3.0);
  std::uniform_real_distribution<double> td(1.0, 5.0);
  for (int i = 0; i < 20; ++i) {
    const std::vector<double> s{xd(rng), yd(rng)};
    const double t = td(rng);
    std::vector<double> a(2);
    std::vector<double> b(2);
    REQUIRE(first.field.eval(s, t, a));
    REQUIRE(second.field.eval(s, t, b));
    CHECK(std::abs(a[0] - b[0]) <= 1e-12 * std::abs(a[0]));
    CHECK(std::abs(a[1] - b[1]) <= 1e-12 * std::abs(a[1]));
  }
}

TEST_CASE("modified differential is a reparametrisation of the differential transform") {
  const Problem p = registry_get("power1").problem;
  const double lambda = 1.5;
  TransformSpec md = spec_of(Method::ModifiedDifferential);
  md.lambda = lambda;
  const ParametricSolution ps = run(p, md, 0.01, 200);
  const TransformedProblem diff = build(p, spec_of(Method::Differential));
  for (std::size_t i : {20u, 50u, 100u, 150u, 200u}) {
    const double t = diff.tau0 * std::exp(lambda * ps.xi[i]);
    const std::size_t n = 4000;
    const Trajectory tr = rk4_fixed(diff.field, diff.state0, diff.tau0, (t - diff.tau0) / n, n);
    REQUIRE(tr.size() == n + 1);
    CHECK(std::abs(tr.back()[0] / ps.x()[i] - 1.0) <= 1e-6);
    CHECK(std::abs(tr.back()[1] / ps.y()[i] - 1.0) <= 1e-6);
    CHECK(ps.values[ps.column("t")][i] == doctest::Approx(t));
  }
}

TEST_CASE("f/t and t/y on ode2-power coincide under xi -> gamma xi") {
  const Problem p = registry_get("ode2-power").problem;  // gamma = 2
  const ParametricSolution ty = run(p, spec_of(Method::ExpTypeTOverY), 0.01, 300);
  const ParametricSolution ft = run(p, spec_of(Method::ExpTypeFOverT), 0.02, 300);
  for (std::size_t i = 0; i < ty.size(); ++i) {
    CHECK(std::abs(ft.x()[i] - ty.x()[i]) <= 1e-6);
  }
}

TEST_CASE("chain-rule reconstruction: slopes equal the right-hand side") {
  struct Case {
    const char* problem;
    TransformSpec spec;
    double h;
  };
  TransformSpec md = spec_of(Method::ModifiedDifferential);
  md.lambda = 2.0;
  TransformSpec growth = spec_of(Method::SystemGrowthComponent);
  TransformSpec full = spec_of(Method::ExpTypeFOverY);
  full.closed_form = false;
  const std::vector<Case> cases{
      {"power1", spec_of(Method::Differential), 0.1},
      {"power1", md, 0.1},
      {"power1", gauge_spec(Method::NonLocal, "1+abs(f)"), 0.1},
      {"power1", gauge_spec(Method::DifferentialConstraint, "f/(y*(1+2*xi))"), 0.02},
      {"power1", spec_of(Method::Hodograph), 0.1},
      {"power1", spec_of(Method::ArcLength), 0.1},
      {"power1", spec_of(Method::OnePlusAbs), 0.1},
      {"power1", spec_of(Method::ExpTypeFOverY), 0.1},
      {"power1", full, 0.1},
      {"sing-pole1", spec_of(Method::ExpTypeFOverY), 0.05},
      {"exp1", spec_of(Method::ModifiedDifferential), 0.05},
      {"ode2-power", spec_of(Method::Differential), 0.1},
      {"ode2-power", spec_of(Method::Hodograph), 0.1},
      {"ode2-power", spec_of(Method::ArcLength), 0.1},
      {"ode2-power", spec_of(Method::ExpTypeTOverY), 0.05},
      {"ode2-power", spec_of(Method::ExpTypeFOverT), 0.05},
      {"ode2-exp", spec_of(Method::ExpTypeFOverT), 0.05},
      {"ode3-power", spec_of(Method::ArcLength), 0.1},
      {"ode3-power", spec_of(Method::ExpTypeWOverT), 0.05},
      {"ode3-power", spec_of(Method::ExpTypeFOverW), 0.05},
      {"ode3-power", spec_of(Method::ExpTypeTOverY), 0.05},
      {"system3", growth, 0.01},
      {"system3", spec_of(Method::ArcLength), 0.01},
  };
  for (const auto& c : cases) {
    const Problem p = registry_get(c.problem).problem;
    const ParametricSolution ps = run(p, c.spec, c.h, 30);
    const auto names = p.state_names();
    const bool differential_family =
        p.kind == ProblemKind::FirstOrder &&
        (c.spec.method == Method::Differential || c.spec.method == Method::ModifiedDifferential);
    for (std::size_t i = 0; i < ps.size(); ++i) {
      ParamMap env{{"x", ps.x()[i]}};
      for (const auto& n : names) env[n] = ps.values[ps.column(n)][i];
      for (std::size_t k = 0; k < names.size(); ++k) {
        double expected = 0.0;
        if (p.is_system()) {
          expected = eval(p.rhs[k], env, p.params);
        } else if (k + 1 < names.size()) {
          expected = env.at(names[k + 1]);
        } else if (differential_family) {
          // The parameter is f itself; f(x, y) matches it only to integrator accuracy.
          expected = ps.values[ps.column("t")][i];
          const double f = eval(p.rhs.front(), env, p.params);
          CHECK(std::abs(f - expected) <= 1e-5 * std::max(1.0, std::abs(expected)));
        } else {
          expected = eval(p.rhs.front(), env, p.params);
        }
        const double slope = ps.slope(ps.column(names[k]), i);
        CHECK_MESSAGE(std::abs(slope - expected) <= 1e-8 * std::max(1.0, std::abs(expected)), std::string(c.problem), " ",
                      std::string(to_string(c.spec.method)), " ", names[k]);
      }
    }
  }
}

TEST_CASE("x is strictly increasing along transformed runs") {
  const ParametricSolution ps = run(registry_get("ode3-power").problem, spec_of(Method::Hodograph), 0.2, 100);
  for (std::size_t i = 1; i < ps.size(); ++i) CHECK(ps.x()[i] > ps.x()[i - 1]);
}

TEST_CASE("build validation") {
  const Problem p = registry_get("power1").problem;
  TransformSpec md = spec_of(Method::ModifiedDifferential);
  md.lambda = 0.0;
  CHECK_THROWS_AS((void)build(p, md), ValidationError);

  TransformSpec arc = spec_of(Method::ArcLength);
  arc.s = -1.0;
  CHECK_THROWS_AS((void)build(p, arc), ValidationError);
  arc.s = 2.0;
  arc.c = {1.0};
  CHECK_THROWS_AS((void)build(p, arc), ValidationError);
  arc.c = {1.0, -1.0};
  CHECK_THROWS_AS((void)build(p, arc), ValidationError);
  arc.c = {0.0, 0.0};
  CHECK_THROWS_AS((void)build(p, arc), ValidationError);

  CHECK_THROWS_AS((void)build(p, spec_of(Method::NonLocal)), ValidationError);
  CHECK_THROWS_AS((void)build(p, gauge_spec(Method::NonLocal, "f*xi")), ValidationError);
  CHECK_THROWS_AS((void)build(p, gauge_spec(Method::NonLocal, "-1")), ValidationError);
  CHECK_THROWS_AS((void)build(p, gauge_spec(Method::NonLocal, "f+q")), ValidationError);
  CHECK_THROWS_AS((void)build(p, spec_of(Method::ExpTypeTOverY)), ValidationError);
  CHECK_THROWS_AS((void)build(p, spec_of(Method::SystemGrowthComponent)), ValidationError);
  CHECK_THROWS_AS((void)build(registry_get("exp1").problem, spec_of(Method::ExpTypeFOverY)), ValidationError);
  CHECK_THROWS_AS((void)build(registry_get("system3").problem, spec_of(Method::Differential)), ValidationError);
  CHECK_THROWS_AS((void)build(registry_get("system3").problem, spec_of(Method::Hodograph)), ValidationError);
  TransformSpec k = spec_of(Method::SystemGrowthComponent);
  k.k = 4;
  CHECK_THROWS_AS((void)build(registry_get("system3").problem, k), ValidationError);
}

TEST_CASE("gauge with partial derivatives of f") {
  // g = fy / 2 + fx equals f / y for y' = y^2, i.e. the exp-type gauge.
  const Problem p = registry_get("power1").problem;
  const ParametricSolution ps = run(p, gauge_spec(Method::NonLocal, "fy/2 + fx"), 0.05, 60);
  for (std::size_t i = 0; i < ps.size(); ++i) {
    CHECK(ps.y()[i] == doctest::Approx(std::exp(ps.xi[i])).epsilon(1e-6));
  }
}

TEST_CASE("decode rejects a mismatched trajectory") {
  const TransformedProblem tp = build(registry_get("power1").problem, spec_of(Method::ExpTypeFOverY));
  Trajectory tr;
  tr.dim = 3;
  tr.data = {0.0, 1.0, 2.0};
  CHECK_THROWS_AS((void)decode(tp, tr), ValidationError);
}

TEST_CASE("reconstruct_on_x") {
  const ParametricSolution ps = run(registry_get("power1").problem, spec_of(Method::ExpTypeFOverY), 0.1, 40);
  const auto y = reconstruct_on_x(ps, {0.5});
  CHECK(std::abs(y[0] / 2.0 - 1.0) <= 1e-4);
  CHECK_THROWS_AS((void)reconstruct_on_x(ps, {1.5}), ValidationError);

  TransformSpec spec = spec_of(Method::SystemGrowthComponent);
  const ParametricSolution s3 = run(registry_get("system3").problem, spec, 0.1, 25);
  const auto y2 = reconstruct_on_x(s3, {0.5}, s3.column("y2"));
  CHECK(std::abs(y2[0] / 2.0 - 1.0) <= 1e-3);
}
