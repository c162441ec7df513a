#include <cmath>
#include <numbers>

#include "blowup/error.hpp"
#include "blowup/problems.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace blowup;

namespace {

// Five-point derivative of component k of the exact solution.
double exact_derivative(const ExactSolution& sol, std::size_t k, double x, double h) {
  auto c = [&](double s) { return exact_eval(sol, s).at(k); };
  return (-c(x + 2 * h) + 8 * c(x + h) - 8 * c(x - h) + c(x - 2 * h)) / (12 * h);
}

// Right-hand side of u' = F(x, u) for component k at the exact state.
double model_rhs(const Problem& p, std::size_t k, double x, const std::vector<double>& u) {
  if (!p.is_system() && k + 1 < p.dimension()) return u[k + 1];
  const Expr& f = p.is_system() ? p.rhs.at(k) : p.rhs.front();
  ParamMap env{{"x", x}};
  const auto names = p.state_names();
  for (std::size_t i = 0; i < names.size(); ++i) env[names[i]] = u[i];
  return eval(f, env, p.params);
}

}  // namespace

TEST_CASE("registry residual check") {
  for (const auto& name : registry_names()) {
    const RegistryEntry e = registry_get(name);
    if (!e.exact.has_components()) continue;
    const auto xs = e.exact.x_star();
    const double x0 = e.problem.x0;
    const double x_end = xs ? x0 + 0.9 * (*xs - x0) : x0 + 4.0;
    for (int i = 0; i < 50; ++i) {
      const double x = x0 + (x_end - x0) * (i + 0.5) / 50.0;
      const double h = 1e-3 * std::min(xs ? *xs - x : 1.0, 1.0);
      const auto u = exact_eval(e.exact, x);
      for (std::size_t k = 0; k < e.problem.dimension(); ++k) {
        const double lhs = exact_derivative(e.exact, k, x, std::min(h, x - x0 + 1e-3));
        const double rhs = model_rhs(e.problem, k, x, u);
        CHECK_MESSAGE(std::abs(lhs - rhs) <= 1e-8 * std::max(1.0, std::abs(rhs)), name, " component ", k,
                      " at x=", x);
      }
    }
  }
}

TEST_CASE("initial data matches the exact solution at x0") {
  for (const auto& name : registry_names()) {
    const RegistryEntry e = registry_get(name);
    if (!e.exact.has_components()) continue;
    const auto u = exact_eval(e.exact, e.problem.x0);
    for (std::size_t k = 0; k < u.size(); ++k) CHECK_MESSAGE(u[k] == doctest::Approx(e.problem.initial[k]), name);
  }
}

TEST_CASE("documented critical values") {
  CHECK(*registry_get("power1").exact.x_star() == doctest::Approx(1.0));
  CHECK(*registry_get("exp1").exact.x_star() == doctest::Approx(1.0));
  CHECK(*registry_get("sing-pole1").exact.x_star() == doctest::Approx(0.6321).epsilon(1e-4));
  CHECK(*registry_get("sing-pole1").exact.x_star() == doctest::Approx(oracle::sing_pole1_x_star(1, 1)));
  CHECK(*registry_get("zero-rhs").exact.x_star() == doctest::Approx(2.0 - std::numbers::sqrt2));
  CHECK(*registry_get("system3").exact.x_star() == doctest::Approx(1.0));
  CHECK(*registry_get("ode2-exp").exact.x_star() == doctest::Approx(1.0));
  CHECK(*registry_get("ode3-power").exact.x_star() == doctest::Approx(1.0));
  CHECK(*registry_get("riccati-decreasing").exact.x_star() == doctest::Approx(oracle::kRiccatiDecreasingXStar));
  CHECK_FALSE(registry_get("riccati-x2").exact.x_star().has_value());
  CHECK_FALSE(registry_get("riccati-x2").exact.has_components());
}

TEST_CASE("power1 sweep: critical value and monotone growth") {
  for (double a : {0.5, 1.0, 2.0}) {
    for (double b : {0.5, 1.0, 2.0}) {
      for (double g : {1.5, 2.0, 3.0}) {
        const RegistryEntry e = registry_get("power1", {{"a", a}, {"b", b}, {"gamma", g}});
        const double xs = *e.exact.x_star();
        CHECK(xs == doctest::Approx(oracle::power_x_star(a, b, g)).epsilon(1e-14));
        double prev = 0.0;
        for (int k = 2; k <= 6; ++k) {
          const double y = std::abs(exact_eval(e.exact, xs - std::pow(10.0, -k) * xs).front());
          CHECK(y > prev);
          prev = y;
        }
        CHECK(exact_eval(e.exact, 0.3 * xs).front() == doctest::Approx(oracle::power_y(0.3 * xs, a, b, g)));
      }
    }
  }
}

TEST_CASE("exact_eval domain") {
  const RegistryEntry p = registry_get("power1");
  CHECK(exact_eval(p.exact, 0.5).front() == doctest::Approx(2.0));
  CHECK_THROWS_AS((void)exact_eval(p.exact, 1.5), ValidationError);
  CHECK_THROWS_AS((void)exact_eval(p.exact, 1.0), ValidationError);
  CHECK_THROWS_AS((void)exact_eval(p.exact, -0.1), ValidationError);
  CHECK(exact_eval(registry_get("ode2-exp").exact, 0.5).front() == doctest::Approx(std::log(2.0)));
  CHECK_THROWS_AS((void)exact_eval(registry_get("abel").exact, 0.1), ValidationError);
}

TEST_CASE("zero-rhs below the bifurcation boundary stays bounded") {
  const double a = 1.0;
  const double b = 1.38;
  const RegistryEntry e = registry_get("zero-rhs", {{"a", a}, {"b", b}});
  CHECK(e.exact.singularity == SingularityKind::None);
  CHECK_FALSE(e.exact.x_star().has_value());
  REQUIRE(e.exact.max_location.has_value());
  CHECK(*e.exact.max_location == doctest::Approx(b));
  const double y_max = a / (1.0 - a * b * b / 2.0);
  CHECK(std::abs(exact_eval(e.exact, b).front() - y_max) <= 1e-8 * y_max);
  CHECK(exact_eval(e.exact, b - 0.01).front() < y_max);
  CHECK(exact_eval(e.exact, b + 0.01).front() < y_max);
}

TEST_CASE("zero-rhs boundary is classified as blow-up at x = b") {
  const double b = std::sqrt(2.0);
  const RegistryEntry e = registry_get("zero-rhs", {{"a", 1.0}, {"b", b}});
  CHECK(e.exact.singularity == SingularityKind::Pole);
  CHECK(*e.exact.x_star() == doctest::Approx(b).epsilon(1e-6));
}

TEST_CASE("registry validation") {
  CHECK_THROWS_AS((void)registry_get("nope"), ValidationError);
  CHECK_THROWS_AS((void)registry_get("power1", {{"gamma", 1.0}}), ValidationError);
  CHECK_THROWS_AS((void)registry_get("power1", {{"a", -1.0}}), ValidationError);
  CHECK_THROWS_AS((void)registry_get("power1", {{"zeta", 1.0}}), ValidationError);
}

TEST_CASE("make_problem checks kind and identifiers") {
  CHECK_THROWS_AS((void)make_problem(ProblemKind::FirstOrder, {"y^2"}, 0.0, {1.0, 2.0}), ValidationError);
  CHECK_THROWS_AS((void)make_problem(ProblemKind::FirstOrder, {"y*t"}, 0.0, {1.0}), ValidationError);
  CHECK_THROWS_AS((void)make_problem(ProblemKind::FirstOrder, {"y*q"}, 0.0, {1.0}), ValidationError);
  const Problem p = make_problem(ProblemKind::FirstOrder, {"q*y"}, 0.0, {1.0}, {{"q", 2.0}});
  CHECK(p.dimension() == 1);
  const Problem s = make_problem(ProblemKind::SecondOrder, {"t*y"}, 0.0, {1.0, 0.5});
  CHECK(s.state_names() == std::vector<std::string>{"y", "t"});
  const Problem n = make_problem(ProblemKind::NthOrder, {"d3+y"}, 0.0, {1, 0, 0, 0});
  CHECK(n.state_names() == std::vector<std::string>{"y", "t", "w", "d3"});
}

TEST_CASE("reduce_to_system") {
  const Problem s = reduce_to_system(registry_get("ode2-power").problem);
  CHECK(s.kind == ProblemKind::System);
  REQUIRE(s.rhs.size() == 2);
  CHECK(s.state_names() == std::vector<std::string>{"y1", "y2"});
  CHECK(eval(s.rhs[0], {{"x", 0.0}, {"y1", 3.0}, {"y2", 5.0}}, s.params) == 5.0);
  CHECK(eval(s.rhs[1], {{"x", 0.0}, {"y1", 2.0}, {"y2", 5.0}}, s.params) == doctest::Approx(2.0 * 8.0));

  const Problem t = reduce_to_system(registry_get("ode3-power").problem);
  REQUIRE(t.rhs.size() == 3);
  CHECK(t.initial == std::vector<double>{1.0, 1.0, 2.0});
  CHECK(eval(t.rhs[1], {{"x", 0.0}, {"y1", 1.0}, {"y2", 2.0}, {"y3", 7.0}}, t.params) == 7.0);
  CHECK(eval(t.rhs[2], {{"x", 0.0}, {"y1", 2.0}, {"y2", 0.0}, {"y3", 0.0}}, t.params) == 96.0);

  const Problem p = registry_get("power1").problem;
  const Problem same = reduce_to_system(p);
  CHECK(same.kind == ProblemKind::FirstOrder);
  CHECK(same.rhs_text == p.rhs_text);
}
