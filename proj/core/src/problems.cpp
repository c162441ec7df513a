#include "blowup/problems.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>

#include "blowup/error.hpp"

namespace blowup {

std::string scalar_state_name(std::size_t k) {
  switch (k) {
    case 0:
      return "y";
    case 1:
      return "t";
    case 2:
      return "w";
    default:
      return "d" + std::to_string(k);
  }
}

std::vector<std::string> Problem::state_names() const {
  std::vector<std::string> names;
  for (std::size_t k = 0; k < initial.size(); ++k) {
    names.push_back(is_system() ? "y" + std::to_string(k + 1) : scalar_state_name(k));
  }
  return names;
}

namespace {

std::set<std::string> key_set(const ParamMap& params) {
  std::set<std::string> keys;
  for (const auto& [k, v] : params) keys.insert(k);
  return keys;
}

std::size_t expected_order(ProblemKind kind, std::size_t initial_size, std::size_t rhs_size) {
  switch (kind) {
    case ProblemKind::FirstOrder:
      return 1;
    case ProblemKind::SecondOrder:
      return 2;
    case ProblemKind::NthOrder:
      return initial_size;
    case ProblemKind::System:
      return rhs_size;
  }
  return 0;
}

}  // namespace

Problem make_problem(ProblemKind kind, const std::vector<std::string>& rhs, double x0,
                     std::vector<double> initial, ParamMap params, std::string name) {
  const std::size_t order = expected_order(kind, initial.size(), rhs.size());
  if (order == 0) throw ValidationError("problem has no state components");
  if (kind == ProblemKind::NthOrder && order < 2) {
    throw ValidationError("an n-th order problem needs at least two initial values");
  }
  if (initial.size() != order) {
    throw ValidationError("expected " + std::to_string(order) + " initial values, got " +
                          std::to_string(initial.size()));
  }
  const std::size_t n_rhs = kind == ProblemKind::System ? order : 1;
  if (rhs.size() != n_rhs) {
    throw ValidationError("expected " + std::to_string(n_rhs) + " right-hand side(s), got " +
                          std::to_string(rhs.size()));
  }
  if (!std::isfinite(x0) || !std::all_of(initial.begin(), initial.end(), [](double v) { return std::isfinite(v); })) {
    throw ValidationError("initial data must be finite");
  }

  Problem p;
  p.name = std::move(name);
  p.kind = kind;
  p.x0 = x0;
  p.initial = std::move(initial);
  p.params = std::move(params);

  std::set<std::string> allowed{"x"};
  for (const auto& v : p.state_names()) allowed.insert(v);
  const auto param_names = key_set(p.params);
  for (const auto& text : rhs) {
    Expr e = parse(text, param_names);
    for (const auto& v : e.free_vars()) {
      if (!allowed.count(v)) throw ValidationError("unknown identifier '" + v + "' in '" + text + "'");
    }
    p.rhs.push_back(std::move(e));
    p.rhs_text.push_back(text);
  }
  return p;
}

std::optional<double> ExactSolution::x_star() const {
  if (!x_star_expr) return std::nullopt;
  const double v = eval(*x_star_expr, {}, params);
  if (!std::isfinite(v)) return std::nullopt;
  return v;
}

std::vector<double> exact_eval(const ExactSolution& sol, double x) {
  if (!sol.has_components()) throw ValidationError("problem has no closed-form solution");
  if (!(x >= sol.x0)) throw ValidationError("x precedes the initial point");
  if (auto xs = sol.x_star(); xs && !(x < *xs)) {
    throw ValidationError("x lies beyond the domain of existence");
  }
  std::vector<double> out;
  out.reserve(sol.components.size());
  const ParamMap env{{"x", x}};
  for (const auto& c : sol.components) {
    const double v = eval(c, env, sol.params);
    if (!std::isfinite(v)) throw ValidationError("exact solution is not finite at x");
    out.push_back(v);
  }
  return out;
}

namespace {

using Factory = std::function<RegistryEntry(const ParamMap&)>;

struct Definition {
  std::string name;
  std::string description;
  ParamMap defaults;
  Factory build;
};

void require(bool ok, const std::string& msg) {
  if (!ok) throw ValidationError(msg);
}

ExactSolution closed_form(const std::vector<std::string>& comps, const std::string& x_star,
                          SingularityKind kind, double beta, const ParamMap& params) {
  ExactSolution sol;
  const auto names = key_set(params);
  for (const auto& c : comps) sol.components.push_back(parse(c, names));
  if (!x_star.empty()) sol.x_star_expr = parse(x_star, names);
  sol.singularity = kind;
  sol.beta = beta;
  sol.params = params;
  return sol;
}

const char* kPower = "a*(1 - a^(gamma-1)*b*(gamma-1)*x)^(-1/(gamma-1))";
const char* kPowerXStar = "1/(a^(gamma-1)*b*(gamma-1))";

void check_power_params(const ParamMap& p) {
  require(p.at("a") > 0.0 && p.at("b") > 0.0 && p.at("gamma") > 1.0,
          "power-law problems require a > 0, b > 0, gamma > 1");
}

const std::vector<Definition>& definitions() {
  static const std::vector<Definition> defs = [] {
    std::vector<Definition> d;

    d.push_back({"power1", "y' = b*y^gamma, y(0) = a", {{"a", 1.0}, {"b", 1.0}, {"gamma", 2.0}},
                 [](const ParamMap& p) {
                   check_power_params(p);
                   RegistryEntry e;
                   e.problem = make_problem(ProblemKind::FirstOrder, {"b*y^gamma"}, 0.0, {p.at("a")}, p);
                   e.exact = closed_form({kPower}, kPowerXStar, SingularityKind::Pole,
                                         1.0 / (p.at("gamma") - 1.0), p);
                   e.minorant = "b*y^gamma";
                   return e;
                 }});

    d.push_back({"exp1", "y' = b*exp(y), y(0) = a", {{"a", 0.0}, {"b", 1.0}},
                 [](const ParamMap& p) {
                   require(p.at("b") > 0.0, "exp1 requires b > 0");
                   RegistryEntry e;
                   e.problem = make_problem(ProblemKind::FirstOrder, {"b*exp(y)"}, 0.0, {p.at("a")}, p);
                   e.exact = closed_form({"-ln(exp(-a) - b*x)"}, "exp(-a)/b", SingularityKind::Logarithmic, 0.0, p);
                   return e;
                 }});

    d.push_back({"sing-pole1", "y' = y^2/(b - x), y(0) = a", {{"a", 1.0}, {"b", 1.0}},
                 [](const ParamMap& p) {
                   require(p.at("a") > 0.0 && p.at("b") > 0.0, "sing-pole1 requires a > 0, b > 0");
                   RegistryEntry e;
                   e.problem = make_problem(ProblemKind::FirstOrder, {"y^2/(b - x)"}, 0.0, {p.at("a")}, p);
                   e.exact = closed_form({"1/(ln(1 - x/b) + 1/a)"}, "b*(1 - exp(-1/a))", SingularityKind::Pole, 1.0, p);
                   return e;
                 }});

    d.push_back({"sing-pole2", "y' = y^2/(b - x)^2, y(0) = a", {{"a", 1.0}, {"b", 1.0}},
                 [](const ParamMap& p) {
                   require(p.at("a") > 0.0 && p.at("b") > 0.0, "sing-pole2 requires a > 0, b > 0");
                   RegistryEntry e;
                   e.problem = make_problem(ProblemKind::FirstOrder, {"y^2/(b - x)^2"}, 0.0, {p.at("a")}, p);
                   e.exact = closed_form({"1/(1/a + 1/b - 1/(b - x))"}, "b^2/(a + b)", SingularityKind::Pole, 1.0, p);
                   return e;
                 }});

    d.push_back({"zero-rhs", "y' = y^2*(b - x), y(0) = a; blows up iff b >= sqrt(2/a)",
                 {{"a", 1.0}, {"b", 2.0}},
                 [](const ParamMap& p) {
                   const double a = p.at("a");
                   const double b = p.at("b");
                   require(a > 0.0 && b > 0.0, "zero-rhs requires a > 0, b > 0");
                   RegistryEntry e;
                   e.problem = make_problem(ProblemKind::FirstOrder, {"y^2*(b - x)"}, 0.0, {a}, p);
                   const std::string y = "a/(a*x^2/2 - a*b*x + 1)";
                   if (b >= std::sqrt(2.0 / a)) {
                     const bool boundary = std::abs(a * b * b - 2.0) <= 1e-12;
                     // abs() absorbs rounding on the boundary b^2 = 2/a.
                     e.exact = closed_form({y}, "b - sqrt(abs(b^2 - 2/a))", SingularityKind::Pole,
                                           boundary ? 2.0 : 1.0, p);
                   } else {
                     e.exact = closed_form({y}, "", SingularityKind::None, 0.0, p);
                     e.exact.max_location = b;
                   }
                   return e;
                 }});

    d.push_back({"riccati-decreasing", "y' = (2 - x)*y^2, y(0) = 1", {},
                 [](const ParamMap& p) {
                   RegistryEntry e;
                   e.problem = make_problem(ProblemKind::FirstOrder, {"(2 - x)*y^2"}, 0.0, {1.0}, p);
                   e.exact = closed_form({"2/(x^2 - 4*x + 2)"}, "2 - sqrt(2)", SingularityKind::Pole, 1.0, p);
                   return e;
                 }});

    d.push_back({"riccati-x2", "y' = y^2 + x^m, y(0) = a (no closed form)", {{"a", 1.0}, {"m", 2.0}},
                 [](const ParamMap& p) {
                   require(p.at("a") > 0.0 && p.at("m") > 0.0, "riccati-x2 requires a > 0, m > 0");
                   RegistryEntry e;
                   e.problem = make_problem(ProblemKind::FirstOrder, {"y^2 + x^m"}, 0.0, {p.at("a")}, p);
                   e.exact.params = p;
                   e.exact.singularity = SingularityKind::Pole;
                   e.exact.beta = 1.0;
                   e.minorant = "y^2";
                   return e;
                 }});

    d.push_back({"abel", "y' = y^3 + c*x^m, y(0) = a (no closed form)", {{"a", 1.0}, {"c", 1.0}, {"m", 2.0}},
                 [](const ParamMap& p) {
                   require(p.at("a") > 0.0 && p.at("c") >= 0.0 && p.at("m") > 0.0,
                           "abel requires a > 0, c >= 0, m > 0");
                   RegistryEntry e;
                   e.problem = make_problem(ProblemKind::FirstOrder, {"y^3 + c*x^m"}, 0.0, {p.at("a")}, p);
                   e.exact.params = p;
                   e.exact.singularity = SingularityKind::Pole;
                   e.exact.beta = 0.5;
                   e.minorant = "y^3";
                   return e;
                 }});

    d.push_back({"system3", "y1' = -y1*y2, y2' = y2^4*y3, y3' = -2*y1, all y(0) = 1", {},
                 [](const ParamMap& p) {
                   RegistryEntry e;
                   e.problem = make_problem(ProblemKind::System, {"-y1*y2", "y2^4*y3", "-2*y1"}, 0.0,
                                            {1.0, 1.0, 1.0}, p);
                   e.exact = closed_form({"1 - x", "1/(1 - x)", "(1 - x)^2"}, "1", SingularityKind::Pole, 1.0, p);
                   return e;
                 }});

    d.push_back({"ode2-power", "y'' = b^2*gamma*y^(2*gamma-1), y(0) = a, y'(0) = a^gamma*b",
                 {{"a", 1.0}, {"b", 1.0}, {"gamma", 2.0}},
                 [](const ParamMap& p) {
                   check_power_params(p);
                   RegistryEntry e;
                   const double t0 = std::pow(p.at("a"), p.at("gamma")) * p.at("b");
                   e.problem = make_problem(ProblemKind::SecondOrder, {"b^2*gamma*y^(2*gamma-1)"}, 0.0,
                                            {p.at("a"), t0}, p);
                   const std::string y = std::string("(") + kPower + ")";
                   e.exact = closed_form({y, "b*" + y + "^gamma"}, kPowerXStar, SingularityKind::Pole,
                                         1.0 / (p.at("gamma") - 1.0), p);
                   return e;
                 }});

    d.push_back({"ode2-chain", "y'' = b*gamma*y^(gamma-1)*y', y(0) = a, y'(0) = a^gamma*b",
                 {{"a", 1.0}, {"b", 1.0}, {"gamma", 2.0}},
                 [](const ParamMap& p) {
                   check_power_params(p);
                   RegistryEntry e;
                   const double t0 = std::pow(p.at("a"), p.at("gamma")) * p.at("b");
                   e.problem = make_problem(ProblemKind::SecondOrder, {"b*gamma*y^(gamma-1)*t"}, 0.0,
                                            {p.at("a"), t0}, p);
                   const std::string y = std::string("(") + kPower + ")";
                   e.exact = closed_form({y, "b*" + y + "^gamma"}, kPowerXStar, SingularityKind::Pole,
                                         1.0 / (p.at("gamma") - 1.0), p);
                   return e;
                 }});

    d.push_back({"ode2-exp", "y'' = exp(2*y), y(0) = 0, y'(0) = 1", {},
                 [](const ParamMap& p) {
                   RegistryEntry e;
                   e.problem = make_problem(ProblemKind::SecondOrder, {"exp(2*y)"}, 0.0, {0.0, 1.0}, p);
                   e.exact = closed_form({"-ln(1 - x)", "1/(1 - x)"}, "1", SingularityKind::Logarithmic, 0.0, p);
                   return e;
                 }});

    d.push_back({"ode3-power", "y''' = 6*y^4, y(0) = y'(0) = 1, y''(0) = 2", {},
                 [](const ParamMap& p) {
                   RegistryEntry e;
                   e.problem = make_problem(ProblemKind::NthOrder, {"6*y^4"}, 0.0, {1.0, 1.0, 2.0}, p);
                   e.exact = closed_form({"1/(1 - x)", "1/(1 - x)^2", "2/(1 - x)^3"}, "1", SingularityKind::Pole, 1.0, p);
                   return e;
                 }});

    return d;
  }();
  return defs;
}

}  // namespace

std::vector<std::string> registry_names() {
  std::vector<std::string> names;
  for (const auto& d : definitions()) names.push_back(d.name);
  return names;
}

RegistryEntry registry_get(std::string_view name, const ParamMap& overrides) {
  for (const auto& d : definitions()) {
    if (d.name != name) continue;
    ParamMap params = d.defaults;
    for (const auto& [k, v] : overrides) {
      auto it = params.find(k);
      if (it == params.end()) throw ValidationError("problem '" + d.name + "' has no parameter '" + k + "'");
      if (!std::isfinite(v)) throw ValidationError("parameter '" + k + "' must be finite");
      it->second = v;
    }
    RegistryEntry e = d.build(params);
    e.problem.name = d.name;
    e.description = d.description;
    e.exact.x0 = e.problem.x0;
    return e;
  }
  throw ValidationError("unknown problem '" + std::string(name) + "'");
}

Problem reduce_to_system(const Problem& p) {
  if (p.kind == ProblemKind::FirstOrder || p.kind == ProblemKind::System) return p;
  const std::size_t n = p.dimension();
  std::map<std::string, std::string> mapping;
  for (std::size_t k = 0; k < n; ++k) mapping[scalar_state_name(k)] = "y" + std::to_string(k + 1);

  Problem out;
  out.name = p.name;
  out.kind = ProblemKind::System;
  out.x0 = p.x0;
  out.initial = p.initial;
  out.params = p.params;
  const auto param_names = key_set(p.params);
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const std::string text = "y" + std::to_string(k + 2);
    out.rhs.push_back(parse(text, param_names));
    out.rhs_text.push_back(text);
  }
  Expr last = p.rhs.front().renamed(mapping);
  out.rhs_text.push_back(last.to_string());
  out.rhs.push_back(std::move(last));
  return out;
}

}  // namespace blowup
