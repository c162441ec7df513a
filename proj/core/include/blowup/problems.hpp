#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "blowup/expr.hpp"

namespace blowup {

enum class ProblemKind { FirstOrder, SecondOrder, NthOrder, System };

/// Cauchy problem. Scalar problems of order n use the state variables
/// y, t, w, d3, d4, ... (y and its derivatives up to order n-1); systems use
/// y1..yn. `rhs` holds one expression for scalar kinds and n for systems.
struct Problem {
  std::string name;
  ProblemKind kind = ProblemKind::FirstOrder;
  std::vector<Expr> rhs;
  std::vector<std::string> rhs_text;
  double x0 = 0.0;
  std::vector<double> initial;
  ParamMap params;

  /// Number of state components (order for scalar kinds, n for systems).
  std::size_t dimension() const noexcept { return initial.size(); }
  bool is_system() const noexcept { return kind == ProblemKind::System; }
  /// State names in order: {y, t, w, ...} or {y1, ..., yn}.
  std::vector<std::string> state_names() const;
};

/// Name of the k-th state slot of a scalar problem (0 -> y, 1 -> t, ...).
std::string scalar_state_name(std::size_t k);

/// Parses and validates. Throws ValidationError when the initial data does
/// not match the kind or an expression uses a name that is neither a state
/// variable, x, nor a parameter.
Problem make_problem(ProblemKind kind, const std::vector<std::string>& rhs, double x0,
                     std::vector<double> initial, ParamMap params = {}, std::string name = {});

enum class SingularityKind { Pole, Logarithmic, None };

/// Closed-form solution data. `components` mirror the problem state
/// (y, y', ... or y1..yn) as expressions in x. `x_star` is a closed form in
/// the parameters and is evaluated on demand.
struct ExactSolution {
  std::vector<Expr> components;
  std::optional<Expr> x_star_expr;
  SingularityKind singularity = SingularityKind::None;
  double beta = 0.0;  // pole order, Pole only
  /// For bounded solutions with an interior maximum (zero-rhs below the
  /// bifurcation boundary).
  std::optional<double> max_location;
  double x0 = 0.0;
  ParamMap params;

  bool has_components() const noexcept { return !components.empty(); }
  std::optional<double> x_star() const;
};

/// State at x. Throws ValidationError outside [x0, x_star) or when there is
/// no closed form.
std::vector<double> exact_eval(const ExactSolution& sol, double x);

struct RegistryEntry {
  Problem problem;
  ExactSolution exact;
  std::string description;
  /// Minorant g(y) <= f(x, y) usable for the one-sided estimate.
  std::optional<std::string> minorant;
};

/// Known problem names in registry order.
std::vector<std::string> registry_names();

/// Instantiates a registry problem with parameter overrides. Throws
/// ValidationError for unknown names, unknown parameters, or parameter
/// values outside the problem's validity conditions.
RegistryEntry registry_get(std::string_view name, const ParamMap& overrides = {});

/// Chain form of a scalar problem of order n >= 2: y1' = y2, ...,
/// yn' = f. First-order problems and systems are returned unchanged.
Problem reduce_to_system(const Problem& p);

}  // namespace blowup
