#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "blowup/problems.hpp"
#include "blowup/solution.hpp"
#include "blowup/stepper.hpp"

namespace blowup {

// The original problem is viewed as u' = F(x, u) with u = (y, t, w, ...),
// F = (t, w, ..., f) for scalar problems and u = (y1..yn), F = (f1..fn) for
// systems. A gauge g > 0 defines the parameter xi by dxi/dx = g, so
// x' = 1/g and u' = F/g in xi.

enum class Method {
  Differential,
  ModifiedDifferential,
  NonLocal,
  DifferentialConstraint,
  Hodograph,
  ArcLength,
  OnePlusAbs,
  ExpTypeFOverY,
  ExpTypeTOverY,
  ExpTypeFOverT,
  ExpTypeWOverT,
  ExpTypeFOverW,
  SystemGrowthComponent,
};

/// Kebab-case name, e.g. "exp-f-over-y".
const char* to_string(Method m);
/// Inverse of to_string; "growth-auto" maps to SystemGrowthComponent.
/// Throws ValidationError for unknown names.
Method method_from_string(std::string_view name);

struct TransformSpec {
  Method method = Method::ExpTypeFOverY;
  /// Gauge for NonLocal / DifferentialConstraint. Variables: x, the state
  /// names, f (f1..fn for systems), fx and fy (first order only) and, for
  /// constraints, xi.
  std::optional<std::string> g;
  double lambda = 1.0;  // ModifiedDifferential
  /// ArcLength family: g = (c0 + sum c_m |F_m|^s)^(1/s). Empty c and unset s
  /// select the defaults (all c = 1; s = 2, or 1 for OnePlusAbs).
  std::optional<double> s;
  std::vector<double> c;
  double xi0 = 0.0;  // DifferentialConstraint
  /// Growing component (1-based) for SystemGrowthComponent; unset = auto.
  std::optional<std::size_t> k;
  /// Exp-type and growth methods: substitute the exponential slot
  /// analytically (true) or integrate it with the rest of the system. When
  /// true and the gauge numerator is a state slot (t/y, w/t), that slot is
  /// integrated as ln|u|.
  bool closed_form = true;
};

/// How x approaches x* along the parameter.
enum class TailModel { Exponential, PowerLaw, Auto };

struct TransformedProblem {
  VectorField field;
  std::vector<double> state0;
  double tau0 = 0.0;
  std::string parameter = "xi";
  std::vector<std::string> layout;   // integrated slots
  std::vector<std::string> columns;  // decoded columns, x first
  std::size_t primary = 1;
  /// 1-based growing component for systems, 0 otherwise.
  std::size_t growing_component = 0;
  Method method = Method::ExpTypeFOverY;
  TailModel tail = TailModel::Exponential;
  /// Fills decoded values and parameter rates (both of columns.size()) for
  /// one integrated node. Returns false where the field refuses the point.
  std::function<bool(double tau, std::span<const double> state, std::span<double> values,
                     std::span<double> rates)>
      decode_node;
};

/// Builds the regular system for `spec`. Throws ValidationError when the
/// method does not apply to the problem kind, a parameter is out of range,
/// or g <= 0 at the initial point.
TransformedProblem build(const Problem& p, const TransformSpec& spec);

/// Decodes an integrated trajectory. Throws ValidationError on a layout
/// mismatch.
ParametricSolution decode(const TransformedProblem& tp, const Trajectory& traj);

/// Growing component of a system (1-based): dominant-balance exponents when
/// the right-hand sides are polynomial, else the component with the largest
/// |f_k / y_k| after 50 RK4 steps of size 0.01 on the original system.
std::size_t detect_growing_component(const Problem& sys);

}  // namespace blowup
