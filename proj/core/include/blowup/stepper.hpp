#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace blowup {

/// Right-hand side of an autonomous or non-autonomous first-order system.
/// `eval` writes `dim` derivatives into `out` and returns false when the
/// field refuses the point (a denominator guard); the integrator then halts
/// with GuardTriggered.
struct VectorField {
  std::size_t dim = 0;
  std::function<bool(std::span<const double> s, double tau, std::span<double> out)> eval;
};

enum class HaltReason { ReachedEnd, NonFinite, GuardTriggered };

const char* to_string(HaltReason r);

/// States on the uniform grid tau0 + i*h, stored row-major.
struct Trajectory {
  std::size_t dim = 0;
  double tau0 = 0.0;
  double h = 0.0;
  std::vector<double> data;
  HaltReason halt_reason = HaltReason::ReachedEnd;

  std::size_t size() const noexcept { return dim == 0 ? 0 : data.size() / dim; }
  double tau(std::size_t i) const noexcept { return tau0 + static_cast<double>(i) * h; }
  std::span<const double> row(std::size_t i) const { return {data.data() + i * dim, dim}; }
  std::span<const double> back() const { return row(size() - 1); }
};

/// Stop predicate on an accepted state. A true result ends the run with
/// GuardTriggered and that state stored last.
using Guard = std::function<bool(std::span<const double> state, double tau)>;

enum class Integrator { Euler, Midpoint, RK4 };

const char* to_string(Integrator m);

/// Fixed-step integration for at most `max_steps` steps. Every stage
/// evaluation is checked; a non-finite stage ends the run with NonFinite and
/// the last finite state stored.
Trajectory integrate_fixed(Integrator method, const VectorField& fld, std::span<const double> s0,
                           double tau0, double h, std::size_t max_steps, const Guard& guard = {});

Trajectory rk4_fixed(const VectorField& fld, std::span<const double> s0, double tau0, double h,
                     std::size_t max_steps, const Guard& guard = {});
Trajectory euler_fixed(const VectorField& fld, std::span<const double> s0, double tau0, double h,
                       std::size_t max_steps, const Guard& guard = {});
Trajectory midpoint_fixed(const VectorField& fld, std::span<const double> s0, double tau0, double h,
                          std::size_t max_steps, const Guard& guard = {});

/// Empirical order log2(e_h / e_{h/2}) from the max-norm error at tau_end.
/// None when both errors vanish.
std::optional<double> convergence_order(Integrator method, const VectorField& fld,
                                        std::span<const double> s0, double tau0, double tau_end,
                                        std::span<const double> exact, double h);

}  // namespace blowup
