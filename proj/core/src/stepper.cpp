#include "blowup/stepper.hpp"

#include <algorithm>
#include <cmath>

#include "blowup/error.hpp"

namespace blowup {

const char* to_string(HaltReason r) {
  switch (r) {
    case HaltReason::ReachedEnd:
      return "reached-end";
    case HaltReason::NonFinite:
      return "non-finite";
    case HaltReason::GuardTriggered:
      return "guard-triggered";
  }
  return "?";
}

const char* to_string(Integrator m) {
  switch (m) {
    case Integrator::Euler:
      return "euler";
    case Integrator::Midpoint:
      return "midpoint";
    case Integrator::RK4:
      return "rk4";
  }
  return "?";
}

namespace {

enum class StageResult { Ok, NonFinite, Rejected };

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

StageResult stage(const VectorField& fld, std::span<const double> s, double tau, std::span<double> out) {
  if (!all_finite(s)) return StageResult::NonFinite;
  if (!fld.eval(s, tau, out)) return StageResult::Rejected;
  return all_finite(out) ? StageResult::Ok : StageResult::NonFinite;
}

class Stepper {
 public:
  Stepper(Integrator method, const VectorField& fld) : method_(method), fld_(fld) {
    const std::size_t n = fld.dim;
    for (auto* v : {&k1_, &k2_, &k3_, &k4_, &tmp_}) v->assign(n, 0.0);
  }

  StageResult step(std::span<const double> s, double tau, double h, std::span<double> next) {
    const std::size_t n = fld_.dim;
    StageResult r = stage(fld_, s, tau, k1_);
    if (r != StageResult::Ok) return r;
    switch (method_) {
      case Integrator::Euler:
        for (std::size_t i = 0; i < n; ++i) next[i] = s[i] + h * k1_[i];
        break;
      case Integrator::Midpoint:
        for (std::size_t i = 0; i < n; ++i) tmp_[i] = s[i] + 0.5 * h * k1_[i];
        if ((r = stage(fld_, tmp_, tau + 0.5 * h, k2_)) != StageResult::Ok) return r;
        for (std::size_t i = 0; i < n; ++i) next[i] = s[i] + h * k2_[i];
        break;
      case Integrator::RK4:
        for (std::size_t i = 0; i < n; ++i) tmp_[i] = s[i] + 0.5 * h * k1_[i];
        if ((r = stage(fld_, tmp_, tau + 0.5 * h, k2_)) != StageResult::Ok) return r;
        for (std::size_t i = 0; i < n; ++i) tmp_[i] = s[i] + 0.5 * h * k2_[i];
        if ((r = stage(fld_, tmp_, tau + 0.5 * h, k3_)) != StageResult::Ok) return r;
        for (std::size_t i = 0; i < n; ++i) tmp_[i] = s[i] + h * k3_[i];
        if ((r = stage(fld_, tmp_, tau + h, k4_)) != StageResult::Ok) return r;
        for (std::size_t i = 0; i < n; ++i) {
          next[i] = s[i] + h / 6.0 * (k1_[i] + 2.0 * k2_[i] + 2.0 * k3_[i] + k4_[i]);
        }
        break;
    }
    return all_finite(next) ? StageResult::Ok : StageResult::NonFinite;
  }

 private:
  Integrator method_;
  const VectorField& fld_;
  std::vector<double> k1_, k2_, k3_, k4_, tmp_;
};

}  // namespace

Trajectory integrate_fixed(Integrator method, const VectorField& fld, std::span<const double> s0,
                           double tau0, double h, std::size_t max_steps, const Guard& guard) {
  if (!(h > 0.0)) throw ValidationError("step size must be positive");
  if (s0.size() != fld.dim) throw ValidationError("initial state does not match field dimension");
  if (!all_finite(s0)) throw ValidationError("initial state must be finite");

  Trajectory traj;
  traj.dim = fld.dim;
  traj.tau0 = tau0;
  traj.h = h;
  traj.data.assign(s0.begin(), s0.end());
  traj.data.reserve(fld.dim * std::min<std::size_t>(max_steps + 1, 1u << 16));

  Stepper stepper(method, fld);
  std::vector<double> current(s0.begin(), s0.end());
  std::vector<double> next(fld.dim);
  for (std::size_t i = 0; i < max_steps; ++i) {
    const double tau = traj.tau(i);
    const StageResult r = stepper.step(current, tau, h, next);
    if (r == StageResult::NonFinite) {
      traj.halt_reason = HaltReason::NonFinite;
      return traj;
    }
    if (r == StageResult::Rejected) {
      traj.halt_reason = HaltReason::GuardTriggered;
      return traj;
    }
    traj.data.insert(traj.data.end(), next.begin(), next.end());
    current.swap(next);
    if (guard && guard(current, traj.tau(i + 1))) {
      traj.halt_reason = HaltReason::GuardTriggered;
      return traj;
    }
  }
  traj.halt_reason = HaltReason::ReachedEnd;
  return traj;
}

Trajectory rk4_fixed(const VectorField& fld, std::span<const double> s0, double tau0, double h,
                     std::size_t max_steps, const Guard& guard) {
  return integrate_fixed(Integrator::RK4, fld, s0, tau0, h, max_steps, guard);
}

Trajectory euler_fixed(const VectorField& fld, std::span<const double> s0, double tau0, double h,
                       std::size_t max_steps, const Guard& guard) {
  return integrate_fixed(Integrator::Euler, fld, s0, tau0, h, max_steps, guard);
}

Trajectory midpoint_fixed(const VectorField& fld, std::span<const double> s0, double tau0, double h,
                          std::size_t max_steps, const Guard& guard) {
  return integrate_fixed(Integrator::Midpoint, fld, s0, tau0, h, max_steps, guard);
}

std::optional<double> convergence_order(Integrator method, const VectorField& fld,
                                        std::span<const double> s0, double tau0, double tau_end,
                                        std::span<const double> exact, double h) {
  if (exact.size() != fld.dim) throw ValidationError("exact state does not match field dimension");
  auto end_error = [&](double step) {
    const auto n = static_cast<std::size_t>(std::llround((tau_end - tau0) / step));
    const Trajectory tr = integrate_fixed(method, fld, s0, tau0, step, n);
    if (tr.size() != n + 1) throw NumericalError("integration halted before tau_end");
    double err = 0.0;
    const auto last = tr.back();
    for (std::size_t i = 0; i < exact.size(); ++i) err = std::max(err, std::abs(last[i] - exact[i]));
    return err;
  };
  const double e1 = end_error(h);
  const double e2 = end_error(h / 2.0);
  if (e1 == 0.0 && e2 == 0.0) return std::nullopt;
  return std::log2(e1 / e2);
}

}  // namespace blowup
