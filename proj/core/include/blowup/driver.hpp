#pragma once

#include <cstddef>
#include <limits>
#include <optional>

#include "blowup/estimates.hpp"
#include "blowup/problems.hpp"
#include "blowup/solution.hpp"
#include "blowup/stepper.hpp"
#include "blowup/transforms.hpp"

namespace blowup {

struct StopPolicy {
  double lambda_target = 50.0;
  double hard_xi_max = std::numeric_limits<double>::infinity();  // parameter span
  double overflow_cap = 1e15;  // on every decoded magnitude
  std::size_t max_steps = 20'000'000;
};

enum class StopReason { LambdaTarget, OverflowCap, HardXiMax, NonFinite, Guard };

const char* to_string(StopReason r);

struct StageBoundary {
  double x_m = 0.0;
  double y_m = 0.0;
};

struct SolveReport {
  ParametricSolution ps;
  double x_star_estimate = 0.0;
  double x_star_extrapolated = 0.0;
  std::optional<DiagnosticSeries> diagnostics;
  StopReason stop_reason = StopReason::LambdaTarget;
  std::optional<StageBoundary> stage_boundary;
  std::size_t growing_component = 0;  // 1-based, systems only
  Method method = Method::ExpTypeFOverY;
  double h = 0.0;
};

/// Tail extrapolation of x(xi) to x*. The exponential model applies
/// Aitken's delta-squared to the last three nodes; the power-law model fits
/// x* - x = C (xi - xi0 + 1)^(-q) through three nodes spaced by factors of
/// two. Auto picks exponential when successive difference ratios are stable
/// or falling. The result is never below the last x.
double extrapolate_x_star(const std::vector<double>& xi, const std::vector<double>& x, double xi0, TailModel model);

/// Integrates the transformed problem with RK4 until Lambda_m reaches the
/// target or another stop condition fires. Guard trips and overflow are
/// reported through stop_reason with the trajectory retained. Throws
/// ValidationError when the transform cannot be built.
SolveReport solve(const Problem& p, const TransformSpec& spec, const StopPolicy& stop, double h);

/// Stage 1 integrates the untransformed equation, whose local error grows
/// with f/y; its step is capped so the switch state stays accurate.
inline constexpr double kDefaultStage1Step = 1e-3;

struct TwoStageOptions {
  double threshold = 30.0;       // stage switch on min(|y/y0|, |f/y|)
  std::optional<double> stage1_h;  // defaults to min(h, kDefaultStage1Step)
  std::optional<double> x_limit;   // defaults to x0 + 10
};

/// Naive RK4 on the original first-order equation until the switch
/// threshold, then the f/y exp-type transform from (x_m, y_m). Without a
/// trigger before x_limit the stage-1 run alone is returned (stop_reason
/// HardXiMax, stage_boundary empty). The stitched parameter column is x
/// during stage 1 and continues as x_m + xi afterwards.
SolveReport solve_two_stage(const Problem& p, const StopPolicy& stop, double h, const TwoStageOptions& opts = {});

struct NaiveResult {
  Trajectory trajectory;  // states (y) on the x grid
  std::optional<double> x_halt;  // x of the step that went non-finite
};

/// Direct fixed-step integration of a first-order equation, up to
/// x_max (default x0 + 10).
NaiveResult naive_failure_demo(const Problem& p, Integrator method, double h, std::optional<double> x_max = {});

}  // namespace blowup
