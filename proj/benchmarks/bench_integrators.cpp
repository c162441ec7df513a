#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "blowup/driver.hpp"
#include "blowup/expr.hpp"
#include "blowup/problems.hpp"
#include "blowup/stepper.hpp"
#include "blowup/transforms.hpp"

using namespace blowup;

namespace {

TransformSpec spec_of(Method m) {
  TransformSpec s;
  s.method = m;
  return s;
}

void BM_ExprEval(benchmark::State& state) {
  const Expr e = parse("b*y^gamma + sin(x)*y", {"b", "gamma"});
  const std::vector<std::string> slots{"x", "y"};
  const BoundExpr be(e, slots, {{"b", 1.0}, {"gamma", 2.5}});
  const std::vector<double> v{0.3, 1.7};
  for (auto _ : state) benchmark::DoNotOptimize(be(v));
}
BENCHMARK(BM_ExprEval);

void BM_ExprDual(benchmark::State& state) {
  const Expr e = parse("b*y^gamma + sin(x)*y", {"b", "gamma"});
  const std::vector<std::string> slots{"x", "y"};
  const BoundExpr be(e, slots, {{"b", 1.0}, {"gamma", 2.5}});
  const std::vector<double> v{0.3, 1.7};
  const std::vector<std::size_t> seeds{0, 1};
  for (auto _ : state) benchmark::DoNotOptimize(be.eval_dual(v, seeds));
}
BENCHMARK(BM_ExprDual);

// Raw stepping cost of a transformed field; argument is the step count.
void BM_Rk4Transformed(benchmark::State& state) {
  const TransformedProblem tp = build(registry_get("power1").problem, spec_of(Method::ArcLength));
  const auto steps = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(rk4_fixed(tp.field, tp.state0, tp.tau0, 1e-3, steps));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Rk4Transformed)->Arg(1000)->Arg(10000);

// End-to-end solve to Lambda 100, one benchmark per method.
void BM_Solve(benchmark::State& state, const char* problem, Method m, double h) {
  const Problem p = registry_get(problem).problem;
  StopPolicy stop;
  stop.lambda_target = 100.0;
  for (auto _ : state) benchmark::DoNotOptimize(solve(p, spec_of(m), stop, h));
}
BENCHMARK_CAPTURE(BM_Solve, power1_exp_type, "power1", Method::ExpTypeFOverY, 0.1);
BENCHMARK_CAPTURE(BM_Solve, power1_hodograph, "power1", Method::Hodograph, 0.01);
BENCHMARK_CAPTURE(BM_Solve, ode2_power_exp_type, "ode2-power", Method::ExpTypeTOverY, 0.1);
BENCHMARK_CAPTURE(BM_Solve, ode3_power_exp_type, "ode3-power", Method::ExpTypeWOverT, 0.1);
BENCHMARK_CAPTURE(BM_Solve, system3_growth, "system3", Method::SystemGrowthComponent, 0.005);

}  // namespace

BENCHMARK_MAIN();
