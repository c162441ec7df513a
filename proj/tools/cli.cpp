#include "cli.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <set>
#include <stdexcept>

#include "CLI11.hpp"
#include "blowup/bench.hpp"
#include "blowup/driver.hpp"
#include "blowup/error.hpp"
#include "blowup/estimates.hpp"
#include "blowup/io.hpp"
#include "blowup/problems.hpp"
#include "blowup/quadrature.hpp"
#include "blowup/transforms.hpp"
#include "json.hpp"

namespace blowup::cli {

namespace {

using nlohmann::json;

struct Loaded {
  Problem problem;
  std::optional<RegistryEntry> entry;
};

ParamMap parse_params(const std::vector<std::string>& items) {
  ParamMap params;
  for (const auto& item : items) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) throw ValidationError("--param expects name=value, got '" + item + "'");
    const std::string value = item.substr(eq + 1);
    double v = 0.0;
    const auto res = std::from_chars(value.data(), value.data() + value.size(), v);
    if (res.ec != std::errc{} || res.ptr != value.data() + value.size()) {
      throw ValidationError("--param value is not a number: '" + value + "'");
    }
    params[item.substr(0, eq)] = v;
  }
  return params;
}

Loaded load_problem(const std::string& name, const ParamMap& params) {
  const auto names = registry_names();
  if (std::find(names.begin(), names.end(), name) != names.end()) {
    RegistryEntry e = registry_get(name, params);
    return {e.problem, e};
  }
  if (!std::filesystem::exists(name)) {
    throw ValidationError("'" + name + "' is neither a registry problem nor a readable JSON file");
  }
  Problem p = problem_from_json_file(name);
  if (!params.empty()) {
    std::vector<std::string> rhs = p.rhs_text;
    ParamMap merged = p.params;
    for (const auto& [k, v] : params) merged[k] = v;
    p = make_problem(p.kind, rhs, p.x0, p.initial, merged, p.name);
  }
  return {p, std::nullopt};
}

Method default_method(const Problem& p) {
  switch (p.kind) {
    case ProblemKind::FirstOrder:
      return Method::ExpTypeFOverY;
    case ProblemKind::System:
      return Method::SystemGrowthComponent;
    default:
      return Method::ExpTypeTOverY;
  }
}

bool write_file(const std::string& path, const std::string& content, std::ostream& err) {
  std::ofstream f(path, std::ios::binary);
  if (!f || !(f << content)) {
    err << "error: cannot write '" << path << "'\n";
    return false;
  }
  return true;
}

struct SolveArgs {
  std::string problem;
  std::string method;
  std::string g;
  double lambda = 1.0;
  std::optional<double> s;
  std::vector<double> c;
  double xi0 = 0.0;
  std::optional<std::size_t> k;
  bool full_system = false;
  double h = 0.1;
  double lambda_target = 50.0;
  std::vector<std::string> params;
  std::string out;
  bool two_stage = false;
};

int cmd_solve(const SolveArgs& a, std::ostream& out, std::ostream& err) {
  const Loaded loaded = load_problem(a.problem, parse_params(a.params));
  TransformSpec spec;
  spec.method = a.method.empty() ? default_method(loaded.problem) : method_from_string(a.method);
  if (!a.g.empty()) spec.g = a.g;
  spec.lambda = a.lambda;
  spec.s = a.s;
  spec.c = a.c;
  spec.xi0 = a.xi0;
  spec.k = a.k;
  spec.closed_form = !a.full_system;

  StopPolicy stop;
  stop.lambda_target = a.lambda_target;
  SolveReport report;
  if (a.two_stage) {
    if (!a.method.empty() && spec.method != Method::ExpTypeFOverY) {
      throw ValidationError("--two-stage uses the exp-f-over-y transform in stage 2");
    }
    report = solve_two_stage(loaded.problem, stop, a.h);
  } else {
    report = solve(loaded.problem, spec, stop, a.h);
  }

  out << "method: " << to_string(report.method) << '\n';
  out << "stop reason: " << to_string(report.stop_reason) << '\n';
  out << "nodes: " << report.ps.size() << '\n';
  if (report.growing_component > 0) out << "growing component: " << report.growing_component << '\n';
  if (report.stage_boundary) {
    out << "stage boundary: x_m=" << format_double(report.stage_boundary->x_m)
        << " y_m=" << format_double(report.stage_boundary->y_m) << '\n';
  }
  out << "x_star_estimate: " << format_double(report.x_star_estimate) << '\n';
  out << "x_star_extrapolated: " << format_double(report.x_star_extrapolated) << '\n';
  out << "tail 1/beta: " << (report.diagnostics ? format_double(report.diagnostics->tail_value()) : "n/a") << '\n';

  if (!a.out.empty()) {
    if (!write_file(a.out + ".csv", solution_csv(report.ps), err)) return kFailure;
    if (!write_file(a.out + ".json", to_json(report) + "\n", err)) return kFailure;
  }
  if (report.stop_reason == StopReason::Guard || report.stop_reason == StopReason::NonFinite) {
    err << "error: integration halted (" << to_string(report.stop_reason) << ")\n";
    return kNumerical;
  }
  return kOk;
}

struct EstimateArgs {
  std::string problem;
  std::string mode = "auto";
  std::optional<double> a;
  std::string minorant;
  double kappa = 1.0;
  std::vector<std::string> params;
};

json bounds_json(const BoundsReport& r) { return json::parse(to_json(r)); }

int cmd_estimate(const EstimateArgs& args, std::ostream& out) {
  const Loaded loaded = load_problem(args.problem, parse_params(args.params));
  const Problem& p = loaded.problem;
  const ParamMap& params = p.params;

  if (args.mode == "exponents") {
    out << to_json(exponent_solve(reduce_to_system(p))) << '\n';
    return kOk;
  }
  if (args.mode != "auto" && args.mode != "one-sided" && args.mode != "two-sided") {
    throw ValidationError("unknown mode '" + args.mode + "'");
  }
  if (p.kind != ProblemKind::FirstOrder) {
    if (args.mode != "auto") throw ValidationError("bounds need a first-order problem");
    out << to_json(exponent_solve(reduce_to_system(p))) << '\n';
    return kOk;
  }

  const double a = args.a.value_or(p.initial.front());
  const Expr& f = p.rhs.front();
  const QuadratureOptions quad = quadrature_options_from_env();
  std::optional<std::string> minorant;
  if (!args.minorant.empty()) {
    minorant = args.minorant;
  } else if (loaded.entry) {
    minorant = loaded.entry->minorant;
  }
  std::set<std::string> names;
  for (const auto& [k, v] : params) names.insert(k);

  auto one_sided = [&] {
    if (!minorant) throw ValidationError("one-sided mode needs a minorant (--minorant)");
    BoundsReport r;
    r.I_g = one_sided_bound(f, parse(*minorant, names), a, params, p.x0, quad);
    return r;
  };

  if (args.mode == "one-sided") {
    out << to_json(one_sided()) << '\n';
    return kOk;
  }
  if (args.mode == "two-sided") {
    out << to_json(two_sided_bound(f, a, params, p.x0, quad)) << '\n';
    return kOk;
  }

  // auto
  json doc;
  if (!f.depends_on("x")) {
    doc["x_star"] = nullptr;
    if (const auto xs = x_star_autonomous(f, a, params, quad)) doc["x_star"] = p.x0 + *xs;
    doc["criterion_necessary"] = criterion_necessary(f, a, params);
    doc["criterion_sufficient"] = criterion_sufficient(f, args.kappa, a, params);
    doc["kappa"] = args.kappa;
  }
  BoundsReport r = two_sided_bound(f, a, params, p.x0, quad);
  if (r.bounds_case == BoundsCase::OneSidedOnly && minorant) r.I_g = one_sided().I_g;
  doc["bounds"] = bounds_json(r);
  out << doc.dump(2) << '\n';
  return kOk;
}

struct BenchArgs {
  std::string table;
  std::vector<double> targets;
  std::string out_dir;
  bool skip_slow = false;
};

int cmd_bench(const BenchArgs& args, std::ostream& out) {
  const TableId t = table_from_string(args.table);
  const std::vector<double> targets = args.targets.empty() ? published_targets(t) : args.targets;
  bool ordering_ok = true;
  for (double target : targets) {
    const BenchTable table = run_table(t, target, !args.skip_slow);
    const std::string csv = bench_csv(table);
    const std::string tag = std::string(to_string(t)) + " target " + format_double(target) + "%";
    out << "# " << tag << '\n' << csv;
    if (!args.out_dir.empty()) {
      std::filesystem::create_directories(args.out_dir);
      const auto path = std::filesystem::path(args.out_dir) /
                        (std::string(to_string(t)) + "_" + format_double(target) + ".csv");
      std::ofstream f(path, std::ios::binary);
      if (!f || !(f << csv)) throw std::runtime_error("cannot write '" + path.string() + "'");
    }

    std::vector<const BenchCell*> ranked;
    for (const auto& c : table.cells) ranked.push_back(&c);
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const BenchCell* l, const BenchCell* r) { return l->n_points < r->n_points; });
    out << "ranking:";
    for (const auto* c : ranked) out << ' ' << c->method_label << '[' << c->g_label << "]=" << c->n_points;
    out << '\n';

    const TableCheck check = check_table(table);
    out << "ordering: " << (check.ordering_ok ? "PASS" : "FAIL") << '\n';
    out << "counts: " << (check.counts_ok ? "PASS" : "FAIL") << '\n';
    for (const auto& m : check.messages) out << "  " << m << '\n';
    ordering_ok = ordering_ok && check.ordering_ok;
  }
  return ordering_ok ? kOk : kOrdering;
}

struct NaiveArgs {
  std::string problem = "power1";
  std::string method = "rk4";
  double h = 0.1;
  std::optional<double> x_max;
  std::vector<std::string> params;
};

int cmd_demo_naive(const NaiveArgs& args, std::ostream& out) {
  const Loaded loaded = load_problem(args.problem, parse_params(args.params));
  Integrator method = Integrator::RK4;
  if (args.method == "euler") {
    method = Integrator::Euler;
  } else if (args.method == "midpoint") {
    method = Integrator::Midpoint;
  } else if (args.method != "rk4") {
    throw ValidationError("unknown integrator '" + args.method + "'");
  }
  const NaiveResult r = naive_failure_demo(loaded.problem, method, args.h, args.x_max);
  const Trajectory& tr = r.trajectory;
  out << "integrator: " << to_string(method) << '\n';
  out << "steps: " << (tr.size() - 1) << '\n';
  out << "last finite: x=" << format_double(tr.tau(tr.size() - 1)) << " y=" << format_double(tr.back()[0]) << '\n';
  if (r.x_halt) {
    out << "non-finite at x=" << format_double(*r.x_halt) << '\n';
  } else {
    out << "no overflow before x=" << format_double(tr.tau(tr.size() - 1)) << '\n';
  }
  if (loaded.entry) {
    if (const auto xs = loaded.entry->exact.x_star()) out << "exact x*=" << format_double(*xs) << '\n';
  }
  return kOk;
}

int cmd_list(std::ostream& out) {
  for (const auto& name : registry_names()) {
    const RegistryEntry e = registry_get(name);
    out << std::left << std::setw(20) << name << std::setw(14) << to_string(e.problem.kind) << e.description << '\n';
  }
  return kOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Fixed-step integration of blow-up problems through non-local transformations", "blowup"};
  app.set_help_flag("--help", "Print this help message and exit");
  app.require_subcommand(1);

  SolveArgs solve_args;
  auto* solve_cmd = app.add_subcommand("solve", "Integrate a problem through a transform");
  solve_cmd->add_option("problem", solve_args.problem, "Registry name or JSON file")->required();
  solve_cmd->add_option("--method", solve_args.method, "Transform (kebab-case); default depends on the problem kind");
  solve_cmd->add_option("--g", solve_args.g, "Gauge expression for nonlocal/constraint methods");
  solve_cmd->add_option("--lambda", solve_args.lambda, "Modified-differential lambda");
  solve_cmd->add_option("--s", solve_args.s, "Arc-length exponent s");
  solve_cmd->add_option("--c", solve_args.c, "Arc-length coefficients c0..cn")->delimiter(',');
  solve_cmd->add_option("--xi0", solve_args.xi0, "Constraint offset xi0");
  solve_cmd->add_option("--k", solve_args.k, "Growing component (1-based) for growth methods");
  solve_cmd->add_flag("--full-system", solve_args.full_system, "Integrate the exponential slot numerically");
  solve_cmd->add_option("--h", solve_args.h, "Step in the transform parameter")->check(CLI::PositiveNumber);
  solve_cmd->add_option("--lambda-target", solve_args.lambda_target, "Stop when Lambda_m reaches this value")
      ->check(CLI::PositiveNumber);
  solve_cmd->add_option("--param", solve_args.params, "Parameter override name=value (repeatable)");
  solve_cmd->add_option("--out", solve_args.out, "Output prefix for <prefix>.csv and <prefix>.json");
  solve_cmd->add_flag("--two-stage", solve_args.two_stage, "Naive stage followed by exp-f-over-y");

  EstimateArgs est_args;
  auto* est_cmd = app.add_subcommand("estimate", "Bounds on x* and power-law exponents");
  est_cmd->add_option("problem", est_args.problem, "Registry name or JSON file")->required();
  est_cmd->add_option("--mode", est_args.mode, "auto | one-sided | two-sided | exponents")
      ->check(CLI::IsMember({"auto", "one-sided", "two-sided", "exponents"}));
  est_cmd->add_option("--a", est_args.a, "Initial value y(x0); defaults to the problem's");
  est_cmd->add_option("--minorant", est_args.minorant, "g(y) <= f(x, y) for the one-sided bound");
  est_cmd->add_option("--kappa", est_args.kappa, "Exponent for the sufficient criterion")->check(CLI::PositiveNumber);
  est_cmd->add_option("--param", est_args.params, "Parameter override name=value (repeatable)");

  BenchArgs bench_args;
  auto* bench_cmd = app.add_subcommand("bench", "Calibrate the comparison tables");
  bench_cmd->add_option("--table", bench_args.table, "T1, T2 or T3")->required();
  bench_cmd->add_option("--target", bench_args.targets, "Target max error in percent (repeatable)")
      ->check(CLI::PositiveNumber);
  bench_cmd->add_option("--out", bench_args.out_dir, "Directory for <table>_<target>.csv");
  bench_cmd->add_flag("--skip-slow", bench_args.skip_slow, "Skip the T3 arc-length family rows");

  NaiveArgs naive_args;
  auto* naive_cmd = app.add_subcommand("demo-naive", "Direct integration until overflow");
  naive_cmd->add_option("problem", naive_args.problem, "Registry name or JSON file (default power1)");
  naive_cmd->add_option("--method", naive_args.method, "rk4 | euler | midpoint")
      ->check(CLI::IsMember({"rk4", "euler", "midpoint"}));
  naive_cmd->add_option("--h", naive_args.h, "Step in x")->check(CLI::PositiveNumber);
  naive_cmd->add_option("--x-max", naive_args.x_max, "End of the x range (default x0 + 10)");
  naive_cmd->add_option("--param", naive_args.params, "Parameter override name=value (repeatable)");

  auto* list_cmd = app.add_subcommand("list-problems", "Registry problems");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kInvalid;
  }

  try {
    if (solve_cmd->parsed()) return cmd_solve(solve_args, out, err);
    if (est_cmd->parsed()) return cmd_estimate(est_args, out);
    if (bench_cmd->parsed()) return cmd_bench(bench_args, out);
    if (naive_cmd->parsed()) return cmd_demo_naive(naive_args, out);
    if (list_cmd->parsed()) return cmd_list(out);
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kInvalid;
  } catch (const NumericalError& e) {
    err << "error: " << e.what() << '\n';
    return kNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kFailure;
}

}  // namespace blowup::cli
