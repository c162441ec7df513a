#include "blowup/bench.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <memory>
#include <sstream>

#include "blowup/error.hpp"
#include "blowup/io.hpp"

namespace blowup {

ErrorMeasurement measure(const RegistryEntry& entry, const TransformSpec& spec, double h, const StopPolicy& stop) {
  const ExactSolution& exact = entry.exact;
  if (!exact.has_components()) throw ValidationError("error measurement needs a closed-form solution");
  const SolveReport report = solve(entry.problem, spec, stop, h);
  if (report.stop_reason != StopReason::LambdaTarget) {
    throw NumericalError(std::string("run stopped before the lambda cap: ") + to_string(report.stop_reason));
  }
  const ParametricSolution& ps = report.ps;
  static const std::vector<std::string> slots{"x"};
  const BoundExpr y_exact(exact.components.at(ps.primary - 1), slots, exact.params);
  const auto x_star = exact.x_star();

  ErrorMeasurement m;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    if (!(ps.lambda_m[i] <= stop.lambda_target)) continue;
    const double x = ps.x()[i];
    if (x_star && !(x < *x_star)) {
      m.max_error_pct = std::numeric_limits<double>::infinity();
      break;
    }
    const double ye = y_exact(std::span<const double>(&x, 1));
    const double err = std::abs(ps.y()[i] - ye) / std::abs(ye) * 100.0;
    if (!(err <= m.max_error_pct)) m.max_error_pct = std::isnan(err) ? std::numeric_limits<double>::infinity() : err;
  }
  m.steps = ps.size() - 1;
  m.xi_max = ps.xi.back() - ps.xi.front();
  return m;
}

double measure_error(const RegistryEntry& entry, const TransformSpec& spec, double h, const StopPolicy& stop) {
  return measure(entry, spec, h, stop).max_error_pct;
}

namespace {

struct Probe {
  bool ok = false;
  ErrorMeasurement m;
};

// h = mantissa * 10^exponent with a three-digit mantissa.
struct Decimal {
  long mantissa = 0;
  int exponent = 0;
  double value() const {
    // Dividing by an exact power of ten keeps values like 0.104 correctly rounded.
    return exponent < 0 ? static_cast<double>(mantissa) / std::pow(10.0, -exponent)
                        : static_cast<double>(mantissa) * std::pow(10.0, exponent);
  }
};

Decimal round_down_3(double h) {
  Decimal d;
  d.exponent = static_cast<int>(std::floor(std::log10(h))) - 2;
  d.mantissa = static_cast<long>(std::floor(h / std::pow(10.0, d.exponent) * (1.0 + 1e-12)));
  return d;
}

}  // namespace

BenchCell calibrate(const RegistryEntry& entry, const TransformSpec& spec, double target_error_pct,
                    const CalibrateOptions& opts) {
  if (!(target_error_pct > 0.0)) throw ValidationError("target error must be positive");
  StopPolicy stop;
  stop.lambda_target = opts.lambda_cap;
  stop.max_steps = opts.max_steps;

  auto probe = [&](double h) {
    Probe p;
    try {
      p.m = measure(entry, spec, h, stop);
      p.ok = p.m.max_error_pct <= target_error_pct;
    } catch (const NumericalError&) {
      p.ok = false;
    }
    return p;
  };

  double lo = 0.0;
  double hi = 0.0;
  double h = opts.h_start;
  if (probe(h).ok) {
    lo = h;
    while (2.0 * lo <= opts.h_max && probe(2.0 * lo).ok) lo *= 2.0;
    hi = 2.0 * lo;
  } else {
    hi = h;
    while (true) {
      if (hi / 2.0 < opts.h_min) throw NumericalError("target error unreachable above the minimum step");
      if (probe(hi / 2.0).ok) break;
      hi /= 2.0;
    }
    lo = hi / 2.0;
  }
  while (hi / lo > 1.001) {
    const double mid = std::sqrt(lo * hi);
    if (probe(mid).ok) {
      lo = mid;
    } else {
      hi = mid;
    }
  }

  Decimal step = round_down_3(lo);
  Probe final_probe;
  for (int attempt = 0; attempt < 100 && step.mantissa > 0; ++attempt, --step.mantissa) {
    final_probe = probe(step.value());
    if (final_probe.ok) break;
  }
  if (!final_probe.ok) throw NumericalError("calibration did not converge to a passing step");

  BenchCell cell;
  cell.h = step.value();
  cell.xi_max = final_probe.m.xi_max;
  cell.n_points = static_cast<long>(final_probe.m.steps);
  cell.max_error_pct = final_probe.m.max_error_pct;
  return cell;
}

const char* to_string(TableId t) {
  switch (t) {
    case TableId::T1:
      return "T1";
    case TableId::T2:
      return "T2";
    case TableId::T3:
      return "T3";
  }
  return "?";
}

TableId table_from_string(std::string_view s) {
  std::string upper(s);
  std::transform(upper.begin(), upper.end(), upper.begin(), [](unsigned char c) { return std::toupper(c); });
  if (upper == "T1") return TableId::T1;
  if (upper == "T2") return TableId::T2;
  if (upper == "T3") return TableId::T3;
  throw ValidationError("unknown table '" + std::string(s) + "'");
}

RegistryEntry table_problem(TableId t) {
  switch (t) {
    case TableId::T1:
      return registry_get("power1");
    case TableId::T2:
      return registry_get("ode2-power");
    case TableId::T3:
      return registry_get("ode3-power");
  }
  throw ValidationError("unknown table");
}

namespace {

TransformSpec with_method(Method m) {
  TransformSpec s;
  s.method = m;
  return s;
}

TransformSpec full_system(Method m) {
  TransformSpec s = with_method(m);
  s.closed_form = false;
  return s;
}

TransformSpec gauge(Method m, std::string g) {
  TransformSpec s = with_method(m);
  s.g = std::move(g);
  return s;
}

TransformSpec modified(double lambda) {
  TransformSpec s = with_method(Method::ModifiedDifferential);
  s.lambda = lambda;
  return s;
}

struct Reference {
  TableId table;
  double target;
  std::vector<long> counts;
};

const std::vector<Reference>& references() {
  static const std::vector<Reference> refs{
      {TableId::T1, 0.1, {213, 164, 125, 25, 24, 17}},
      {TableId::T1, 0.01, {377, 290, 218, 44, 44, 30}},
      {TableId::T1, 0.005, {467, 357, 271, 54, 53, 38}},
      {TableId::T2, 0.1, {6024, 3369, 109, 37, 33, 30, 28}},
      {TableId::T2, 0.005, {12500, 7268, 392, 79, 74, 65, 61}},
      {TableId::T3, 0.1, {320000, 180000, 290, 47, 40, 38}},
      {TableId::T3, 0.01, {560000, 310000, 516, 85, 70, 64}},
  };
  return refs;
}

const Reference* find_reference(TableId t, double target) {
  for (const auto& r : references()) {
    if (r.table == t && std::abs(r.target - target) <= 1e-12 * r.target) return &r;
  }
  return nullptr;
}

}  // namespace

std::vector<BenchRow> table_rows(TableId t) {
  switch (t) {
    case TableId::T1:
      return {
          {"hodograph", "g=f", with_method(Method::Hodograph), false},
          {"arc-length", "g=sqrt(1+f^2)", with_method(Method::ArcLength), true},
          {"nonlocal", "g=1+|f|", with_method(Method::OnePlusAbs), true},
          {"exp-type", "g=f/y", full_system(Method::ExpTypeFOverY), false},
          {"constraint", "g=f/[y(1+2xi)]", gauge(Method::DifferentialConstraint, "f/(y*(1+2*xi))"), false},
          {"modified-differential", "lambda=2", modified(2.0), false},
      };
    case TableId::T2:
      return {
          {"arc-length", "g=sqrt(1+t^2+f^2)", with_method(Method::ArcLength), true},
          {"nonlocal", "g=1+|t|+|f|", with_method(Method::OnePlusAbs), true},
          {"hodograph", "g=t", with_method(Method::Hodograph), false},
          {"exp-type", "g=f/t", full_system(Method::ExpTypeFOverT), false},
          {"constraint", "g=f/[2t(1+2xi)]", gauge(Method::DifferentialConstraint, "f/(2*t*(1+2*xi))"), false},
          {"exp-type", "g=t/y", full_system(Method::ExpTypeTOverY), false},
          {"constraint", "g=t/[2(xi+1)exp(2xi+xi^2)]",
           gauge(Method::DifferentialConstraint, "t/(2*(xi+1)*exp(2*xi+xi^2))"), false},
      };
    case TableId::T3:
      return {
          {"arc-length", "g=sqrt(1+t^2+w^2+f^2)", with_method(Method::ArcLength), true},
          {"nonlocal", "g=1+|t|+|w|+|f|", with_method(Method::OnePlusAbs), true},
          {"hodograph", "g=t", with_method(Method::Hodograph), false},
          {"exp-type", "g=f/w", full_system(Method::ExpTypeFOverW), false},
          {"exp-type", "g=t/y", full_system(Method::ExpTypeTOverY), false},
          {"exp-type", "g=w/t", full_system(Method::ExpTypeWOverT), false},
      };
  }
  return {};
}

std::vector<double> published_targets(TableId t) {
  std::vector<double> out;
  for (const auto& r : references()) {
    if (r.table == t) out.push_back(r.target);
  }
  return out;
}

BenchTable run_table(TableId t, double target_error_pct, bool include_slow) {
  BenchTable table;
  table.table = t;
  table.target_error_pct = target_error_pct;
  const RegistryEntry entry = table_problem(t);
  const Reference* ref = find_reference(t, target_error_pct);
  const auto rows = table_rows(t);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const BenchRow& row = rows[i];
    if (t == TableId::T3 && row.arc_length_family && !include_slow) continue;
    BenchCell cell = calibrate(entry, row.spec, target_error_pct);
    cell.method_label = row.method_label;
    cell.g_label = row.g_label;
    cell.arc_length_family = row.arc_length_family;
    if (ref) cell.reference_n = ref->counts[i];
    table.cells.push_back(std::move(cell));
  }
  return table;
}

TableCheck check_table(const BenchTable& table) {
  TableCheck check;
  const auto& cells = table.cells;
  auto label = [](const BenchCell& c) { return c.method_label + " " + c.g_label; };
  for (const auto& c : cells) {
    if (!c.reference_n) continue;
    const double ref = static_cast<double>(*c.reference_n);
    const double n = static_cast<double>(c.n_points);
    const bool ok = c.arc_length_family ? (n >= ref / 2.0 && n <= ref * 2.0) : std::abs(n - ref) <= 0.3 * ref;
    if (!ok) {
      check.counts_ok = false;
      check.messages.push_back("count out of tolerance: " + label(c) + " n=" + std::to_string(c.n_points) +
                               " reference=" + std::to_string(*c.reference_n));
    }
  }
  for (std::size_t i = 0; i < cells.size(); ++i) {
    for (std::size_t j = 0; j < cells.size(); ++j) {
      if (i == j || !cells[i].reference_n || !cells[j].reference_n) continue;
      const double ri = static_cast<double>(*cells[i].reference_n);
      const double rj = static_cast<double>(*cells[j].reference_n);
      if (ri < 1.05 * rj) continue;  // ties and reversed pairs are handled from the other side
      if (!(cells[i].n_points > cells[j].n_points)) {
        check.ordering_ok = false;
        check.messages.push_back("order broken: " + label(cells[i]) + " (" + std::to_string(cells[i].n_points) +
                                 ") should exceed " + label(cells[j]) + " (" + std::to_string(cells[j].n_points) + ")");
      }
    }
  }
  return check;
}

std::string bench_csv(const BenchTable& table) {
  std::ostringstream out;
  out << "method,g,xi_max,h,n_points,max_error_pct\n";
  for (const auto& c : table.cells) {
    out << csv_field(c.method_label) << ',' << csv_field(c.g_label) << ',' << format_double(c.xi_max) << ','
        << format_double(c.h) << ',' << c.n_points << ',' << format_double(c.max_error_pct) << '\n';
  }
  return out.str();
}

}  // namespace blowup
