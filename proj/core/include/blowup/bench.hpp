#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "blowup/driver.hpp"
#include "blowup/problems.hpp"
#include "blowup/transforms.hpp"

namespace blowup {

struct ErrorMeasurement {
  double max_error_pct = 0.0;  // over nodes with Lambda_m <= cap
  double xi_max = 0.0;         // parameter span to the first node with Lambda_m >= cap
  std::size_t steps = 0;
};

/// Runs `spec` with RK4 at step h until Lambda_m >= stop.lambda_target and
/// compares y (the primary column) against the exact solution at the
/// computed x. Throws NumericalError when the run stops for any other
/// reason and ValidationError when there is no closed form.
ErrorMeasurement measure(const RegistryEntry& entry, const TransformSpec& spec, double h, const StopPolicy& stop);

/// Percent error only; see measure().
double measure_error(const RegistryEntry& entry, const TransformSpec& spec, double h, const StopPolicy& stop);

struct BenchCell {
  std::string method_label;
  std::string g_label;
  double xi_max = 0.0;
  double h = 0.0;
  long n_points = 0;
  double max_error_pct = 0.0;
  std::optional<long> reference_n;  // published grid-point count, when known
  bool arc_length_family = false;
};

struct CalibrateOptions {
  double lambda_cap = 50.0;
  double h_min = 1e-6;
  double h_max = 10.0;
  double h_start = 0.25;
  std::size_t max_steps = 5'000'000;
};

/// Largest step, rounded down to three significant digits, whose maximum
/// error stays within target_error_pct. The bracket is found by doubling or
/// halving from h_start and then bisected on log h. n_points is the number
/// of steps to xi_max. Throws NumericalError when no step above h_min meets
/// the target.
BenchCell calibrate(const RegistryEntry& entry, const TransformSpec& spec, double target_error_pct,
                    const CalibrateOptions& opts = {});

enum class TableId { T1, T2, T3 };

const char* to_string(TableId t);
/// Accepts "T1".."T3" (case-insensitive). Throws ValidationError.
TableId table_from_string(std::string_view s);

struct BenchRow {
  std::string method_label;
  std::string g_label;
  TransformSpec spec;
  bool arc_length_family = false;
};

/// Problem and row definitions of a comparison table.
RegistryEntry table_problem(TableId t);
std::vector<BenchRow> table_rows(TableId t);
/// Targets with published grid-point counts.
std::vector<double> published_targets(TableId t);

struct BenchTable {
  TableId table = TableId::T1;
  double target_error_pct = 0.1;
  double lambda_cap = 50.0;
  std::vector<BenchCell> cells;  // row order of the table
};

/// Calibrates every row. Rows flagged arc-length-family are skipped for T3
/// unless include_slow is set.
BenchTable run_table(TableId t, double target_error_pct, bool include_slow = true);

struct TableCheck {
  bool ordering_ok = true;
  bool counts_ok = true;
  std::vector<std::string> messages;
};

/// Compares against the published counts: every pair whose reference counts
/// differ by 5% or more must keep its order; counts must lie within 30%
/// (factor 2 for the arc-length family). Cells without a reference are
/// skipped.
TableCheck check_table(const BenchTable& table);

/// CSV with columns method,g,xi_max,h,n_points,max_error_pct.
std::string bench_csv(const BenchTable& table);

}  // namespace blowup
