#pragma once

#include <string>
#include <string_view>

#include "blowup/driver.hpp"
#include "blowup/estimates.hpp"
#include "blowup/problems.hpp"
#include "blowup/solution.hpp"
#include "blowup/transforms.hpp"

namespace blowup {

/// Shortest round-trip representation with '.' as decimal separator;
/// "nan", "inf" and "-inf" for non-finite values.
std::string format_double(double v);

/// Quotes a CSV field when it contains a comma, quote or newline.
std::string csv_field(std::string_view s);

/// "first-order", "second-order", "nth-order", "system".
const char* to_string(ProblemKind k);
ProblemKind problem_kind_from_string(std::string_view s);

/// {kind, rhs: [text], x0, initial: [..], params: {..}, name?}.
/// Throws ParseError for malformed JSON and ValidationError for a
/// well-formed document that does not describe a valid problem.
Problem problem_from_json(std::string_view text);
Problem problem_from_json_file(const std::string& path);

/// {method, g?, lambda?, s?, c?, xi0?, k?, closed_form?}.
std::string to_json(const TransformSpec& spec);
TransformSpec transform_spec_from_json(std::string_view text);

std::string to_json(const SolveReport& report);
std::string to_json(const BoundsReport& report);
std::string to_json(const ExponentReport& report);

/// Columns xi, x, the state columns, lambda_m; one row per node.
std::string solution_csv(const ParametricSolution& ps);

}  // namespace blowup
