#include "blowup/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "blowup/error.hpp"
#include "json.hpp"

namespace blowup {

using nlohmann::json;

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

const char* to_string(ProblemKind k) {
  switch (k) {
    case ProblemKind::FirstOrder:
      return "first-order";
    case ProblemKind::SecondOrder:
      return "second-order";
    case ProblemKind::NthOrder:
      return "nth-order";
    case ProblemKind::System:
      return "system";
  }
  return "?";
}

ProblemKind problem_kind_from_string(std::string_view s) {
  if (s == "first-order") return ProblemKind::FirstOrder;
  if (s == "second-order") return ProblemKind::SecondOrder;
  if (s == "nth-order") return ProblemKind::NthOrder;
  if (s == "system") return ProblemKind::System;
  throw ValidationError("unknown problem kind '" + std::string(s) + "'");
}

namespace {

json parse_json(std::string_view text) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed JSON: ") + e.what(), e.byte);
  }
}

const json& require(const json& doc, const char* key) {
  if (!doc.is_object() || !doc.contains(key)) throw ValidationError(std::string("missing field '") + key + "'");
  return doc.at(key);
}

double number(const json& v, const char* what) {
  if (!v.is_number()) throw ValidationError(std::string("field '") + what + "' must be a number");
  return v.get<double>();
}

// Non-finite values become null.
json num(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

json opt_num(const std::optional<double>& v) { return v ? num(*v) : json(nullptr); }

json series(const std::vector<double>& v) {
  json arr = json::array();
  for (double d : v) arr.push_back(num(d));
  return arr;
}

}  // namespace

Problem problem_from_json(std::string_view text) {
  const json doc = parse_json(text);
  if (!doc.is_object()) throw ValidationError("problem document must be an object");
  const auto& kind_v = require(doc, "kind");
  if (!kind_v.is_string()) throw ValidationError("field 'kind' must be a string");
  const ProblemKind kind = problem_kind_from_string(kind_v.get<std::string>());

  std::vector<std::string> rhs;
  const auto& rhs_v = require(doc, "rhs");
  if (rhs_v.is_string()) {
    rhs.push_back(rhs_v.get<std::string>());
  } else if (rhs_v.is_array()) {
    for (const auto& r : rhs_v) {
      if (!r.is_string()) throw ValidationError("field 'rhs' must hold strings");
      rhs.push_back(r.get<std::string>());
    }
  } else {
    throw ValidationError("field 'rhs' must be a string or an array of strings");
  }

  const double x0 = doc.contains("x0") ? number(doc.at("x0"), "x0") : 0.0;
  std::vector<double> initial;
  const auto& init_v = require(doc, "initial");
  if (!init_v.is_array()) throw ValidationError("field 'initial' must be an array");
  for (const auto& v : init_v) initial.push_back(number(v, "initial"));

  ParamMap params;
  if (doc.contains("params")) {
    const auto& pv = doc.at("params");
    if (!pv.is_object()) throw ValidationError("field 'params' must be an object");
    for (const auto& [k, v] : pv.items()) params[k] = number(v, "params");
  }
  std::string name = doc.contains("name") && doc.at("name").is_string() ? doc.at("name").get<std::string>() : "";
  return make_problem(kind, rhs, x0, std::move(initial), std::move(params), std::move(name));
}

Problem problem_from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return problem_from_json(buf.str());
}

std::string to_json(const TransformSpec& spec) {
  json doc;
  doc["method"] = to_string(spec.method);
  if (spec.g) doc["g"] = *spec.g;
  doc["lambda"] = spec.lambda;
  if (spec.s) doc["s"] = *spec.s;
  if (!spec.c.empty()) doc["c"] = spec.c;
  doc["xi0"] = spec.xi0;
  if (spec.k) doc["k"] = *spec.k;
  doc["closed_form"] = spec.closed_form;
  return doc.dump();
}

TransformSpec transform_spec_from_json(std::string_view text) {
  const json doc = parse_json(text);
  if (!doc.is_object()) throw ValidationError("transform document must be an object");
  TransformSpec spec;
  const auto& m = require(doc, "method");
  if (!m.is_string()) throw ValidationError("field 'method' must be a string");
  spec.method = method_from_string(m.get<std::string>());
  if (doc.contains("g")) {
    if (!doc.at("g").is_string()) throw ValidationError("field 'g' must be a string");
    spec.g = doc.at("g").get<std::string>();
  }
  if (doc.contains("lambda")) spec.lambda = number(doc.at("lambda"), "lambda");
  if (doc.contains("s")) spec.s = number(doc.at("s"), "s");
  if (doc.contains("c")) {
    if (!doc.at("c").is_array()) throw ValidationError("field 'c' must be an array");
    for (const auto& v : doc.at("c")) spec.c.push_back(number(v, "c"));
  }
  if (doc.contains("xi0")) spec.xi0 = number(doc.at("xi0"), "xi0");
  if (doc.contains("k")) {
    const auto& k = doc.at("k");
    if (!k.is_number_unsigned() || k.get<std::size_t>() == 0) {
      throw ValidationError("field 'k' must be a positive integer");
    }
    spec.k = k.get<std::size_t>();
  }
  if (doc.contains("closed_form")) {
    if (!doc.at("closed_form").is_boolean()) throw ValidationError("field 'closed_form' must be a boolean");
    spec.closed_form = doc.at("closed_form").get<bool>();
  }
  return spec;
}

std::string to_json(const SolveReport& report) {
  json doc;
  doc["method"] = to_string(report.method);
  doc["h"] = num(report.h);
  doc["stop_reason"] = to_string(report.stop_reason);
  doc["parameter"] = report.ps.parameter;
  doc["columns"] = report.ps.columns;
  doc["primary_column"] = report.ps.columns.empty() ? "" : report.ps.columns.at(report.ps.primary);
  doc["nodes"] = report.ps.size();
  doc["x_star_estimate"] = num(report.x_star_estimate);
  doc["x_star_extrapolated"] = num(report.x_star_extrapolated);
  if (report.growing_component > 0) doc["growing_component"] = report.growing_component;
  if (report.stage_boundary) {
    doc["stage_boundary"] = {{"x_m", num(report.stage_boundary->x_m)}, {"y_m", num(report.stage_boundary->y_m)}};
  }
  if (report.diagnostics) {
    doc["tail_inv_beta"] = num(report.diagnostics->tail_value());
    doc["diagnostics"] = {{"xi", series(report.diagnostics->xi)}, {"inv_beta", series(report.diagnostics->inv_beta)}};
  } else {
    doc["tail_inv_beta"] = nullptr;
  }
  return doc.dump(2);
}

std::string to_json(const BoundsReport& report) {
  json doc;
  doc["I_g"] = opt_num(report.I_g);
  doc["I1"] = opt_num(report.I1);
  doc["I2"] = opt_num(report.I2);
  if (report.bracket) {
    doc["bracket"] = {num(report.bracket->first), num(report.bracket->second)};
  } else {
    doc["bracket"] = nullptr;
  }
  doc["case"] = to_string(report.bounds_case);
  return doc.dump(2);
}

std::string to_json(const ExponentReport& report) {
  json doc;
  doc["betas"] = series(report.betas);
  doc["growing_index"] = report.growing_index;
  return doc.dump(2);
}

std::string solution_csv(const ParametricSolution& ps) {
  std::string out = csv_field(ps.parameter);
  for (const auto& c : ps.columns) out += "," + csv_field(c);
  out += ",lambda_m\n";
  for (std::size_t i = 0; i < ps.size(); ++i) {
    out += format_double(ps.xi[i]);
    for (std::size_t c = 0; c < ps.columns.size(); ++c) {
      out += ',';
      out += format_double(ps.values[c][i]);
    }
    out += ',';
    out += format_double(ps.lambda_m[i]);
    out += '\n';
  }
  return out;
}

}  // namespace blowup
