#include "blowup/expr.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <optional>
#include <utility>

#include "blowup/error.hpp"

namespace blowup {

namespace {

using Kind = ExprNode::Kind;

struct FuncName {
  std::string_view name;
  Func func;
};

constexpr std::array<FuncName, 8> kFunctions{{
    {"exp", Func::Exp},
    {"ln", Func::Ln},
    {"sin", Func::Sin},
    {"cos", Func::Cos},
    {"tan", Func::Tan},
    {"arctan", Func::Arctan},
    {"sqrt", Func::Sqrt},
    {"abs", Func::Abs},
}};

std::optional<Func> lookup_function(std::string_view name) {
  for (const auto& f : kFunctions) {
    if (f.name == name) return f.func;
  }
  return std::nullopt;
}

std::string_view function_name(Func f) {
  for (const auto& entry : kFunctions) {
    if (entry.func == f) return entry.name;
  }
  return "?";
}

NodePtr make_number(double v) {
  auto n = std::make_shared<ExprNode>();
  n->kind = Kind::Number;
  n->number = v;
  return n;
}

NodePtr make_variable(std::string name) {
  auto n = std::make_shared<ExprNode>();
  n->kind = Kind::Variable;
  n->name = std::move(name);
  return n;
}

NodePtr make_unary(Kind kind, NodePtr operand) {
  auto n = std::make_shared<ExprNode>();
  n->kind = kind;
  n->lhs = std::move(operand);
  return n;
}

NodePtr make_binary(Kind kind, NodePtr lhs, NodePtr rhs) {
  auto n = std::make_shared<ExprNode>();
  n->kind = kind;
  n->lhs = std::move(lhs);
  n->rhs = std::move(rhs);
  return n;
}

NodePtr make_call(Func f, NodePtr arg) {
  auto n = std::make_shared<ExprNode>();
  n->kind = Kind::Call;
  n->func = f;
  n->lhs = std::move(arg);
  return n;
}

bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool is_ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }
bool is_digit(char c) { return c >= '0' && c <= '9'; }

// Recursive-descent parser; one method per grammar rule.
class Parser {
 public:
  explicit Parser(std::string_view src) : src_(src) {}

  NodePtr parse_all() {
    NodePtr root = parse_expr();
    skip_ws();
    if (pos_ != src_.size()) fail("unexpected '" + std::string(1, src_[pos_]) + "'");
    return root;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, pos_); }

  void skip_ws() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  NodePtr parse_expr() {
    NodePtr lhs = parse_term();
    for (;;) {
      if (accept('+')) {
        lhs = make_binary(Kind::Add, lhs, parse_term());
      } else if (accept('-')) {
        lhs = make_binary(Kind::Sub, lhs, parse_term());
      } else {
        return lhs;
      }
    }
  }

  NodePtr parse_term() {
    NodePtr lhs = parse_factor();
    for (;;) {
      if (accept('*')) {
        lhs = make_binary(Kind::Mul, lhs, parse_factor());
      } else if (accept('/')) {
        lhs = make_binary(Kind::Div, lhs, parse_factor());
      } else {
        return lhs;
      }
    }
  }

  NodePtr parse_factor() {
    if (accept('-')) return make_unary(Kind::Negate, parse_power());
    return parse_power();
  }

  NodePtr parse_power() {
    NodePtr base = parse_atom();
    if (accept('^')) return make_binary(Kind::Pow, base, parse_factor());
    return base;
  }

  NodePtr parse_atom() {
    skip_ws();
    if (pos_ >= src_.size()) fail("unexpected end of input");
    const char c = src_[pos_];
    if (c == '(') {
      ++pos_;
      NodePtr inner = parse_expr();
      if (!accept(')')) fail("expected ')'");
      return inner;
    }
    if (is_digit(c) || c == '.') return parse_number();
    if (is_ident_start(c)) return parse_identifier();
    fail("unexpected '" + std::string(1, c) + "'");
  }

  NodePtr parse_number() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() && is_digit(src_[pos_])) ++pos_;
    if (pos_ < src_.size() && src_[pos_] == '.') {
      ++pos_;
      while (pos_ < src_.size() && is_digit(src_[pos_])) ++pos_;
    }
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      std::size_t p = pos_ + 1;
      if (p < src_.size() && (src_[p] == '+' || src_[p] == '-')) ++p;
      if (p < src_.size() && is_digit(src_[p])) {
        while (p < src_.size() && is_digit(src_[p])) ++p;
        pos_ = p;
      }
    }
    double value = 0.0;
    const char* first = src_.data() + start;
    const char* last = src_.data() + pos_;
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last) {
      pos_ = start;
      fail("malformed number");
    }
    return make_number(value);
  }

  NodePtr parse_identifier() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() && is_ident_char(src_[pos_])) ++pos_;
    std::string name(src_.substr(start, pos_ - start));
    skip_ws();
    const bool call = pos_ < src_.size() && src_[pos_] == '(';
    auto func = lookup_function(name);
    if (call) {
      if (!func) {
        pos_ = start;
        fail("unknown function '" + name + "'");
      }
      ++pos_;
      NodePtr arg = parse_expr();
      if (!accept(')')) fail("expected ')'");
      return make_call(*func, arg);
    }
    if (func) {
      pos_ = start;
      fail("function '" + name + "' requires an argument list");
    }
    return make_variable(std::move(name));
  }

  std::string_view src_;
  std::size_t pos_ = 0;
};

void collect_identifiers(const NodePtr& n, std::vector<std::string>& out) {
  if (!n) return;
  if (n->kind == Kind::Variable) {
    if (std::find(out.begin(), out.end(), n->name) == out.end()) out.push_back(n->name);
    return;
  }
  collect_identifiers(n->lhs, out);
  collect_identifiers(n->rhs, out);
}

std::string format_number(double v) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

std::string to_text(const NodePtr& n) {
  switch (n->kind) {
    case Kind::Number:
      return n->number < 0 ? "(-" + format_number(-n->number) + ")" : format_number(n->number);
    case Kind::Variable:
      return n->name;
    case Kind::Negate:
      return "(-" + to_text(n->lhs) + ")";
    case Kind::Call:
      return std::string(function_name(n->func)) + "(" + to_text(n->lhs) + ")";
    case Kind::Add:
      return "(" + to_text(n->lhs) + "+" + to_text(n->rhs) + ")";
    case Kind::Sub:
      return "(" + to_text(n->lhs) + "-" + to_text(n->rhs) + ")";
    case Kind::Mul:
      return "(" + to_text(n->lhs) + "*" + to_text(n->rhs) + ")";
    case Kind::Div:
      return "(" + to_text(n->lhs) + "/" + to_text(n->rhs) + ")";
    case Kind::Pow:
      return "(" + to_text(n->lhs) + "^" + to_text(n->rhs) + ")";
  }
  return {};
}

NodePtr rename_tree(const NodePtr& n, const std::map<std::string, std::string>& mapping) {
  if (!n) return n;
  if (n->kind == Kind::Variable) {
    auto it = mapping.find(n->name);
    return it == mapping.end() ? n : make_variable(it->second);
  }
  if (n->kind == Kind::Number) return n;
  auto copy = std::make_shared<ExprNode>(*n);
  copy->lhs = rename_tree(n->lhs, mapping);
  copy->rhs = rename_tree(n->rhs, mapping);
  return copy;
}

}  // namespace

Expr::Expr(NodePtr root) : root_(std::move(root)) {
  collect_identifiers(root_, identifiers_);
  free_vars_ = identifiers_;
}

bool Expr::depends_on(std::string_view name) const {
  return std::find(identifiers_.begin(), identifiers_.end(), name) != identifiers_.end();
}

std::string Expr::to_string() const { return root_ ? to_text(root_) : std::string{}; }

Expr Expr::renamed(const std::map<std::string, std::string>& mapping) const {
  Expr out(rename_tree(root_, mapping));
  // Keep the parameter split of the original.
  std::vector<std::string> free;
  for (const auto& id : out.identifiers_) {
    bool was_param = true;
    for (const auto& v : free_vars_) {
      auto it = mapping.find(v);
      const std::string& mapped = it == mapping.end() ? v : it->second;
      if (mapped == id) was_param = false;
    }
    if (!was_param) free.push_back(id);
  }
  out.free_vars_ = std::move(free);
  return out;
}

Expr parse(std::string_view src, const std::set<std::string>& parameters) {
  Parser parser(src);
  Expr e(parser.parse_all());
  std::erase_if(e.free_vars_, [&](const std::string& id) { return parameters.count(id) > 0; });
  return e;
}

// ---------------------------------------------------------------------------
// Compiled evaluation

struct BoundExpr::Instr {
  enum class Op { Const, Var, Neg, Add, Sub, Mul, Div, Pow, PowInt, Call };
  Op op = Op::Const;
  double value = 0.0;
  std::size_t slot = 0;
  int exponent = 0;
  Func func = Func::Exp;
};

struct BoundExpr::Program {
  std::vector<Instr> code;
  std::size_t max_depth = 0;
};

namespace {

using Instr = BoundExpr::Instr;
using Op = Instr::Op;

std::optional<double> constant_value(const NodePtr& n, std::span<const std::string> slots,
                                     const ParamMap& params) {
  if (n->kind == Kind::Number) return n->number;
  if (n->kind == Kind::Variable) {
    if (std::find(slots.begin(), slots.end(), n->name) != slots.end()) return std::nullopt;
    auto it = params.find(n->name);
    if (it != params.end()) return it->second;
    return std::nullopt;
  }
  if (n->kind == Kind::Negate) {
    auto v = constant_value(n->lhs, slots, params);
    if (v) return -*v;
  }
  return std::nullopt;
}

void compile(const NodePtr& n, std::span<const std::string> slots, const ParamMap& params,
             std::vector<Instr>& code) {
  switch (n->kind) {
    case Kind::Number:
      code.push_back({Op::Const, n->number});
      return;
    case Kind::Variable: {
      auto it = std::find(slots.begin(), slots.end(), n->name);
      if (it != slots.end()) {
        Instr in{Op::Var};
        in.slot = static_cast<std::size_t>(it - slots.begin());
        code.push_back(in);
        return;
      }
      auto p = params.find(n->name);
      if (p == params.end()) throw ValidationError("unbound identifier '" + n->name + "'");
      code.push_back({Op::Const, p->second});
      return;
    }
    case Kind::Negate:
      compile(n->lhs, slots, params, code);
      code.push_back({Op::Neg});
      return;
    case Kind::Call: {
      compile(n->lhs, slots, params, code);
      Instr in{Op::Call};
      in.func = n->func;
      code.push_back(in);
      return;
    }
    case Kind::Pow: {
      compile(n->lhs, slots, params, code);
      auto c = constant_value(n->rhs, slots, params);
      if (c && std::abs(*c) <= 64.0 && std::nearbyint(*c) == *c) {
        Instr in{Op::PowInt};
        in.exponent = static_cast<int>(*c);
        code.push_back(in);
        return;
      }
      compile(n->rhs, slots, params, code);
      code.push_back({Op::Pow});
      return;
    }
    case Kind::Add:
    case Kind::Sub:
    case Kind::Mul:
    case Kind::Div: {
      compile(n->lhs, slots, params, code);
      compile(n->rhs, slots, params, code);
      Op op = n->kind == Kind::Add   ? Op::Add
              : n->kind == Kind::Sub ? Op::Sub
              : n->kind == Kind::Mul ? Op::Mul
                                     : Op::Div;
      code.push_back({op});
      return;
    }
  }
}

std::size_t stack_depth(const std::vector<Instr>& code) {
  std::size_t depth = 0;
  std::size_t max_depth = 0;
  for (const auto& in : code) {
    switch (in.op) {
      case Op::Const:
      case Op::Var:
        ++depth;
        break;
      case Op::Add:
      case Op::Sub:
      case Op::Mul:
      case Op::Div:
      case Op::Pow:
        --depth;
        break;
      default:
        break;
    }
    max_depth = std::max(max_depth, depth);
  }
  return max_depth;
}

double ipow(double x, int n) {
  if (n < 0) return 1.0 / ipow(x, -n);
  double result = 1.0;
  while (n > 0) {
    if (n & 1) result *= x;
    x *= x;
    n >>= 1;
  }
  return result;
}

double apply(Func f, double x) {
  switch (f) {
    case Func::Exp:
      return std::exp(x);
    case Func::Ln:
      return std::log(x);
    case Func::Sin:
      return std::sin(x);
    case Func::Cos:
      return std::cos(x);
    case Func::Tan:
      return std::tan(x);
    case Func::Arctan:
      return std::atan(x);
    case Func::Sqrt:
      return std::sqrt(x);
    case Func::Abs:
      return std::abs(x);
  }
  return std::nan("");
}

// d f(x) / dx
double apply_derivative(Func f, double x, double fx) {
  switch (f) {
    case Func::Exp:
      return fx;
    case Func::Ln:
      return 1.0 / x;
    case Func::Sin:
      return std::cos(x);
    case Func::Cos:
      return -std::sin(x);
    case Func::Tan: {
      const double c = std::cos(x);
      return 1.0 / (c * c);
    }
    case Func::Arctan:
      return 1.0 / (1.0 + x * x);
    case Func::Sqrt:
      return 0.5 / fx;
    case Func::Abs:
      return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0);
  }
  return std::nan("");
}

struct ScalarOps {
  using T = double;
  static T constant(double v) { return v; }
  static T variable(std::span<const double> vars, std::size_t slot, std::span<const std::size_t>) {
    return vars[slot];
  }
  static T neg(const T& a) { return -a; }
  static T add(const T& a, const T& b) { return a + b; }
  static T sub(const T& a, const T& b) { return a - b; }
  static T mul(const T& a, const T& b) { return a * b; }
  static T div(const T& a, const T& b) { return a / b; }
  static T pow(const T& a, const T& b) { return std::pow(a, b); }
  static T powi(const T& a, int n) { return ipow(a, n); }
  static T call(Func f, const T& a) { return apply(f, a); }
};

struct DualOps {
  using T = Dual;
  static constexpr std::size_t N = Dual::kMaxSeeds;

  static T constant(double v) {
    T r;
    r.v = v;
    return r;
  }
  static T variable(std::span<const double> vars, std::size_t slot,
                    std::span<const std::size_t> seeds) {
    T r;
    r.v = vars[slot];
    for (std::size_t i = 0; i < seeds.size(); ++i) r.d[i] = seeds[i] == slot ? 1.0 : 0.0;
    return r;
  }
  static T neg(const T& a) {
    T r;
    r.v = -a.v;
    for (std::size_t i = 0; i < N; ++i) r.d[i] = -a.d[i];
    return r;
  }
  static T add(const T& a, const T& b) {
    T r;
    r.v = a.v + b.v;
    for (std::size_t i = 0; i < N; ++i) r.d[i] = a.d[i] + b.d[i];
    return r;
  }
  static T sub(const T& a, const T& b) {
    T r;
    r.v = a.v - b.v;
    for (std::size_t i = 0; i < N; ++i) r.d[i] = a.d[i] - b.d[i];
    return r;
  }
  static T mul(const T& a, const T& b) {
    T r;
    r.v = a.v * b.v;
    for (std::size_t i = 0; i < N; ++i) r.d[i] = a.d[i] * b.v + a.v * b.d[i];
    return r;
  }
  static T div(const T& a, const T& b) {
    T r;
    r.v = a.v / b.v;
    for (std::size_t i = 0; i < N; ++i) r.d[i] = (a.d[i] * b.v - a.v * b.d[i]) / (b.v * b.v);
    return r;
  }
  static T pow(const T& a, const T& b) {
    T r;
    r.v = std::pow(a.v, b.v);
    const bool const_exponent = std::all_of(b.d.begin(), b.d.end(), [](double x) { return x == 0.0; });
    if (const_exponent) {
      const double scale = b.v * std::pow(a.v, b.v - 1.0);
      for (std::size_t i = 0; i < N; ++i) r.d[i] = a.d[i] == 0.0 ? 0.0 : scale * a.d[i];
    } else {
      const double log_a = std::log(a.v);
      for (std::size_t i = 0; i < N; ++i) {
        const double base_term = a.d[i] == 0.0 ? 0.0 : b.v * a.d[i] / a.v;
        r.d[i] = r.v * (b.d[i] * log_a + base_term);
      }
    }
    return r;
  }
  static T powi(const T& a, int n) {
    T r;
    r.v = ipow(a.v, n);
    const double scale = n == 0 ? 0.0 : n * ipow(a.v, n - 1);
    for (std::size_t i = 0; i < N; ++i) r.d[i] = scale * a.d[i];
    return r;
  }
  static T call(Func f, const T& a) {
    T r;
    r.v = apply(f, a.v);
    const double dv = apply_derivative(f, a.v, r.v);
    for (std::size_t i = 0; i < N; ++i) r.d[i] = a.d[i] == 0.0 ? 0.0 : dv * a.d[i];
    return r;
  }
};

template <class Ops, class T>
T run_program(const BoundExpr::Program& prog, std::span<const double> vars,
              std::span<const std::size_t> seeds, T* stack) {
  std::size_t top = 0;
  for (const auto& in : prog.code) {
    switch (in.op) {
      case Op::Const:
        stack[top++] = Ops::constant(in.value);
        break;
      case Op::Var:
        stack[top++] = Ops::variable(vars, in.slot, seeds);
        break;
      case Op::Neg:
        stack[top - 1] = Ops::neg(stack[top - 1]);
        break;
      case Op::Add:
        --top;
        stack[top - 1] = Ops::add(stack[top - 1], stack[top]);
        break;
      case Op::Sub:
        --top;
        stack[top - 1] = Ops::sub(stack[top - 1], stack[top]);
        break;
      case Op::Mul:
        --top;
        stack[top - 1] = Ops::mul(stack[top - 1], stack[top]);
        break;
      case Op::Div:
        --top;
        stack[top - 1] = Ops::div(stack[top - 1], stack[top]);
        break;
      case Op::Pow:
        --top;
        stack[top - 1] = Ops::pow(stack[top - 1], stack[top]);
        break;
      case Op::PowInt:
        stack[top - 1] = Ops::powi(stack[top - 1], in.exponent);
        break;
      case Op::Call:
        stack[top - 1] = Ops::call(in.func, stack[top - 1]);
        break;
    }
  }
  return stack[0];
}

constexpr std::size_t kInlineStack = 32;

}  // namespace

BoundExpr::BoundExpr(const Expr& e, std::span<const std::string> slots, const ParamMap& params) {
  if (e.empty()) throw ValidationError("cannot bind an empty expression");
  auto prog = std::make_shared<Program>();
  compile(e.root(), slots, params, prog->code);
  prog->max_depth = stack_depth(prog->code);
  program_ = std::move(prog);
}

double BoundExpr::operator()(std::span<const double> vars) const {
  if (program_->max_depth <= kInlineStack) {
    std::array<double, kInlineStack> stack;
    return run_program<ScalarOps>(*program_, vars, {}, stack.data());
  }
  std::vector<double> stack(program_->max_depth);
  return run_program<ScalarOps>(*program_, vars, {}, stack.data());
}

Dual BoundExpr::eval_dual(std::span<const double> vars,
                          std::span<const std::size_t> seed_slots) const {
  if (seed_slots.size() > Dual::kMaxSeeds) throw ValidationError("too many seed variables");
  if (program_->max_depth <= kInlineStack) {
    std::array<Dual, kInlineStack> stack;
    return run_program<DualOps>(*program_, vars, seed_slots, stack.data());
  }
  std::vector<Dual> stack(program_->max_depth);
  return run_program<DualOps>(*program_, vars, seed_slots, stack.data());
}

double eval(const Expr& e, const ParamMap& env, const ParamMap& params) {
  std::vector<std::string> slots;
  std::vector<double> values;
  for (const auto& [name, value] : env) {
    slots.push_back(name);
    values.push_back(value);
  }
  BoundExpr bound(e, slots, params);
  return bound(values);
}

DualValue eval_with_partials(const Expr& e, const ParamMap& env, const std::set<std::string>& seeds,
                             const ParamMap& params) {
  std::vector<std::string> slots;
  std::vector<double> values;
  for (const auto& [name, value] : env) {
    slots.push_back(name);
    values.push_back(value);
  }
  std::vector<std::size_t> seed_slots;
  for (const auto& s : seeds) {
    auto it = std::find(slots.begin(), slots.end(), s);
    if (it == slots.end()) throw ValidationError("seed '" + s + "' has no binding");
    seed_slots.push_back(static_cast<std::size_t>(it - slots.begin()));
  }
  BoundExpr bound(e, slots, params);
  Dual d = bound.eval_dual(values, seed_slots);
  DualValue out;
  out.value = d.v;
  std::size_t i = 0;
  for (const auto& s : seeds) out.partials[s] = d.d[i++];
  return out;
}

}  // namespace blowup
