#pragma once

// Scalar expressions over named variables.
//
// Grammar:
//   expr   := term (('+'|'-') term)*
//   term   := factor (('*'|'/') factor)*
//   factor := ['-'] power
//   power  := atom ['^' factor]
//   atom   := number | ident | func '(' expr ')' | '(' expr ')'
//
// Functions: exp, ln, sin, cos, tan, arctan, sqrt, abs.
// '^' is right-associative; a negative base with a non-integer exponent
// evaluates to NaN (it is reported, never trapped).

#include <array>
#include <cstddef>
#include <map>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace blowup {

using ParamMap = std::map<std::string, double, std::less<>>;

enum class Func { Exp, Ln, Sin, Cos, Tan, Arctan, Sqrt, Abs };

struct ExprNode;
using NodePtr = std::shared_ptr<const ExprNode>;

struct ExprNode {
  enum class Kind { Number, Variable, Negate, Add, Sub, Mul, Div, Pow, Call };

  Kind kind = Kind::Number;
  double number = 0.0;
  std::string name;  // Variable
  Func func = Func::Exp;  // Call
  NodePtr lhs;  // unary operand / left operand / call argument
  NodePtr rhs;
};

/// Immutable parsed expression. Cheap to copy (shared tree).
class Expr {
 public:
  Expr() = default;
  explicit Expr(NodePtr root);

  const NodePtr& root() const noexcept { return root_; }
  bool empty() const noexcept { return root_ == nullptr; }

  /// Identifiers that are not listed as parameters at parse time, in order
  /// of first appearance.
  const std::vector<std::string>& free_vars() const noexcept { return free_vars_; }
  /// Every identifier in the tree, parameters included.
  const std::vector<std::string>& identifiers() const noexcept { return identifiers_; }

  bool depends_on(std::string_view name) const;

  /// Fully parenthesised text that parses back to an equivalent tree.
  std::string to_string() const;

  /// Copy with identifiers renamed (`from -> to`); unknown names are kept.
  Expr renamed(const std::map<std::string, std::string>& mapping) const;

 private:
  friend Expr parse(std::string_view, const std::set<std::string>&);

  NodePtr root_;
  std::vector<std::string> free_vars_;
  std::vector<std::string> identifiers_;
};

/// Parses `src`. Identifiers in `parameters` are excluded from free_vars;
/// they stay symbolic and are bound when the expression is evaluated.
/// Throws ParseError with the byte offset of the first bad token; unknown
/// function names are reported the same way.
Expr parse(std::string_view src, const std::set<std::string>& parameters = {});

/// Evaluates with variables looked up in `env` first, then `params`.
/// Throws ValidationError if an identifier has no binding.
double eval(const Expr& e, const ParamMap& env, const ParamMap& params = {});

/// Forward-mode value and first partial derivatives.
struct DualValue {
  double value = 0.0;
  std::map<std::string, double> partials;
};

DualValue eval_with_partials(const Expr& e, const ParamMap& env,
                             const std::set<std::string>& seeds,
                             const ParamMap& params = {});

/// Fixed-capacity forward-mode dual number.
struct Dual {
  static constexpr std::size_t kMaxSeeds = 8;

  double v = 0.0;
  std::array<double, kMaxSeeds> d{};
};

/// An Expr compiled against a fixed slot layout: every free identifier is
/// resolved either to an index into the variable span or to a parameter
/// value. Evaluation is allocation-free and thread-safe.
class BoundExpr {
 public:
  BoundExpr() = default;

  /// Throws ValidationError when an identifier is neither a slot nor a
  /// parameter.
  BoundExpr(const Expr& e, std::span<const std::string> slots, const ParamMap& params);

  double operator()(std::span<const double> vars) const;

  /// Partials with respect to `seed_slots` (at most Dual::kMaxSeeds);
  /// `d[i]` of the result belongs to `seed_slots[i]`.
  Dual eval_dual(std::span<const double> vars, std::span<const std::size_t> seed_slots) const;

  bool valid() const noexcept { return program_ != nullptr; }

  struct Instr;
  struct Program;

 private:
  std::shared_ptr<const Program> program_;
};

}  // namespace blowup
