#pragma once

#include <memory>
#include <string>
#include <vector>

namespace roaforge {

// Parsed arithmetic expression over state variables x1..xn with
// +, -, *, / and the functions sin, cos, tanh, exp.
class Expr {
 public:
  virtual ~Expr() = default;
  virtual double eval(const double* x) const = 0;
};

using ExprPtr = std::unique_ptr<Expr>;

// Parses a single expression. `n` bounds the variable indices: x1..xn.
// Throws ConfigError with position info on malformed input.
ExprPtr parse_expression(const std::string& text, int n);

}  // namespace roaforge
