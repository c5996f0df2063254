#include "roaforge/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>

#include "roaforge/common.hpp"

namespace roaforge {

namespace {

struct Const final : Expr {
  double value;
  explicit Const(double v) : value(v) {}
  double eval(const double*) const override { return value; }
};

struct Var final : Expr {
  int index;
  explicit Var(int i) : index(i) {}
  double eval(const double* x) const override { return x[index]; }
};

struct Binary final : Expr {
  char op;
  ExprPtr lhs, rhs;
  Binary(char o, ExprPtr l, ExprPtr r) : op(o), lhs(std::move(l)), rhs(std::move(r)) {}
  double eval(const double* x) const override {
    const double a = lhs->eval(x);
    const double b = rhs->eval(x);
    switch (op) {
      case '+': return a + b;
      case '-': return a - b;
      case '*': return a * b;
      default: return a / b;
    }
  }
};

struct Negate final : Expr {
  ExprPtr inner;
  explicit Negate(ExprPtr e) : inner(std::move(e)) {}
  double eval(const double* x) const override { return -inner->eval(x); }
};

struct Call final : Expr {
  enum class Fn { Sin, Cos, Tanh, Exp } fn;
  ExprPtr arg;
  Call(Fn f, ExprPtr a) : fn(f), arg(std::move(a)) {}
  double eval(const double* x) const override {
    const double a = arg->eval(x);
    switch (fn) {
      case Fn::Sin: return std::sin(a);
      case Fn::Cos: return std::cos(a);
      case Fn::Tanh: return std::tanh(a);
      default: return std::exp(a);
    }
  }
};

class Parser {
 public:
  Parser(const std::string& text, int n) : text_(text), n_(n) {}

  ExprPtr parse() {
    auto e = expression();
    skip_ws();
    if (pos_ != text_.size()) fail("unexpected trailing input");
    return e;
  }

 private:
  ExprPtr expression() {
    auto lhs = term();
    for (;;) {
      skip_ws();
      if (peek() == '+' || peek() == '-') {
        const char op = take();
        lhs = std::make_unique<Binary>(op, std::move(lhs), term());
      } else {
        return lhs;
      }
    }
  }

  ExprPtr term() {
    auto lhs = factor();
    for (;;) {
      skip_ws();
      if (peek() == '*' || peek() == '/') {
        const char op = take();
        lhs = std::make_unique<Binary>(op, std::move(lhs), factor());
      } else {
        return lhs;
      }
    }
  }

  ExprPtr factor() {
    skip_ws();
    if (peek() == '-') {
      take();
      return std::make_unique<Negate>(factor());
    }
    if (peek() == '+') {
      take();
      return factor();
    }
    return primary();
  }

  ExprPtr primary() {
    skip_ws();
    const char c = peek();
    if (c == '(') {
      take();
      auto e = expression();
      expect(')');
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c))) return identifier();
    fail("expected number, variable, function or '('");
    return nullptr;
  }

  ExprPtr number() {
    const char* begin = text_.c_str() + pos_;
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin) fail("malformed number");
    pos_ += static_cast<std::size_t>(end - begin);
    return std::make_unique<Const>(v);
  }

  ExprPtr identifier() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
      ++pos_;
    }
    const std::string name = text_.substr(start, pos_ - start);
    if (name.size() >= 2 && name[0] == 'x') {
      bool digits = true;
      for (std::size_t i = 1; i < name.size(); ++i) {
        digits = digits && std::isdigit(static_cast<unsigned char>(name[i]));
      }
      if (digits) {
        const int idx = std::atoi(name.c_str() + 1);
        if (idx < 1 || idx > n_) {
          fail("variable " + name + " out of range (state dimension " + std::to_string(n_) + ")");
        }
        return std::make_unique<Var>(idx - 1);
      }
    }
    Call::Fn fn;
    if (name == "sin") {
      fn = Call::Fn::Sin;
    } else if (name == "cos") {
      fn = Call::Fn::Cos;
    } else if (name == "tanh") {
      fn = Call::Fn::Tanh;
    } else if (name == "exp") {
      fn = Call::Fn::Exp;
    } else {
      fail("unknown identifier '" + name + "'");
      return nullptr;
    }
    expect('(');
    auto arg = expression();
    expect(')');
    return std::make_unique<Call>(fn, std::move(arg));
  }

  char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }
  char take() { return text_[pos_++]; }

  void expect(char c) {
    skip_ws();
    if (peek() != c) fail(std::string("expected '") + c + "'");
    take();
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  [[noreturn]] void fail(const std::string& why) const {
    throw ConfigError("expression parse error at position " + std::to_string(pos_) + ": " + why +
                      " in \"" + text_ + "\"");
  }

  const std::string& text_;
  int n_;
  std::size_t pos_ = 0;
};

}  // namespace

ExprPtr parse_expression(const std::string& text, int n) { return Parser(text, n).parse(); }

}  // namespace roaforge
