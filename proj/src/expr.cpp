#include "toda/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <memory>
#include <numbers>

#include "toda/error.hpp"

namespace toda {
namespace {

class Parser {
 public:
  explicit Parser(const std::string& s) : s_(s) {}

  Expression parse() {
    Expression e = expr();
    skip();
    if (pos_ != s_.size()) fail("unexpected trailing input");
    return e;
  }
  bool uses_coordinates() const { return uses_xy_; }

 private:
  [[noreturn]] void fail(const std::string& why) const {
    throw Error(ErrorKind::InvalidConfig,
                "expression '" + s_ + "': " + why + " at position " + std::to_string(pos_));
  }
  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool accept(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  Expression expr() {
    Expression lhs = term();
    for (;;) {
      if (accept('+')) {
        Expression rhs = term();
        lhs = [lhs, rhs](double x, double y) { return lhs(x, y) + rhs(x, y); };
      } else if (accept('-')) {
        Expression rhs = term();
        lhs = [lhs, rhs](double x, double y) { return lhs(x, y) - rhs(x, y); };
      } else {
        return lhs;
      }
    }
  }

  Expression term() {
    Expression lhs = unary();
    for (;;) {
      if (accept('*')) {
        Expression rhs = unary();
        lhs = [lhs, rhs](double x, double y) { return lhs(x, y) * rhs(x, y); };
      } else if (accept('/')) {
        Expression rhs = unary();
        lhs = [lhs, rhs](double x, double y) { return lhs(x, y) / rhs(x, y); };
      } else {
        return lhs;
      }
    }
  }

  Expression unary() {
    if (accept('-')) {
      Expression inner = unary();
      return [inner](double x, double y) { return -inner(x, y); };
    }
    if (accept('+')) return unary();
    return power();
  }

  Expression power() {
    Expression base = primary();
    if (accept('^')) {
      Expression ex = unary();
      return [base, ex](double x, double y) { return std::pow(base(x, y), ex(x, y)); };
    }
    return base;
  }

  Expression primary() {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end of input");
    const char c = s_[pos_];
    if (accept('(')) {
      Expression inner = expr();
      if (!accept(')')) fail("expected ')'");
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      const char* begin = s_.c_str() + pos_;
      char* end = nullptr;
      const double v = std::strtod(begin, &end);
      if (end == begin) fail("malformed number");
      pos_ += static_cast<std::size_t>(end - begin);
      return [v](double, double) { return v; };
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      std::size_t start = pos_;
      while (pos_ < s_.size() && std::isalnum(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      const std::string name = s_.substr(start, pos_ - start);
      if (name == "x") {
        uses_xy_ = true;
        return [](double x, double) { return x; };
      }
      if (name == "y") {
        uses_xy_ = true;
        return [](double, double y) { return y; };
      }
      if (name == "pi") return [](double, double) { return std::numbers::pi; };
      if (name == "e") return [](double, double) { return std::numbers::e; };
      double (*fn)(double) = nullptr;
      if (name == "sin") fn = [](double v) { return std::sin(v); };
      else if (name == "cos") fn = [](double v) { return std::cos(v); };
      else if (name == "exp") fn = [](double v) { return std::exp(v); };
      else {
        pos_ = start;
        fail("unknown identifier '" + name + "'");
      }
      if (!accept('(')) fail("expected '(' after " + name);
      Expression arg = expr();
      if (!accept(')')) fail("expected ')'");
      return [fn, arg](double x, double y) { return fn(arg(x, y)); };
    }
    fail(std::string("unexpected character '") + c + "'");
  }

  const std::string& s_;
  std::size_t pos_ = 0;
  bool uses_xy_ = false;
};

}  // namespace

Expression parse_expression(const std::string& text) {
  Parser p(text);
  return p.parse();
}

double parse_constant(const std::string& text) {
  Parser p(text);
  Expression e = p.parse();
  if (p.uses_coordinates())
    throw Error(ErrorKind::InvalidConfig, "expression '" + text + "' must be constant");
  return e(0.0, 0.0);
}

}  // namespace toda
