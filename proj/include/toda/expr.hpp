#pragma once

#include <functional>
#include <string>

namespace toda {

// Compiled closed-form expression in the torus coordinates x, y.
// Grammar: expr := term (('+'|'-') term)*; term := unary (('*'|'/') unary)*;
// unary := '-' unary | power; power := primary ('^' unary)?;
// primary := number | pi | e | x | y | (sin|cos|exp) '(' expr ')' | '(' expr ')'.
using Expression = std::function<double(double, double)>;

// Throws Error(InvalidConfig) with the offending position on a syntax error.
Expression parse_expression(const std::string& text);

// Parses an expression that must not depend on x or y and returns its value.
double parse_constant(const std::string& text);

}  // namespace toda
