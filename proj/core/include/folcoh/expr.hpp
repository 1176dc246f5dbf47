// Scalar expression DSL used by grid case definitions: metric entries, frame
// components, bump profiles. Grammar (EBNF):
//   expr   := term (("+"|"-") term)*
//   term   := factor (("*"|"/") factor)*
//   factor := "-" factor | primary ("^" factor)?   // ^ right-assoc, tighter than unary -
//   primary:= number | ident | ident "(" expr ")" | "(" expr ")"
// Functions: sin cos exp sqrt log abs. Idents that are not function calls are
// variables or named constants, resolved at evaluation time.
#pragma once

#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace folcoh::expr {

struct Span {
  size_t begin = 0;
  size_t end = 0;
};

struct ParseError : std::runtime_error {
  size_t offset;
  std::string expected;
  ParseError(const std::string& msg, size_t off, std::string exp)
      : std::runtime_error(msg), offset(off), expected(std::move(exp)) {}
};

struct EvalError : std::runtime_error {
  Span span;
  EvalError(const std::string& msg, Span s) : std::runtime_error(msg), span(s) {}
};

enum class Kind { Number, Ident, Neg, Binary, Call };

struct Node {
  Kind kind;
  double number = 0.0;     // Number
  std::string name;        // Ident / Call
  char op = 0;             // Binary: + - * / ^
  std::vector<Node> kids;  // Neg: 1, Binary: 2, Call: 1
  Span span;
};

using Env = std::map<std::string, double>;

class Ast {
 public:
  static Ast parse(const std::string& source);

  double evaluate(const Env& variables, const Env& constants = {}) const;
  std::string to_string() const;
  const Node& root() const { return root_; }

  // Structural equality ignoring spans (used by the round-trip property test).
  static bool same_shape(const Node& a, const Node& b);

 private:
  Node root_;
};

}  // namespace folcoh::expr
