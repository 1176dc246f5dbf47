#include "folcoh/expr.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstring>
#include <sstream>

namespace folcoh::expr {
namespace {

enum class Tok { Number, Ident, Plus, Minus, Star, Slash, Caret, LParen, RParen, End };

struct Token {
  Tok kind = Tok::End;
  size_t begin = 0, end = 0;
  double number = 0.0;
  std::string text;
};

class Lexer {
 public:
  explicit Lexer(const std::string& s) : src_(s) {}

  static Token make(Tok k, size_t b, size_t e) {
    Token t;
    t.kind = k;
    t.begin = b;
    t.end = e;
    return t;
  }

  Token next() {
    skip_ws();
    size_t b = pos_;
    if (pos_ >= src_.size()) return make(Tok::End, b, b);
    unsigned char c = src_[pos_];
    // Accept the typographic minus U+2212 as '-'.
    if (c == 0xE2 && pos_ + 2 < src_.size() && (unsigned char)src_[pos_ + 1] == 0x88 &&
        (unsigned char)src_[pos_ + 2] == 0x92) {
      pos_ += 3;
      return make(Tok::Minus, b, pos_);
    }
    switch (c) {
      case '+': ++pos_; return make(Tok::Plus, b, pos_);
      case '-': ++pos_; return make(Tok::Minus, b, pos_);
      case '*': ++pos_; return make(Tok::Star, b, pos_);
      case '/': ++pos_; return make(Tok::Slash, b, pos_);
      case '^': ++pos_; return make(Tok::Caret, b, pos_);
      case '(': ++pos_; return make(Tok::LParen, b, pos_);
      case ')': ++pos_; return make(Tok::RParen, b, pos_);
      default: break;
    }
    if (std::isdigit(c)) return lex_number(b);
    if (std::isalpha(c) || c == '_') {
      while (pos_ < src_.size() && (std::isalnum((unsigned char)src_[pos_]) || src_[pos_] == '_')) ++pos_;
      Token t = make(Tok::Ident, b, pos_);
      t.text = src_.substr(b, pos_ - b);
      return t;
    }
    throw ParseError("unexpected character '" + std::string(1, (char)c) + "'", b, "token");
  }

 private:
  void skip_ws() {
    while (pos_ < src_.size() && std::isspace((unsigned char)src_[pos_])) ++pos_;
  }

  Token lex_number(size_t b) {
    while (pos_ < src_.size() && std::isdigit((unsigned char)src_[pos_])) ++pos_;
    if (pos_ < src_.size() && src_[pos_] == '.') {
      ++pos_;
      while (pos_ < src_.size() && std::isdigit((unsigned char)src_[pos_])) ++pos_;
    }
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      size_t save = pos_;
      ++pos_;
      if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) ++pos_;
      if (pos_ < src_.size() && std::isdigit((unsigned char)src_[pos_])) {
        while (pos_ < src_.size() && std::isdigit((unsigned char)src_[pos_])) ++pos_;
      } else {
        pos_ = save;  // bare 'e' belongs to the next token
      }
    }
    Token t = make(Tok::Number, b, pos_);
    double v = 0.0;
    auto res = std::from_chars(src_.data() + b, src_.data() + pos_, v);
    if (res.ec != std::errc()) throw ParseError("malformed number", b, "number");
    t.number = v;
    return t;
  }

  const std::string& src_;
  size_t pos_ = 0;
};

bool is_function(const std::string& name) {
  static const char* fns[] = {"sin", "cos", "exp", "sqrt", "log", "abs"};
  for (auto* f : fns)
    if (name == f) return true;
  return false;
}

class Parser {
 public:
  explicit Parser(const std::string& s) : lex_(s) { advance(); }

  Node parse_expr() {
    Node lhs = parse_term();
    while (cur_.kind == Tok::Plus || cur_.kind == Tok::Minus) {
      char op = (cur_.kind == Tok::Plus) ? '+' : '-';
      advance();
      Node rhs = parse_term();
      lhs = binary(op, std::move(lhs), std::move(rhs));
    }
    return lhs;
  }

  void expect_end() {
    if (cur_.kind != Tok::End)
      throw ParseError("trailing input", cur_.begin, "end of input");
  }

 private:
  Node parse_term() {
    Node lhs = parse_factor();
    while (cur_.kind == Tok::Star || cur_.kind == Tok::Slash) {
      char op = (cur_.kind == Tok::Star) ? '*' : '/';
      advance();
      Node rhs = parse_factor();
      lhs = binary(op, std::move(lhs), std::move(rhs));
    }
    return lhs;
  }

  // "^" binds tighter than unary minus: -2^2 parses as -(2^2), and the
  // exponent may itself be signed (2^-3).
  Node parse_factor() {
    if (cur_.kind == Tok::Minus) {
      size_t b = cur_.begin;
      advance();
      Node inner = parse_factor();
      Node n;
      n.kind = Kind::Neg;
      n.span = {b, inner.span.end};
      n.kids.push_back(std::move(inner));
      return n;
    }
    Node base = parse_primary();
    if (cur_.kind == Tok::Caret) {
      advance();
      Node exp = parse_factor();  // right-associative
      return binary('^', std::move(base), std::move(exp));
    }
    return base;
  }

  Node parse_primary() {
    if (cur_.kind == Tok::Number) {
      Node n;
      n.kind = Kind::Number;
      n.number = cur_.number;
      n.span = {cur_.begin, cur_.end};
      advance();
      return n;
    }
    if (cur_.kind == Tok::Ident) {
      Node n;
      n.name = cur_.text;
      n.span = {cur_.begin, cur_.end};
      advance();
      if (cur_.kind == Tok::LParen) {
        if (!is_function(n.name))
          throw ParseError("unknown function '" + n.name + "'", n.span.begin,
                           "one of sin cos exp sqrt log abs");
        advance();
        Node arg = parse_expr();
        if (cur_.kind != Tok::RParen)
          throw ParseError("unbalanced parentheses", cur_.begin, ")");
        n.span.end = cur_.end;
        advance();
        n.kind = Kind::Call;
        n.kids.push_back(std::move(arg));
        return n;
      }
      n.kind = Kind::Ident;
      return n;
    }
    if (cur_.kind == Tok::LParen) {
      size_t b = cur_.begin;
      advance();
      Node inner = parse_expr();
      if (cur_.kind != Tok::RParen)
        throw ParseError("unbalanced parentheses", cur_.begin, ")");
      inner.span = {b, cur_.end};
      advance();
      return inner;
    }
    throw ParseError("expected expression", cur_.begin, "number, identifier or (");
  }

  Node binary(char op, Node a, Node b) {
    Node n;
    n.kind = Kind::Binary;
    n.op = op;
    n.span = {a.span.begin, b.span.end};
    n.kids.push_back(std::move(a));
    n.kids.push_back(std::move(b));
    return n;
  }

  void advance() { cur_ = lex_.next(); }

  Lexer lex_;
  Token cur_;
};

double eval_node(const Node& n, const Env& vars, const Env& consts) {
  switch (n.kind) {
    case Kind::Number:
      return n.number;
    case Kind::Ident: {
      if (auto it = vars.find(n.name); it != vars.end()) return it->second;
      if (auto it = consts.find(n.name); it != consts.end()) return it->second;
      throw EvalError("unbound name '" + n.name + "'", n.span);
    }
    case Kind::Neg:
      return -eval_node(n.kids[0], vars, consts);
    case Kind::Binary: {
      double a = eval_node(n.kids[0], vars, consts);
      double b = eval_node(n.kids[1], vars, consts);
      switch (n.op) {
        case '+': return a + b;
        case '-': return a - b;
        case '*': return a * b;
        case '/': return a / b;
        case '^': return std::pow(a, b);
      }
      throw EvalError("bad operator", n.span);
    }
    case Kind::Call: {
      double a = eval_node(n.kids[0], vars, consts);
      if (n.name == "sin") return std::sin(a);
      if (n.name == "cos") return std::cos(a);
      if (n.name == "exp") return std::exp(a);
      if (n.name == "abs") return std::fabs(a);
      if (n.name == "sqrt") {
        if (a < 0.0) throw EvalError("sqrt of negative value", n.span);
        return std::sqrt(a);
      }
      if (n.name == "log") {
        if (a <= 0.0) throw EvalError("log of non-positive value", n.span);
        return std::log(a);
      }
      throw EvalError("unknown function '" + n.name + "'", n.span);
    }
  }
  throw EvalError("corrupt AST", n.span);
}

int precedence_of(const Node& n) {
  switch (n.kind) {
    case Kind::Binary:
      if (n.op == '+' || n.op == '-') return 1;
      if (n.op == '*' || n.op == '/') return 2;
      return 4;  // ^
    case Kind::Neg:
      return 3;
    default:
      return 5;
  }
}

void print_node(const Node& n, std::ostringstream& out, int parent_prec, bool right_side) {
  int prec = precedence_of(n);
  bool parens = prec < parent_prec ||
                // left-assoc ops: a - (b + c) needs parens on the right at equal precedence
                (prec == parent_prec && right_side && prec != 4);
  if (parens) out << '(';
  switch (n.kind) {
    case Kind::Number: {
      char buf[32];
      snprintf(buf, sizeof buf, "%.17g", n.number);
      out << buf;
      break;
    }
    case Kind::Ident:
      out << n.name;
      break;
    case Kind::Neg:
      out << '-';
      print_node(n.kids[0], out, 3, true);
      break;
    case Kind::Binary: {
      // ^ is right-associative: parenthesize an equal-precedence LEFT child.
      int lp = (n.op == '^') ? prec + 1 : prec;
      int rp = prec;
      print_node(n.kids[0], out, lp, false);
      out << n.op;
      print_node(n.kids[1], out, rp, n.op != '^');
      break;
    }
    case Kind::Call:
      out << n.name << '(';
      print_node(n.kids[0], out, 0, false);
      out << ')';
      break;
  }
  if (parens) out << ')';
}

}  // namespace

Ast Ast::parse(const std::string& source) {
  Parser p(source);
  Ast ast;
  ast.root_ = p.parse_expr();
  p.expect_end();
  return ast;
}

double Ast::evaluate(const Env& variables, const Env& constants) const {
  return eval_node(root_, variables, constants);
}

std::string Ast::to_string() const {
  std::ostringstream out;
  print_node(root_, out, 0, false);
  return out.str();
}

bool Ast::same_shape(const Node& a, const Node& b) {
  if (a.kind != b.kind || a.op != b.op || a.name != b.name) return false;
  if (a.kind == Kind::Number && a.number != b.number) return false;
  if (a.kids.size() != b.kids.size()) return false;
  for (size_t i = 0; i < a.kids.size(); ++i)
    if (!same_shape(a.kids[i], b.kids[i])) return false;
  return true;
}

}  // namespace folcoh::expr
