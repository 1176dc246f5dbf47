#include <doctest.h>

#include <cmath>
#include <random>

#include "folcoh/expr.hpp"

using namespace folcoh::expr;

namespace {

double ev(const std::string& s, Env vars = {}, Env consts = {}) {
  return Ast::parse(s).evaluate(vars, consts);
}

int ulp_gap(double a, double b) {
  if (a == b) return 0;
  int steps = 0;
  double x = a;
  while (x != b && steps < 4) {
    x = std::nextafter(x, b);
    ++steps;
  }
  return steps;
}

}  // namespace

TEST_CASE("arithmetic and precedence") {
  CHECK(ev("1+2*3") == 7.0);
  CHECK(ev("(1+2)*3") == 9.0);
  CHECK(ev("2*3^2") == 18.0);
  CHECK(ev("2^3^2") == 512.0);     // right-associative
  CHECK(ev("-2^2") == -4.0);       // ^ binds tighter than unary minus
  CHECK(ev("2^-3") == 0.125);      // signed exponent
  CHECK(ev("-2*3") == -6.0);
  CHECK(ev("10/4/5") == 0.5);      // left-associative
  CHECK(ev("1e3") == 1000.0);
  CHECK(ev("2.5e-2") == 0.025);
  CHECK(ev("1 - -1") == 2.0);
}

TEST_CASE("functions and names") {
  Env consts{{"pi", M_PI}};
  CHECK(ev("sin(pi*x)", {{"x", 0.5}}, consts) == 1.0);
  CHECK(ev("cos(0)") == 1.0);
  CHECK(ev("sqrt(2)^2", {}, {}) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(ev("exp(log(5))") == doctest::Approx(5.0));
  CHECK(ev("abs(-3)") == 3.0);
  // constants lose to variables of the same name
  CHECK(ev("pi", {{"pi", 1.0}}, consts) == 1.0);
}

TEST_CASE("unicode minus is accepted") {
  CHECK(ev("3 − 1") == 2.0);
  CHECK(ev("−2^2") == -4.0);
}

TEST_CASE("parse errors carry offsets and expectations") {
  CHECK_THROWS_AS(Ast::parse(""), ParseError);
  try {
    Ast::parse("sin(pi*x");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.offset == 8);
    CHECK(e.expected.find(")") != std::string::npos);
  }
  try {
    Ast::parse("1 + * 2");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.offset == 4);
  }
  CHECK_THROWS_AS(Ast::parse("foo(1)"), ParseError);   // unknown function
  CHECK_THROWS_AS(Ast::parse("(1+2"), ParseError);
  CHECK_THROWS_AS(Ast::parse("1 2"), ParseError);      // trailing garbage
  CHECK_THROWS_AS(Ast::parse(".5"), ParseError);       // no leading digits
}

TEST_CASE("evaluation errors carry source spans") {
  try {
    ev("1 + sqrt(0-4)");
    FAIL("expected an evaluation error");
  } catch (const EvalError& e) {
    CHECK(e.span.begin == 4);
  }
  CHECK_THROWS_AS(ev("log(0)"), EvalError);
  CHECK_THROWS_AS(ev("y", {{"x", 1.0}}), EvalError);  // unbound name
}

namespace {

Node make_random(std::mt19937_64& rng, int depth) {
  std::uniform_int_distribution<int> pick(0, depth <= 0 ? 1 : 4);
  std::uniform_real_distribution<double> unif(0.1, 10.0);
  Node n;
  switch (pick(rng)) {
    case 0:
      n.kind = Kind::Number;
      n.number = unif(rng);
      break;
    case 1:
      n.kind = Kind::Ident;
      n.name = (rng() & 1) ? "x" : "y";
      break;
    case 2: {
      n.kind = Kind::Neg;
      n.kids.push_back(make_random(rng, depth - 1));
      break;
    }
    case 3: {
      n.kind = Kind::Call;
      const char* fns[] = {"sin", "cos", "exp", "abs"};
      n.name = fns[rng() % 4];
      n.kids.push_back(make_random(rng, depth - 1));
      break;
    }
    default: {
      n.kind = Kind::Binary;
      const char ops[] = {'+', '-', '*', '/', '^'};
      n.op = ops[rng() % 5];
      n.kids.push_back(make_random(rng, depth - 1));
      if (n.op == '^') {
        // keep powers tame so values stay finite
        Node e;
        e.kind = Kind::Number;
        e.number = static_cast<double>(static_cast<int>(rng() % 5) - 2);
        n.kids.push_back(e);
      } else {
        n.kids.push_back(make_random(rng, depth - 1));
      }
      break;
    }
  }
  return n;
}

}  // namespace

TEST_CASE("print/parse round trip preserves structure") {
  std::mt19937_64 rng(20260815);
  int value_checked = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    Node n = make_random(rng, 4);
    // Render the generated tree with a local printer that mirrors the library's
    // precedence rules, then check the parse -> print -> parse fixpoint.
    struct P {
      static int prec(const Node& m) {
        switch (m.kind) {
          case Kind::Binary:
            return m.op == '^' ? 4 : (m.op == '*' || m.op == '/' ? 2 : 1);
          case Kind::Neg:
            return 3;
          default:
            return 5;
        }
      }
      static void rec(const Node& m, std::string& out) {
        char buf[40];
        switch (m.kind) {
          case Kind::Number:
            snprintf(buf, sizeof buf, "%.17g", m.number);
            out += buf;
            break;
          case Kind::Ident:
            out += m.name;
            break;
          case Kind::Call:
            out += m.name;
            out += '(';
            rec(m.kids[0], out);
            out += ')';
            break;
          case Kind::Neg:
            out += '-';
            wrap(m.kids[0], prec(m), false, out);
            break;
          case Kind::Binary:
            wrap(m.kids[0], prec(m), m.op == '^', out);
            out += m.op;
            wrap(m.kids[1], prec(m), m.op != '^', out);
            break;
        }
      }
      static void wrap(const Node& m, int parent, bool strict, std::string& out) {
        bool need = prec(m) < parent || (strict && prec(m) == parent);
        if (need) out += '(';
        rec(m, out);
        if (need) out += ')';
      }
    };
    std::string src;
    P::rec(n, src);

    Ast a = Ast::parse(src);
    std::string printed = a.to_string();
    Ast b = Ast::parse(printed);
    REQUIRE(Ast::same_shape(a.root(), b.root()));
    CHECK(b.to_string() == printed);  // printer is a fixpoint

    Env vars{{"x", 1.25}, {"y", 0.75}};
    double va = NAN, vb = NAN;
    bool oka = true, okb = true;
    try {
      va = a.evaluate(vars);
    } catch (const EvalError&) {
      oka = false;
    }
    try {
      vb = b.evaluate(vars);
    } catch (const EvalError&) {
      okb = false;
    }
    REQUIRE(oka == okb);
    if (oka && std::isfinite(va) && std::isfinite(vb)) {
      CHECK(va == vb);
      ++value_checked;
    }
  }
  CHECK(value_checked > 800);
}

TEST_CASE("binary operations match native doubles to one ulp") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unif(-50.0, 50.0);
  const char ops[] = {'+', '-', '*', '/'};
  for (int trial = 0; trial < 1000; ++trial) {
    double a = unif(rng), b = unif(rng);
    char op = ops[trial % 4];
    if (op == '/' && std::abs(b) < 1e-6) b = 1.0;
    char buf[96];
    snprintf(buf, sizeof buf, "%.17g %c %.17g", a, op, b);
    double want = op == '+' ? a + b : op == '-' ? a - b : op == '*' ? a * b : a / b;
    double got = ev(buf);
    CHECK(ulp_gap(got, want) <= 1);
  }
  for (int trial = 0; trial < 250; ++trial) {
    double a = std::abs(unif(rng)) + 0.5, b = unif(rng) / 10.0;
    char buf[96];
    snprintf(buf, sizeof buf, "%.17g ^ %.17g", a, b);
    CHECK(ulp_gap(ev(buf), std::pow(a, b)) <= 1);
  }
}
