// Single-variable arithmetic expressions over `s`: parsing, evaluation,
// printing, and symbolic differentiation. Used for user-supplied weight
// derivatives f'(s).

#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace fminshoot {

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t offset, std::string expected, const std::string& found)
      : std::runtime_error("parse error at byte " + std::to_string(offset) +
                           ": expected " + expected + ", found " + found),
        offset_(offset),
        expected_(std::move(expected)) {}

  std::size_t offset() const { return offset_; }
  const std::string& expected() const { return expected_; }

 private:
  std::size_t offset_;
  std::string expected_;
};

class NonFiniteError : public std::runtime_error {
 public:
  explicit NonFiniteError(const std::string& what) : std::runtime_error(what) {}
};

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

// Expression tree node. Pow exponents are restricted to integers by the
// grammar; the exponent is stored in `ipow`.
struct Expr {
  enum class Kind { Num, Var, Add, Sub, Mul, Div, Pow, Neg, Exp, Log, Sqrt, Tanh };

  Kind kind;
  double value = 0.0;  // Num
  long ipow = 0;       // Pow
  ExprPtr lhs, rhs;    // rhs only for binary ops

  static ExprPtr num(double v) {
    auto e = std::make_shared<Expr>();
    e->kind = Kind::Num;
    e->value = v;
    return e;
  }
  static ExprPtr var() {
    auto e = std::make_shared<Expr>();
    e->kind = Kind::Var;
    return e;
  }
  static ExprPtr make(Kind k, ExprPtr a, ExprPtr b = nullptr) {
    auto e = std::make_shared<Expr>();
    e->kind = k;
    e->lhs = std::move(a);
    e->rhs = std::move(b);
    return e;
  }
  static ExprPtr pow(ExprPtr base, long exponent) {
    auto e = std::make_shared<Expr>();
    e->kind = Kind::Pow;
    e->lhs = std::move(base);
    e->ipow = exponent;
    return e;
  }
};

namespace detail {

inline bool is_num(const ExprPtr& e, double v) {
  return e->kind == Expr::Kind::Num && e->value == v;
}

}  // namespace detail

template <class Real = double>
Real eval_expr(const Expr& e, Real s) {
  using K = Expr::Kind;
  switch (e.kind) {
    case K::Num:
      return static_cast<Real>(e.value);
    case K::Var:
      return s;
    case K::Add:
      return eval_expr(*e.lhs, s) + eval_expr(*e.rhs, s);
    case K::Sub:
      return eval_expr(*e.lhs, s) - eval_expr(*e.rhs, s);
    case K::Mul:
      return eval_expr(*e.lhs, s) * eval_expr(*e.rhs, s);
    case K::Div:
      return eval_expr(*e.lhs, s) / eval_expr(*e.rhs, s);
    case K::Pow:
      return std::pow(eval_expr(*e.lhs, s), static_cast<Real>(e.ipow));
    case K::Neg:
      return -eval_expr(*e.lhs, s);
    case K::Exp:
      return std::exp(eval_expr(*e.lhs, s));
    case K::Log:
      return std::log(eval_expr(*e.lhs, s));
    case K::Sqrt:
      return std::sqrt(eval_expr(*e.lhs, s));
    case K::Tanh:
      return std::tanh(eval_expr(*e.lhs, s));
  }
  return 0.0;  // unreachable
}

// Symbolic derivative with light constant folding. Every node kind in the
// grammar has a closed-form derivative.
inline ExprPtr differentiate(const ExprPtr& e) {
  using K = Expr::Kind;
  auto add = [](ExprPtr a, ExprPtr b) -> ExprPtr {
    if (detail::is_num(a, 0.0)) return b;
    if (detail::is_num(b, 0.0)) return a;
    return Expr::make(K::Add, a, b);
  };
  auto sub = [](ExprPtr a, ExprPtr b) -> ExprPtr {
    if (detail::is_num(b, 0.0)) return a;
    if (detail::is_num(a, 0.0)) return Expr::make(K::Neg, b);
    return Expr::make(K::Sub, a, b);
  };
  auto mul = [](ExprPtr a, ExprPtr b) -> ExprPtr {
    if (detail::is_num(a, 0.0) || detail::is_num(b, 0.0)) return Expr::num(0.0);
    if (detail::is_num(a, 1.0)) return b;
    if (detail::is_num(b, 1.0)) return a;
    return Expr::make(K::Mul, a, b);
  };
  auto div = [](ExprPtr a, ExprPtr b) -> ExprPtr {
    if (detail::is_num(a, 0.0)) return Expr::num(0.0);
    if (detail::is_num(b, 1.0)) return a;
    return Expr::make(K::Div, a, b);
  };

  switch (e->kind) {
    case K::Num:
      return Expr::num(0.0);
    case K::Var:
      return Expr::num(1.0);
    case K::Add:
      return add(differentiate(e->lhs), differentiate(e->rhs));
    case K::Sub:
      return sub(differentiate(e->lhs), differentiate(e->rhs));
    case K::Mul:
      return add(mul(differentiate(e->lhs), e->rhs), mul(e->lhs, differentiate(e->rhs)));
    case K::Div:
      // (u/v)' = (u'v - uv') / v^2
      return div(sub(mul(differentiate(e->lhs), e->rhs), mul(e->lhs, differentiate(e->rhs))),
                 Expr::pow(e->rhs, 2));
    case K::Pow: {
      if (e->ipow == 0) return Expr::num(0.0);
      ExprPtr inner = (e->ipow == 1) ? Expr::num(1.0)
                      : (e->ipow == 2) ? e->lhs
                                       : Expr::pow(e->lhs, e->ipow - 1);
      return mul(mul(Expr::num(static_cast<double>(e->ipow)), inner), differentiate(e->lhs));
    }
    case K::Neg:
      return Expr::make(K::Neg, differentiate(e->lhs));
    case K::Exp:
      return mul(Expr::make(K::Exp, e->lhs), differentiate(e->lhs));
    case K::Log:
      return div(differentiate(e->lhs), e->lhs);
    case K::Sqrt:
      return div(differentiate(e->lhs),
                 mul(Expr::num(2.0), Expr::make(K::Sqrt, e->lhs)));
    case K::Tanh:
      return mul(sub(Expr::num(1.0), Expr::pow(Expr::make(K::Tanh, e->lhs), 2)),
                 differentiate(e->lhs));
  }
  return Expr::num(0.0);  // unreachable
}

namespace detail {

inline int precedence(Expr::Kind k) {
  using K = Expr::Kind;
  switch (k) {
    case K::Add:
    case K::Sub:
      return 1;
    case K::Mul:
    case K::Div:
      return 2;
    case K::Neg:
      return 3;
    case K::Pow:
      return 4;
    default:
      return 5;  // atoms and function calls never need parens
  }
}

inline void print_expr(const Expr& e, std::string& out, int parent_prec) {
  using K = Expr::Kind;
  const int prec = precedence(e.kind);
  const bool parens = prec < parent_prec;
  if (parens) out += '(';
  switch (e.kind) {
    case K::Num: {
      char buf[40];
      std::snprintf(buf, sizeof(buf), "%.17g", e.value);
      out += buf;
      break;
    }
    case K::Var:
      out += 's';
      break;
    case K::Add:
      print_expr(*e.lhs, out, prec);
      out += " + ";
      print_expr(*e.rhs, out, prec);
      break;
    case K::Sub:
      print_expr(*e.lhs, out, prec);
      out += " - ";
      print_expr(*e.rhs, out, prec + 1);
      break;
    case K::Mul:
      print_expr(*e.lhs, out, prec);
      out += "*";
      print_expr(*e.rhs, out, prec);
      break;
    case K::Div:
      print_expr(*e.lhs, out, prec);
      out += "/";
      print_expr(*e.rhs, out, prec + 1);
      break;
    case K::Pow:
      print_expr(*e.lhs, out, prec + 1);
      out += '^';
      out += std::to_string(e.ipow);
      break;
    case K::Neg:
      out += '-';
      print_expr(*e.lhs, out, prec + 1);
      break;
    case K::Exp:
    case K::Log:
    case K::Sqrt:
    case K::Tanh:
      out += (e.kind == K::Exp    ? "exp"
              : e.kind == K::Log  ? "log"
              : e.kind == K::Sqrt ? "sqrt"
                                  : "tanh");
      out += '(';
      print_expr(*e.lhs, out, 0);
      out += ')';
      break;
  }
  if (parens) out += ')';
}

// Recursive-descent parser. Precedence: ^ > unary- > * / > + -.
class ExprParser {
 public:
  explicit ExprParser(std::string_view text) : text_(text) {}

  ExprPtr parse() {
    ExprPtr e = parse_sum();
    skip_ws();
    if (pos_ != text_.size()) fail("end of input or operator");
    return e;
  }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;

  [[noreturn]] void fail(const std::string& expected) {
    std::string found = pos_ < text_.size()
                            ? "'" + std::string(1, text_[pos_]) + "'"
                            : "end of input";
    throw ParseError(pos_, expected, found);
  }

  void skip_ws() {
    while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t')) ++pos_;
  }

  bool consume(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  char peek() {
    skip_ws();
    return pos_ < text_.size() ? text_[pos_] : '\0';
  }

  ExprPtr parse_sum() {
    ExprPtr e = parse_term();
    for (;;) {
      if (consume('+'))
        e = Expr::make(Expr::Kind::Add, e, parse_term());
      else if (consume('-'))
        e = Expr::make(Expr::Kind::Sub, e, parse_term());
      else
        return e;
    }
  }

  ExprPtr parse_term() {
    ExprPtr e = parse_unary();
    for (;;) {
      if (consume('*'))
        e = Expr::make(Expr::Kind::Mul, e, parse_unary());
      else if (consume('/'))
        e = Expr::make(Expr::Kind::Div, e, parse_unary());
      else
        return e;
    }
  }

  ExprPtr parse_unary() {
    if (consume('-')) return Expr::make(Expr::Kind::Neg, parse_unary());
    return parse_power();
  }

  ExprPtr parse_power() {
    ExprPtr base = parse_atom();
    if (consume('^')) {
      skip_ws();
      bool neg = consume('-');
      skip_ws();
      if (pos_ >= text_.size() || !std::isdigit(static_cast<unsigned char>(text_[pos_])))
        fail("integer exponent");
      long exp = 0;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_])))
        exp = exp * 10 + (text_[pos_++] - '0');
      return Expr::pow(base, neg ? -exp : exp);
    }
    return base;
  }

  ExprPtr parse_atom() {
    skip_ws();
    if (pos_ >= text_.size()) fail("number, 's', function, or '('");
    char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      ExprPtr e = parse_sum();
      if (!consume(')')) fail("')'");
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c))) {
      std::size_t start = pos_;
      while (pos_ < text_.size() && std::isalpha(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      std::string_view id = text_.substr(start, pos_ - start);
      if (id == "s") return Expr::var();
      Expr::Kind k;
      if (id == "exp")
        k = Expr::Kind::Exp;
      else if (id == "log")
        k = Expr::Kind::Log;
      else if (id == "sqrt")
        k = Expr::Kind::Sqrt;
      else if (id == "tanh")
        k = Expr::Kind::Tanh;
      else {
        pos_ = start;
        fail("one of {s, exp, log, sqrt, tanh}");
      }
      if (!consume('(')) fail("'('");
      ExprPtr arg = parse_sum();
      if (!consume(')')) fail("')'");
      return Expr::make(k, arg);
    }
    fail("number, 's', function, or '('");
  }

  ExprPtr parse_number() {
    std::size_t start = pos_;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    if (pos_ < text_.size() && text_[pos_] == '.') {
      ++pos_;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      std::size_t mark = pos_++;
      if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
      if (pos_ >= text_.size() || !std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
        pos_ = mark;  // not an exponent, stop the literal here
      } else {
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      }
    }
    if (pos_ == start) fail("number");
    return Expr::num(std::stod(std::string(text_.substr(start, pos_ - start))));
  }
};

}  // namespace detail

inline ExprPtr parse_expression(std::string_view text) {
  return detail::ExprParser(text).parse();
}

inline std::string print_expression(const Expr& e) {
  std::string out;
  detail::print_expr(e, out, 0);
  return out;
}

}  // namespace fminshoot
