// Radial weight functions f with f'' >= 0 and 0 < m <= f' <= M. Only f' and
// f'' enter the profile-curve equations, so f itself is never represented.

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "fminshoot/expression.hpp"
#include "fminshoot/real_math.hpp"

namespace fminshoot {

class BoundsError : public std::runtime_error {
 public:
  explicit BoundsError(const std::string& what) : std::runtime_error(what) {}
};

class WeightFunction {
 public:
  enum class Kind { Constant, Saturating, Expression };

  // f' == c.
  static WeightFunction constant(double c) {
    if (c <= 0) throw BoundsError("constant weight requires c > 0");
    WeightFunction w;
    w.kind_ = Kind::Constant;
    w.c_ = c;
    w.m_bound_ = c;
    w.M_bound_ = c;
    return w;
  }

  // f'(s) = M - (M - m) * exp(-k*s); satisfies m <= f' < M and f'' >= 0 for k > 0.
  static WeightFunction saturating(double m, double M, double k) {
    if (m <= 0) throw BoundsError("saturating weight requires m > 0");
    if (M < m) throw BoundsError("saturating weight requires M >= m");
    if (k <= 0) throw BoundsError("saturating weight requires k > 0");
    WeightFunction w;
    w.kind_ = Kind::Saturating;
    w.m_bound_ = m;
    w.M_bound_ = M;
    w.k_ = k;
    return w;
  }

  // f'(s) given by an expression over s; declared bounds are required and
  // checked by validate_weight, not proven symbolically.
  static WeightFunction expression(ExprPtr fprime, double m, double M) {
    if (m <= 0) throw BoundsError("expression weight requires declared m > 0");
    if (M < m) throw BoundsError("expression weight requires declared M >= m");
    WeightFunction w;
    w.kind_ = Kind::Expression;
    w.m_bound_ = m;
    w.M_bound_ = M;
    w.fsecond_ast_ = differentiate(fprime);
    w.fprime_ast_ = std::move(fprime);
    return w;
  }

  Kind kind() const { return kind_; }
  double m_bound() const { return m_bound_; }
  double M_bound() const { return M_bound_; }
  double constant_value() const { return c_; }
  double saturating_rate() const { return k_; }
  const ExprPtr& fprime_ast() const { return fprime_ast_; }

  bool is_unit_constant() const { return kind_ == Kind::Constant && c_ == 1.0; }

  template <class Real = double>
  Real fprime(Real s) const {
    Real v{};
    switch (kind_) {
      case Kind::Constant:
        v = static_cast<Real>(c_);
        break;
      case Kind::Saturating:
        v = static_cast<Real>(M_bound_) -
            static_cast<Real>(M_bound_ - m_bound_) * detail::fm_exp(-static_cast<Real>(k_) * s);
        break;
      case Kind::Expression:
        v = static_cast<Real>(eval_expr(*fprime_ast_, static_cast<double>(s)));
        break;
    }
    if (!detail::fm_isfinite(v))
      throw NonFiniteError("f'(s) is not finite at s=" + std::to_string(static_cast<double>(s)));
    return v;
  }

  double fsecond(double s) const {
    double v;
    switch (kind_) {
      case Kind::Constant:
        v = 0.0;
        break;
      case Kind::Saturating:
        v = k_ * (M_bound_ - m_bound_) * std::exp(-k_ * s);
        break;
      case Kind::Expression:
        v = eval_expr(*fsecond_ast_, s);
        break;
    }
    if (!std::isfinite(v))
      throw NonFiniteError("f''(s) is not finite at s=" + std::to_string(s));
    return v;
  }

  // Spec-grammar text that reparses to an equivalent weight.
  std::string spec_string() const {
    std::ostringstream os;
    os.precision(17);
    switch (kind_) {
      case Kind::Constant:
        os << "constant " << c_;
        break;
      case Kind::Saturating:
        os << "saturating " << m_bound_ << " " << M_bound_ << " " << k_;
        break;
      case Kind::Expression:
        os << "expr \"" << print_expression(*fprime_ast_) << "\" m=" << m_bound_
           << " M=" << M_bound_;
        break;
    }
    return os.str();
  }

 private:
  WeightFunction() = default;

  Kind kind_ = Kind::Constant;
  double c_ = 1.0;
  double m_bound_ = 1.0;
  double M_bound_ = 1.0;
  double k_ = 0.0;
  ExprPtr fprime_ast_, fsecond_ast_;
};

inline double eval_fprime(const WeightFunction& wf, double s) { return wf.fprime(s); }
inline double eval_fsecond(const WeightFunction& wf, double s) { return wf.fsecond(s); }

namespace detail {

class WeightSpecParser {
 public:
  explicit WeightSpecParser(std::string_view text) : text_(text) {}

  WeightFunction parse() {
    std::string head = next_word();
    if (head == "constant") {
      double c = next_float("constant value");
      expect_end();
      return WeightFunction::constant(c);
    }
    if (head == "saturating") {
      double m = next_float("m");
      double M = next_float("M");
      double k = next_float("k");
      expect_end();
      return WeightFunction::saturating(m, M, k);
    }
    if (head == "expr") {
      std::string body = quoted_string();
      ExprPtr ast = parse_in_context(body);
      double m = keyed_float("m");
      double M = keyed_float("M");
      expect_end();
      return WeightFunction::expression(std::move(ast), m, M);
    }
    throw ParseError(head_offset_, "'constant', 'saturating', or 'expr'",
                     head.empty() ? "end of input" : "'" + head + "'");
  }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t head_offset_ = 0;

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  std::string next_word() {
    skip_ws();
    head_offset_ = pos_;
    std::size_t start = pos_;
    while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    return std::string(text_.substr(start, pos_ - start));
  }

  double next_float(const std::string& what) {
    skip_ws();
    if (pos_ >= text_.size()) throw ParseError(pos_, what + " (float)", "end of input");
    std::size_t consumed = 0;
    double v;
    try {
      v = std::stod(std::string(text_.substr(pos_)), &consumed);
    } catch (const std::exception&) {
      throw ParseError(pos_, what + " (float)", "'" + std::string(1, text_[pos_]) + "'");
    }
    pos_ += consumed;
    return v;
  }

  std::string quoted_string() {
    skip_ws();
    if (pos_ >= text_.size() || text_[pos_] != '"')
      throw ParseError(pos_, "'\"'",
                       pos_ < text_.size() ? "'" + std::string(1, text_[pos_]) + "'"
                                           : "end of input");
    ++pos_;
    std::size_t start = pos_;
    while (pos_ < text_.size() && text_[pos_] != '"') ++pos_;
    if (pos_ >= text_.size()) throw ParseError(pos_, "closing '\"'", "end of input");
    std::string body(text_.substr(start, pos_ - start));
    ++pos_;
    body_offset_ = start;
    return body;
  }

  ExprPtr parse_in_context(const std::string& body) {
    try {
      return parse_expression(body);
    } catch (const ParseError& pe) {
      // Re-anchor the offset to the full weight-spec string.
      throw ParseError(body_offset_ + pe.offset(), pe.expected(), "(inside expression)");
    }
  }

  double keyed_float(const std::string& key) {
    skip_ws();
    if (text_.substr(pos_, key.size() + 1) != key + "=")
      throw ParseError(pos_, "'" + key + "='",
                       pos_ < text_.size() ? "'" + std::string(1, text_[pos_]) + "'"
                                           : "end of input");
    pos_ += key.size() + 1;
    return next_float(key);
  }

  void expect_end() {
    skip_ws();
    if (pos_ != text_.size())
      throw ParseError(pos_, "end of input", "'" + std::string(1, text_[pos_]) + "'");
  }

  std::size_t body_offset_ = 0;
};

}  // namespace detail

// Grammar: `constant <c>` | `saturating <m> <M> <k>` | `expr "<arith over s>" m=<v> M=<v>`.
inline WeightFunction parse_weight_spec(std::string_view text) {
  return detail::WeightSpecParser(text).parse();
}

struct ValidationReport {
  bool admissible = false;
  double fprime_min = 0, fprime_max = 0;
  double fsecond_min = 0;
  double max_fd_inconsistency = 0;
  std::vector<std::string> failures;
};

// Samples f' and f'' on a uniform grid over [0, s_max] and checks the
// admissibility hypotheses: m <= f' <= M, f'' >= 0, and f''-vs-f'
// finite-difference consistency. Failures are reported, not thrown.
inline ValidationReport validate_weight(const WeightFunction& wf, double s_max,
                                        std::size_t samples) {
  if (samples < 2) throw std::invalid_argument("validate_weight: samples must be >= 2");
  if (s_max <= 0) throw std::invalid_argument("validate_weight: s_max must be > 0");

  constexpr double kBoundTol = 1e-9;
  ValidationReport rep;
  rep.fprime_min = std::numeric_limits<double>::infinity();
  rep.fprime_max = -std::numeric_limits<double>::infinity();
  rep.fsecond_min = std::numeric_limits<double>::infinity();

  auto record = [&rep](std::string msg) {
    if (rep.failures.size() < 16) rep.failures.push_back(std::move(msg));
  };

  try {
    for (std::size_t i = 0; i < samples; ++i) {
      const double s = s_max * static_cast<double>(i) / static_cast<double>(samples - 1);
      const double fp = wf.fprime(s);
      const double fs = wf.fsecond(s);
      rep.fprime_min = std::min(rep.fprime_min, fp);
      rep.fprime_max = std::max(rep.fprime_max, fp);
      rep.fsecond_min = std::min(rep.fsecond_min, fs);

      if (fp < wf.m_bound() * (1.0 - kBoundTol) - kBoundTol)
        record("f'(" + std::to_string(s) + ") = " + std::to_string(fp) +
               " below declared m = " + std::to_string(wf.m_bound()));
      if (fp > wf.M_bound() * (1.0 + kBoundTol) + kBoundTol)
        record("f'(" + std::to_string(s) + ") = " + std::to_string(fp) +
               " above declared M = " + std::to_string(wf.M_bound()));
      if (fs < -kBoundTol)
        record("f''(" + std::to_string(s) + ") = " + std::to_string(fs) + " < 0");

      // Centered-difference consistency of f'' against f'.
      const double h = 1e-5 * (1.0 + s);
      if (s - h >= 0.0) {
        const double fd = (wf.fprime(s + h) - wf.fprime(s - h)) / (2.0 * h);
        const double inconsistency = std::abs(fs - fd) / (1.0 + std::abs(fs));
        rep.max_fd_inconsistency = std::max(rep.max_fd_inconsistency, inconsistency);
        if (inconsistency > 1e-6)
          record("f'' inconsistent with finite difference of f' at s=" + std::to_string(s));
      }
    }
  } catch (const NonFiniteError& e) {
    record(e.what());
  }

  rep.admissible = rep.failures.empty();
  return rep;
}

}  // namespace fminshoot
