#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "fminshoot/weight.hpp"

using namespace fminshoot;

TEST_CASE("constant weight: f' is the constant, f'' is zero") {
  WeightFunction wf = WeightFunction::constant(1.0);
  CHECK(eval_fprime(wf, 7.3) == 1.0);
  CHECK(eval_fsecond(wf, 7.3) == 0.0);
  CHECK(wf.m_bound() == 1.0);
  CHECK(wf.M_bound() == 1.0);
}

TEST_CASE("saturating weight: closed-form f' and f''") {
  WeightFunction wf = WeightFunction::saturating(1.0, 2.0, 1.0);
  CHECK(eval_fprime(wf, 0.0) == Catch::Approx(1.0).margin(1e-15));       // M - (M-m) e^0 = m
  CHECK(std::abs(eval_fprime(wf, 50.0) - 2.0) <= 1e-12);                 // saturates to M
  CHECK(eval_fsecond(wf, 0.0) == Catch::Approx(1.0).margin(1e-15));     // k (M-m) e^0
  CHECK(eval_fsecond(wf, 1.0) == Catch::Approx(std::exp(-1.0)).epsilon(1e-14));
}

TEST_CASE("expression weight: f'' by symbolic differentiation") {
  WeightFunction wf = parse_weight_spec("expr \"2 - exp(-s)\" m=1 M=2");
  CHECK(eval_fprime(wf, 0.0) == Catch::Approx(1.0).margin(1e-15));
  CHECK(eval_fsecond(wf, 1.0) == Catch::Approx(std::exp(-1.0)).epsilon(1e-14));
}

TEST_CASE("weight spec grammar") {
  CHECK(parse_weight_spec("constant 1").kind() == WeightFunction::Kind::Constant);
  CHECK(parse_weight_spec("constant 1").constant_value() == 1.0);

  WeightFunction sat = parse_weight_spec("saturating 1 2 1");
  CHECK(sat.kind() == WeightFunction::Kind::Saturating);
  CHECK(sat.m_bound() == 1.0);
  CHECK(sat.M_bound() == 2.0);
  CHECK(sat.saturating_rate() == 1.0);

  // Scientific-notation floats are accepted.
  CHECK(parse_weight_spec("constant 2.5e-1").constant_value() == 0.25);

  CHECK_THROWS_AS(parse_weight_spec("nonsense 1"), ParseError);
  CHECK_THROWS_AS(parse_weight_spec(""), ParseError);
  CHECK_THROWS_AS(parse_weight_spec("constant"), ParseError);
  CHECK_THROWS_AS(parse_weight_spec("saturating 1 2"), ParseError);
  CHECK_THROWS_AS(parse_weight_spec("constant 1 extra"), ParseError);
  CHECK_THROWS_AS(parse_weight_spec("expr \"s\" m=1"), ParseError);     // missing M=
  CHECK_THROWS_AS(parse_weight_spec("expr \"s m=1 M=2"), ParseError);   // unterminated quote
  CHECK_THROWS_AS(parse_weight_spec("expr \"s +\" m=1 M=2"), ParseError);

  // Declared-bound violations are BoundsError, not ParseError.
  CHECK_THROWS_AS(parse_weight_spec("constant -1"), BoundsError);
  CHECK_THROWS_AS(parse_weight_spec("constant 0"), BoundsError);
  CHECK_THROWS_AS(parse_weight_spec("saturating 0 2 1"), BoundsError);
  CHECK_THROWS_AS(parse_weight_spec("saturating 2 1 1"), BoundsError);
  CHECK_THROWS_AS(parse_weight_spec("saturating 1 2 0"), BoundsError);
  CHECK_THROWS_AS(parse_weight_spec("expr \"s\" m=0 M=2"), BoundsError);
}

TEST_CASE("parse errors carry the byte offset") {
  try {
    parse_weight_spec("bogus 1");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.offset() == 0);
  }
  try {
    parse_weight_spec("expr \"1 + @\" m=1 M=2");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.offset() == 10);  // '@' inside the quoted body, re-anchored
  }
}

TEST_CASE("spec_string round trip preserves evaluation") {
  const char* specs[] = {
      "constant 1", "constant 0.75", "saturating 1 2 1", "saturating 0.5 3 0.25",
      "expr \"2 - exp(-s)\" m=1 M=2", "expr \"1 + tanh(s/10)\" m=1 M=2",
  };
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> us(0.0, 100.0);
  for (const char* text : specs) {
    WeightFunction a = parse_weight_spec(text);
    WeightFunction b = parse_weight_spec(a.spec_string());
    CHECK(b.kind() == a.kind());
    for (int i = 0; i < 50; ++i) {
      const double s = us(rng);
      const double fa = a.fprime(s);
      REQUIRE(std::abs(fa - b.fprime(s)) <= 1e-12 * (1.0 + std::abs(fa)));
      const double ga = a.fsecond(s);
      REQUIRE(std::abs(ga - b.fsecond(s)) <= 1e-12 * (1.0 + std::abs(ga)));
    }
  }
}

TEST_CASE("validate_weight: admissible families") {
  ValidationReport c = validate_weight(WeightFunction::constant(1.0), 100.0, 1000);
  CHECK(c.admissible);
  CHECK(c.fprime_min == 1.0);
  CHECK(c.fprime_max == 1.0);
  CHECK(c.fsecond_min == 0.0);

  ValidationReport s = validate_weight(WeightFunction::saturating(1.0, 2.0, 1.0), 100.0, 1000);
  CHECK(s.admissible);
  CHECK(s.fprime_min == Catch::Approx(1.0).margin(1e-12));  // attained at s = 0
  CHECK(s.fprime_max <= 2.0 + 1e-12);
  CHECK(s.fsecond_min >= 0.0);

  // Any positive constant is admissible.
  for (double cval : {0.1, 0.5, 3.0, 42.0})
    CHECK(validate_weight(WeightFunction::constant(cval), 50.0, 100).admissible);
}

TEST_CASE("validate_weight: decreasing expression weight fails the m bound") {
  WeightFunction wf = parse_weight_spec("expr \"exp(-s)\" m=0.1 M=1");
  ValidationReport rep = validate_weight(wf, 100.0, 1000);
  CHECK_FALSE(rep.admissible);
  REQUIRE_FALSE(rep.failures.empty());
  // f'' = -e^{-s} < 0 everywhere, so convexity failures dominate the report;
  // the sampled minimum of f' also drops below the declared m = 0.1.
  CHECK(rep.failures.front().find("f''") != std::string::npos);
  CHECK(rep.fsecond_min < 0.0);
  CHECK(rep.fprime_min < 0.1);
}

TEST_CASE("validate_weight: precondition checks") {
  CHECK_THROWS_AS(validate_weight(WeightFunction::constant(1.0), 100.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(validate_weight(WeightFunction::constant(1.0), 0.0, 10), std::invalid_argument);
}

TEST_CASE("f'' is finite-difference consistent with f' at random points") {
  std::mt19937 rng(20260823);
  std::uniform_real_distribution<double> us(0.0, 100.0);
  WeightFunction fams[] = {
      WeightFunction::saturating(1.0, 2.0, 1.0),
      parse_weight_spec("expr \"2 - exp(-s)\" m=1 M=2"),
      parse_weight_spec("expr \"1 + tanh(s/10)\" m=1 M=2"),
  };
  for (const auto& wf : fams) {
    for (int i = 0; i < 100; ++i) {
      const double s = us(rng);
      const double h = 1e-5 * (1.0 + s);
      if (s - h < 0) continue;
      const double fd = (wf.fprime(s + h) - wf.fprime(s - h)) / (2.0 * h);
      const double an = wf.fsecond(s);
      REQUIRE(std::abs(an - fd) <= 1e-6 * (1.0 + std::abs(an)));
    }
  }
}

TEST_CASE("NonFinite evaluation is reported, not propagated as garbage") {
  // exp(s^2) overflows well before s = 100; validate_weight records a failure.
  WeightFunction wf = parse_weight_spec("expr \"exp(s^2)\" m=1 M=2");
  CHECK_THROWS_AS(wf.fprime(100.0), NonFiniteError);
  ValidationReport rep = validate_weight(wf, 100.0, 200);
  CHECK_FALSE(rep.admissible);
}
