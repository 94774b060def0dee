#include "doctest.h"

#include "crm/math_equiv.hpp"
#include "support/fixtures.hpp"
#include "support/gen.hpp"
#include "support/oracles.hpp"

#include <numeric>

using namespace crm;
using crm::testing::Gen;

namespace {

Rational frac(std::int64_t p, std::int64_t q) { return Rational(BigInt(p), BigInt(q)); }

bool is_rational(const Expr& e, const Rational& r) {
  const auto* v = std::get_if<Rational>(&e);
  return v != nullptr && *v == r;
}

}  // namespace

TEST_SUITE("math-equiv") {
  TEST_CASE("parse_expr examples") {
    CHECK(is_rational(parse_expr("0.5"), frac(1, 2)));
    CHECK(is_rational(parse_expr("\\frac{3}{4}"), frac(3, 4)));
    // gcd(6, 8) = 2, so 6/8 reduces to 3/4.
    CHECK(std::gcd(6, 8) == 2);
    CHECK(is_rational(parse_expr("6/8"), frac(6 / 2, 8 / 2)));
  }

  TEST_CASE("parse_expr recognizes sign, percent and LaTeX sugar") {
    CHECK(is_rational(parse_expr("-12"), Rational(-12)));
    CHECK(is_rational(parse_expr("+3"), Rational(3)));
    CHECK(is_rational(parse_expr("25%"), frac(1, 4)));
    CHECK(is_rational(parse_expr("25\\%"), frac(1, 4)));
    CHECK(is_rational(parse_expr("$\\dfrac{1}{2}$"), frac(1, 2)));
    CHECK(is_rational(parse_expr("-\\frac{2}{4}"), frac(-1, 2)));
    CHECK(is_rational(parse_expr(" 1 000 "), Rational(1000)));
    CHECK(std::holds_alternative<Unparseable>(parse_expr("  $ $ ")));
    CHECK(std::holds_alternative<Symbolic>(parse_expr("3/0")));
  }

  TEST_CASE("symbolic normalization") {
    CHECK(check_equivalence(parse_expr("x+1"), parse_expr("x + 1")));
    CHECK(check_equivalence(parse_expr("\\left(X+1\\right)"), parse_expr("(x+1)")));
    CHECK(check_equivalence(parse_expr("\\frac{x}{2}"), parse_expr("x/2")));
    CHECK(check_equivalence(parse_expr("\\frac{x+1}{2}"), parse_expr("(x+1)/2")));
    CHECK(check_equivalence(parse_expr("2\\cdot x"), parse_expr("2*x")));
    // No algebra beyond canonicalization.
    CHECK_FALSE(check_equivalence(parse_expr("2x"), parse_expr("x*2")));
  }

  TEST_CASE("check_equivalence examples") {
    CHECK(check_equivalence(Expr{frac(1, 2)}, parse_expr("2/4")));
    CHECK(crm::testing::same_ratio(1, 2, 2, 4));
    CHECK_FALSE(check_equivalence(parse_expr("2"), parse_expr("3")));
    CHECK_FALSE(check_equivalence(parse_expr("2"), parse_expr("x")));
    CHECK_FALSE(check_equivalence(parse_expr(""), parse_expr("")));
  }

  TEST_CASE("equivalence is reflexive, symmetric and transitive") {
    Gen g(31);
    const std::vector<std::string> symbols = {"x", "y+1", "\\frac{a}{b}", "2x", "\\sqrt{2}", "(x-3)(x+3)"};
    std::vector<Expr> pool;
    for (int i = 0; i < 60; ++i) {
      switch (g.integer(0, 3)) {
        case 0: pool.push_back(parse_expr(std::to_string(g.integer(-4, 4)))); break;
        case 1: pool.push_back(parse_expr(std::to_string(g.integer(-4, 4)) + "/" + std::to_string(g.integer(1, 4)))); break;
        case 2: pool.push_back(parse_expr(g.pick(symbols))); break;
        default: pool.push_back(parse_expr("0." + std::to_string(g.integer(0, 9)) + "5")); break;
      }
    }
    for (const auto& a : pool) {
      CHECK(check_equivalence(a, a));
      for (const auto& b : pool) {
        CHECK(check_equivalence(a, b) == check_equivalence(b, a));
        for (const auto& c : pool) {
          if (check_equivalence(a, b) && check_equivalence(b, c)) CHECK(check_equivalence(a, c));
        }
      }
    }
  }

  TEST_CASE("parse_expr round-trips canonical rational renderings") {
    Gen g(32);
    for (int i = 0; i < 500; ++i) {
      Rational r = frac(g.integer(-100000, 100000), g.integer(1, 5000));
      CHECK(is_rational(parse_expr(r.to_string()), r));
    }
  }

  TEST_CASE("fraction vs decimal agrees with the long-division oracle") {
    Gen g(33);
    int checked = 0;
    while (checked < 1000) {
      std::int64_t p = g.integer(-100000, 100000);
      std::int64_t q = g.pick(std::vector<std::int64_t>{1, 2, 4, 5, 8, 10, 16, 20, 25, 40, 50, 64, 80, 125, 200, 250, 1000, 3, 7});
      if (g.coin(0.5)) q = -q;
      std::int64_t p2 = g.coin(0.3) ? p + g.integer(-3, 3) : p;
      auto dec = crm::testing::decimal_by_long_division(p2, q);
      if (!dec) continue;
      const bool expected = crm::testing::same_ratio(p, q, p2, q);
      const std::string fraction = std::to_string(p) + "/" + std::to_string(q);
      CHECK_MESSAGE(check_equivalence(parse_expr(fraction), parse_expr(*dec)) == expected, fraction << " vs " << *dec);
      ++checked;
    }
  }

  TEST_CASE("accuracy_reward examples") {
    Reference half{"1/2", {}, std::nullopt};
    CHECK(accuracy_reward(parse_response("<think>x</think><answer>0.5</answer>"), half) == 1.0);
    CHECK(accuracy_reward(parse_response("0.5"), half) == 0.0);
    Reference seven{"7", {}, std::nullopt};
    CHECK(accuracy_reward(parse_response("<think></think><answer>7</answer>"), seven) == 1.0);
    CHECK(accuracy_reward(parse_response("<think></think><answer>8</answer>"), seven) == 0.0);
  }

  TEST_CASE("outcome_reward examples") {
    Reference ref{"16", {Rational(4), Rational(12)}, std::nullopt};
    CHECK(outcome_reward(parse_response("<think>4 plus 12</think><answer>16</answer>"), ref) == 1.0);
    CHECK(outcome_reward(parse_response("<think>only 4 here</think><answer>16</answer>"), ref) == 0.5);
    Reference none{"16", {}, std::nullopt};
    CHECK_FALSE(outcome_reward(parse_response("<think>4 12</think><answer>16</answer>"), none).has_value());
  }

  TEST_CASE("outcome_reward ignores step indices and counts duplicates independently") {
    Reference ref{"9", {Rational(2), Rational(2), Rational(7)}, std::nullopt};
    auto p = parse_response("<think>Step 2: take 7\nStep 3: done</think><answer>9</answer>");
    CHECK(*outcome_reward(p, ref) == doctest::Approx(1.0 / 3.0));
    auto q = parse_response("<think>Step 1: 2 and 2\nStep 2: 7</think><answer>9</answer>");
    CHECK(*outcome_reward(q, ref) == 1.0);
  }

  TEST_CASE("numeric literal extraction") {
    auto lits = extract_numeric_literals("x2 is 5-3, values: -4 and 0.25 and 3/4 and \\frac{1}{8}");
    auto has = [&](const Rational& r) { return std::find(lits.begin(), lits.end(), r) != lits.end(); };
    CHECK(has(Rational(5)));
    CHECK(has(Rational(3)));
    CHECK_FALSE(has(Rational(-3)));
    CHECK_FALSE(has(Rational(2)));
    CHECK(has(Rational(-4)));
    CHECK(has(frac(1, 4)));
    CHECK(has(frac(3, 4)));
    CHECK(has(frac(1, 8)));
  }
}
