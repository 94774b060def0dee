#include "doctest.h"

#include "crm/codec.hpp"
#include "crm/error.hpp"
#include "crm/model.hpp"
#include "crm/rational.hpp"
#include "support/fixtures.hpp"
#include "support/gen.hpp"

#include <numeric>

using namespace crm;
using crm::testing::Gen;
using crm::testing::make_rollout;

namespace {

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected crm::Error");
  return ErrorKind::Io;
}

std::string field_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.field();
  }
  FAIL("expected crm::Error");
  return {};
}

}  // namespace

TEST_SUITE("core-model") {
  TEST_CASE("rational reduces to lowest terms with a positive denominator") {
    Gen g(11);
    for (int i = 0; i < 500; ++i) {
      std::int64_t p = g.integer(-100000, 100000);
      std::int64_t q = g.integer(-1000, 1000);
      if (q == 0) continue;
      Rational r{BigInt(p), BigInt(q)};
      // Independent reduction oracle on machine integers.
      std::int64_t d = std::gcd(p, q);
      std::int64_t num = p / d, den = q / d;
      if (den < 0) num = -num, den = -den;
      CHECK(r.numerator() == num);
      CHECK(r.denominator() == den);
    }
  }

  TEST_CASE("parse_rational accepts integers, fractions and finite decimals") {
    CHECK(*parse_rational("7") == Rational(7));
    CHECK(*parse_rational("007") == Rational(7));
    CHECK(*parse_rational("-1.25") == Rational(BigInt(-5), BigInt(4)));
    CHECK(*parse_rational("0.50") == Rational(BigInt(1), BigInt(2)));
    CHECK(*parse_rational(".5") == Rational(BigInt(1), BigInt(2)));
    CHECK(*parse_rational("6/8") == Rational(BigInt(3), BigInt(4)));
    CHECK_FALSE(parse_rational("x").has_value());
    CHECK_FALSE(parse_rational("").has_value());
    CHECK_FALSE(parse_rational("3/0")->is_finite());
  }

  TEST_CASE("rational renders canonically and round-trips") {
    Gen g(12);
    for (int i = 0; i < 300; ++i) {
      Rational r{BigInt(g.integer(-5000, 5000)), BigInt(g.integer(1, 400))};
      CHECK(*parse_rational(r.to_string()) == r);
      if (auto dec = r.to_decimal_string()) CHECK(*parse_rational(*dec) == r);
    }
    CHECK(Rational(BigInt(3), BigInt(8)).to_decimal_string() == std::optional<std::string>("0.375"));
    CHECK_FALSE(Rational(BigInt(1), BigInt(3)).to_decimal_string().has_value());
  }

  TEST_CASE("rational arithmetic is exact") {
    Rational third{BigInt(1), BigInt(3)};
    CHECK(third + third + third == Rational(1));
    CHECK(third * Rational(3) == Rational(1));
    CHECK(Rational(1) - third == Rational(BigInt(2), BigInt(3)));
    CHECK(third < Rational(BigInt(1), BigInt(2)));
  }

  TEST_CASE("validate_rollout accepts well-formed input unchanged") {
    auto r = make_rollout("r1", "<think>2+2</think><answer>4</answer>");
    CHECK(validate_rollout(r) == r);
    CHECK(validate_rollout(validate_rollout(r)) == r);  // idempotent
  }

  TEST_CASE("validate_rollout accepts an empty response") {
    auto r = make_rollout("r1", "");
    CHECK(validate_rollout(r) == r);
  }

  TEST_CASE("validate_rollout names the offending field") {
    auto r = make_rollout("r1", "x", "");
    CHECK(kind_of([&] { validate_rollout(r); }) == ErrorKind::EmptyFinalAnswer);
    CHECK(field_of([&] { validate_rollout(r); }) == "reference.final_answer");

    auto t = make_rollout("r1", "x");
    t.prompt.text = "";
    CHECK(kind_of([&] { validate_rollout(t); }) == ErrorKind::EmptyPromptText);

    auto u = make_rollout("r1", "x", "4", {Rational(2), Rational(BigInt(1), BigInt(0))});
    CHECK(kind_of([&] { validate_rollout(u); }) == ErrorKind::NonFiniteIntermediate);
    CHECK(field_of([&] { validate_rollout(u); }) == "reference.intermediate_values[1]");

    auto v = make_rollout("", "x");
    CHECK(kind_of([&] { validate_rollout(v); }) == ErrorKind::EmptyPromptId);
  }

  TEST_CASE("default_weights holds the documented constants") {
    auto w = default_weights();
    CHECK(w.alpha == 1.0);
    CHECK(w.beta == 0.5);
    CHECK(w.gamma == 0.2);
    CHECK(w.delta == 0.2);
    CHECK(w.eta == 0.3);
    CHECK(w.w_enhanced == 0.5);
    CHECK(w.roster.size() == 4);
    CHECK_FALSE(w.adaptive_normalization);
    for (Agent a : kAllAgents) CHECK(w.lambda.at(std::string(to_string(a))) == 1.0);
    CHECK(w.lambda.at(std::string(kRankerKey)) == 1.0);
    CHECK_NOTHROW(validate_weights(w));
  }

  TEST_CASE("weight and roster validation") {
    auto w = default_weights();
    w.beta = -0.1;
    CHECK(kind_of([&] { validate_weights(w); }) == ErrorKind::InvalidValue);
    w = default_weights();
    w.lambda["nobody"] = 1.0;
    CHECK(kind_of([&] { validate_weights(w); }) == ErrorKind::UnknownKey);
    CHECK(kind_of([] { validate_roster({}); }) == ErrorKind::InvalidValue);
    CHECK(kind_of([] { validate_roster({Agent::Optimizer, Agent::Optimizer}); }) == ErrorKind::InvalidValue);
    CHECK(kind_of([] { validate_roster({Agent::Assessor, Agent::Analyzer}); }) == ErrorKind::InvalidValue);
    CHECK_NOTHROW(validate_roster({Agent::Analyzer, Agent::Optimizer}));
    CHECK_NOTHROW(validate_roster({Agent::Optimizer, Agent::Synthesizer}));
  }

  TEST_CASE("rollout JSON round-trips byte-identically in canonical form") {
    Gen g(13);
    for (int i = 0; i < 200; ++i) {
      std::vector<Rational> inter;
      for (auto k = g.integer(0, 3); k > 0; --k) inter.emplace_back(BigInt(g.integer(-50, 50)), BigInt(g.integer(1, 9)));
      std::optional<std::string> ref_text;
      if (g.coin()) ref_text = g.words(8, 4);
      std::optional<std::string> group;
      if (g.coin()) group = "g" + std::to_string(g.integer(0, 5));
      auto r = make_rollout("id-" + std::to_string(i), g.words(12, 5) + " é \"q\"", std::to_string(g.integer(-9, 9)),
                            inter, ref_text, group);
      const std::string line = encode_rollout(r);
      CHECK(decode_rollout(line) == r);
      CHECK(encode_rollout(decode_rollout(line)) == line);
    }
  }

  TEST_CASE("decode_rollout rejects malformed records") {
    CHECK(kind_of([] { decode_rollout("{not json"); }) == ErrorKind::MalformedRecord);
    CHECK(kind_of([] { decode_rollout(R"({"id":"a","prompt":"p","response":"r"})"); }) == ErrorKind::MalformedRecord);
    CHECK(kind_of([] {
            decode_rollout(
                R"({"id":"a","prompt":"p","response":"r","reference":{"final_answer":"1","intermediate_values":["inf"]}})");
          }) == ErrorKind::NonFiniteIntermediate);
    CHECK(kind_of([] {
            decode_rollout(R"({"id":"a","prompt":"p","response":"r","reference":{"final_answer":"","intermediate_values":[]}})");
          }) == ErrorKind::EmptyFinalAnswer);
    // Integer intermediates may be given as JSON numbers.
    auto r = decode_rollout(R"({"id":"a","prompt":"p","response":"r","reference":{"final_answer":"1","intermediate_values":[3,"1/2"]}})");
    CHECK(r.reference.intermediate_values == std::vector<Rational>{Rational(3), Rational(BigInt(1), BigInt(2))});
  }

  TEST_CASE("breakdown JSON round-trips") {
    RewardBreakdown b;
    b.rollout_id = "x";
    b.components[Component::Acc] = 1.0;
    b.components[Component::Rep] = 0.25;
    b.excluded = {Component::Sim, Component::Outcome};
    AgentReport rep;
    rep.agent = Agent::Assessor;
    rep.score = 0.5;
    rep.diagnostics = {{"acc", 1.0}};
    rep.notes = {"fine"};
    b.reports = {rep};
    b.agent_scores = {{"assessor", 0.5}};
    b.collab = 0.925;
    b.pre_squash = 1.425;
    b.fused = std::tanh(1.425);
    CHECK(breakdown_from_json(breakdown_to_json(b)) == b);
    auto j = breakdown_to_json(b);
    CHECK(j["components"]["sim"].is_null());
  }
}
