#include "doctest.h"

#include "crm/config.hpp"
#include "crm/error.hpp"
#include "support/gen.hpp"
#include "support/tempdir.hpp"

using namespace crm;
using crm::testing::Gen;

namespace {

Error error_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const Error& e) {
    return e;
  }
  FAIL("expected crm::Error for: " << text);
  return Error(ErrorKind::Io, "");
}

Config random_config(Gen& g) {
  Config c;
  auto& w = c.engine.fusion.weights;
  for (double* x : {&w.alpha, &w.beta, &w.gamma, &w.delta, &w.eta, &w.w_enhanced}) *x = g.real(0, 3);
  for (auto& [name, value] : w.lambda) value = g.coin(0.2) ? 0.0 : g.real(0, 2);
  w.roster.clear();
  for (Agent a : kAllAgents) {
    if (g.coin()) w.roster.push_back(a);
  }
  if (w.roster.empty()) w.roster.push_back(kAllAgents[g.index(4)]);
  w.adaptive_normalization = g.coin();
  c.engine.fusion.use_cosine_scaling = g.coin();
  c.engine.fusion.normalization_window = static_cast<std::size_t>(g.integer(2, 500));
  auto& s = c.engine.agents.signals;
  s.ngram = static_cast<int>(g.integer(1, 5));
  s.max_length = static_cast<std::size_t>(g.integer(1, 4096));
  s.target_steps = static_cast<int>(g.integer(1, 10));
  s.cosine = {g.real(-1, 1), g.real(-1, 1), g.real(-1, 1), g.real(-1, 1)};
  auto& a = c.engine.agents;
  a.optimizer = {g.real(0, 1), g.real(0, 1), g.real(0, 1)};
  a.synthesizer = {static_cast<int>(g.integer(1, 9)), g.engine()()};
  a.analyzer = {g.real(0, 0.1), g.real(0.1, 10), g.real(1e-12, 1e-3), static_cast<std::size_t>(g.integer(1, 1000))};
  c.embedder.url = g.coin() ? "" : "http://127.0.0.1:" + std::to_string(g.integer(1, 65535)) + "/embed";
  c.embedder.dim = static_cast<std::size_t>(g.integer(1, 2048));
  c.embedder.timeout_ms = static_cast<int>(g.integer(1, 100000));
  c.train = {g.real(0, 2), g.real(0, 2), g.real(0, 1), g.real(0, 1), static_cast<int>(g.integer(1, 100000)), g.engine()(),
             g.real(0.01, 5)};
  return c;
}

}  // namespace

TEST_SUITE("config") {
  TEST_CASE("an empty file yields the defaults") {
    Config c = parse_config("");
    CHECK(c == Config{});
    CHECK(c.engine.fusion.weights == default_weights());
    CHECK(parse_config("# only a comment\n\n   \n") == c);
  }

  TEST_CASE("values override defaults, with comments and bracket lists") {
    Config c = parse_config(
        "weights.alpha = 2   # trailing comment\n"
        "agents.roster = [\"optimizer\", \"assessor\"]\n"
        "fusion.use_cosine_scaling = true\n"
        "train.seed = 11\n");
    CHECK(c.engine.fusion.weights.alpha == 2.0);
    CHECK(c.engine.fusion.weights.roster == std::vector<Agent>{Agent::Optimizer, Agent::Assessor});
    CHECK(c.engine.fusion.use_cosine_scaling);
    CHECK(c.train.seed == 11);
    CHECK(parse_config("agents.roster = optimizer, assessor").engine.fusion.weights.roster ==
          c.engine.fusion.weights.roster);
  }

  TEST_CASE("constraint violations name the key") {
    auto e = error_of("weights.alpha = -1");
    CHECK(e.kind() == ErrorKind::InvalidValue);
    CHECK(e.field() == "weights.alpha");
    CHECK(std::string(e.what()).find("weights.alpha") != std::string::npos);

    auto dup = error_of("agents.roster = assessor,assessor");
    CHECK(dup.kind() == ErrorKind::InvalidValue);
    CHECK(dup.field() == "agents.roster");
    CHECK(std::string(dup.what()).find("duplicate") != std::string::npos);

    CHECK(error_of("train.gamma = 1.5").field() == "train.gamma");
    CHECK(error_of("fusion.normalization_window = 1").kind() == ErrorKind::InvalidValue);
    CHECK(error_of("weights.beta = nan").kind() == ErrorKind::InvalidValue);
    CHECK(error_of("weights.beta = abc").kind() == ErrorKind::InvalidValue);
    CHECK(error_of("fusion.use_cosine_scaling = yes").kind() == ErrorKind::InvalidValue);
    CHECK(error_of("agents.roster = critic").kind() == ErrorKind::InvalidValue);
    CHECK(error_of("text.ngram = 99999999999").kind() == ErrorKind::InvalidValue);
    CHECK(error_of("train.seed = -1").kind() == ErrorKind::InvalidValue);
    CHECK(error_of("text.ngram = 0").kind() == ErrorKind::InvalidValue);
    CHECK(parse_config("train.seed = 18446744073709551615").train.seed == 18446744073709551615ull);
  }

  TEST_CASE("unknown keys, duplicates and syntax errors") {
    auto unknown = error_of("weights.zeta = 1");
    CHECK(unknown.kind() == ErrorKind::UnknownKey);
    CHECK(unknown.field() == "weights.zeta");

    auto syntax = error_of("weights.alpha = 1\nthis line has no equals sign\n");
    CHECK(syntax.kind() == ErrorKind::ParseError);
    CHECK(std::string(syntax.what()).find("line 2") != std::string::npos);

    CHECK(error_of(" = 3").kind() == ErrorKind::ParseError);
    CHECK(error_of("weights.alpha = 1\nweights.alpha = 2").kind() == ErrorKind::ParseError);
  }

  TEST_CASE("serialize then parse is the identity") {
    CHECK(parse_config(serialize_config(Config{})) == Config{});
    Gen g(81);
    for (int i = 0; i < 300; ++i) {
      Config c = random_config(g);
      INFO(serialize_config(c));
      CHECK(parse_config(serialize_config(c)) == c);
      CHECK(serialize_config(parse_config(serialize_config(c))) == serialize_config(c));
    }
  }

  TEST_CASE("load_config reads files and reports unreadable paths") {
    crm::testing::TempDir dir;
    crm::testing::write_file(dir / "a.conf", "text.ngram = 2\n");
    CHECK(load_config(dir / "a.conf").engine.agents.signals.ngram == 2);
    try {
      load_config(dir / "missing.conf");
      FAIL("expected Io");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Io);
    }
  }
}
