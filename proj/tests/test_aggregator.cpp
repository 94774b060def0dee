#include "doctest.h"

#include "crm/aggregator.hpp"
#include "crm/error.hpp"
#include "support/fixtures.hpp"
#include "support/gen.hpp"
#include "support/oracles.hpp"

#include <cmath>

using namespace crm;
using crm::testing::Gen;
using crm::testing::make_rollout;
using crm::testing::tagged;

namespace {

class FailingEmbedder final : public Embedder {
 public:
  std::string name() const override { return "failing"; }
  std::size_t dimension() const override { return 4; }
  EmbeddingVector embed(std::string_view) const override {
    throw Error(ErrorKind::EmbedderFailure, "service unavailable");
  }
};

ComponentScores random_components(Gen& g) {
  ComponentScores c;
  for (Component k : kAllComponents) {
    if (g.coin(0.8)) c[k] = g.real(0.0, 1.0);
  }
  return c;
}

// The weighted sum written out term by term.
double collab_oracle(const ComponentScores& c, const WeightConfig& w, bool use_cs) {
  auto v = [&](Component k) { return c[k].value_or(0.0); };
  return w.alpha * v(use_cs ? Component::Cs : Component::Acc) + w.beta * v(Component::Sim) +
         w.gamma * v(Component::Fmt) + w.delta * v(Component::Step) - w.eta * v(Component::Rep);
}

std::vector<Rollout> sample_group() {
  const std::string ref = tagged("Step 1: 2 apples\nStep 2: buy 2 more\nStep 3: 2 + 2 = 4", "4");
  return {make_rollout("a", ref, "4", {Rational(2)}, ref, std::string("g")),
          make_rollout("b", tagged("Step 1: 2\nStep 2: 3", "5"), "4", {Rational(2)}, ref, std::string("g")),
          make_rollout("c", "The answer is 4.", "4", {Rational(2)}, ref, std::string("g"))};
}

}  // namespace

TEST_SUITE("aggregator") {
  TEST_CASE("collab example") {
    ComponentScores c;
    c[Component::Acc] = 1.0;
    c[Component::Sim] = 0.8;
    c[Component::Fmt] = 1.0;
    c[Component::Step] = 2.0 / 3.0;
    c[Component::Rep] = 0.6;
    const double collab = collab_reward(c, default_weights(), false);
    CHECK(collab == doctest::Approx(1.0 + 0.4 + 0.2 + 0.2 * 2.0 / 3.0 - 0.18).epsilon(1e-12));
    CHECK(collab == doctest::Approx(1.553333).epsilon(1e-6));
    CHECK(fuse(collab, std::nullopt, {}, default_weights()) == doctest::Approx(crm::testing::tanh_oracle(collab)).epsilon(1e-12));
    // The exp-based oracle gives 0.914334; a rounding of 0.91423 is off by 1e-4.
    CHECK(crm::testing::tanh_oracle(collab) == doctest::Approx(0.914334).epsilon(1e-6));
  }

  TEST_CASE("inapplicable components are excluded, not zeroed into the record") {
    ComponentScores c;
    c[Component::Acc] = 1.0;
    c[Component::Fmt] = 1.0;
    std::vector<Component> excluded;
    CHECK(collab_reward(c, default_weights(), false, &excluded) == doctest::Approx(1.2));
    CHECK(excluded == std::vector<Component>{Component::Sim, Component::Step, Component::Rep});
  }

  TEST_CASE("non-finite components and inputs are errors") {
    ComponentScores c;
    c[Component::Sim] = std::nan("");
    CHECK_THROWS_AS(collab_reward(c, default_weights(), false), Error);
    CHECK_THROWS_AS(fusion_sum(INFINITY, std::nullopt, {}, default_weights()), Error);
    CHECK_THROWS_AS(fusion_sum(0.0, std::nullopt, {{"assessor", NAN}}, default_weights()), Error);
  }

  TEST_CASE("collab matches the term-by-term oracle and is linear in the weights") {
    Gen g(61);
    for (int i = 0; i < 1000; ++i) {
      auto c = random_components(g);
      WeightConfig w = default_weights();
      w.alpha = g.real(0, 2);
      w.beta = g.real(0, 2);
      w.gamma = g.real(0, 2);
      w.delta = g.real(0, 2);
      w.eta = g.real(0, 2);
      bool cs = g.coin();
      double base = collab_reward(c, w, cs);
      CHECK(base == doctest::Approx(collab_oracle(c, w, cs)).epsilon(1e-12));
      double k = g.real(0, 3);
      WeightConfig scaled = w;
      for (double* x : {&scaled.alpha, &scaled.beta, &scaled.gamma, &scaled.delta, &scaled.eta}) *x *= k;
      CHECK(collab_reward(c, scaled, cs) == doctest::Approx(k * base).epsilon(1e-9));
      // A zero weight silences its component.
      WeightConfig no_sim = w;
      no_sim.beta = 0.0;
      auto changed = c;
      changed[Component::Sim] = g.real(0, 1);
      CHECK(collab_reward(changed, no_sim, cs) == doctest::Approx(collab_reward(c, no_sim, cs)).epsilon(1e-12));
    }
  }

  TEST_CASE("fused reward is bounded and strictly increasing in each input") {
    Gen g(62);
    const WeightConfig w = default_weights();
    for (int i = 0; i < 1000; ++i) {
      double collab = g.real(-3, 3);
      std::optional<double> enh = g.coin() ? std::optional<double>(g.real(-1, 1)) : std::nullopt;
      std::map<std::string, double> scores;
      for (const char* name : {"analyzer", "optimizer", "assessor", "synthesizer", "ranker"}) {
        if (g.coin()) scores[name] = g.real(-1, 1);
      }
      double f = fuse(collab, enh, scores, w);
      CHECK(f >= -1.0);
      CHECK(f <= 1.0);
      const double h = 0.01;
      CHECK(fuse(collab + h, enh, scores, w) > f);
      if (enh) CHECK(fuse(collab, *enh + h, scores, w) > f);
      for (auto& [name, s] : scores) {
        auto bumped = scores;
        bumped[name] = s + h;
        CHECK(fuse(collab, enh, bumped, w) > f);
      }
    }
  }

  TEST_CASE("normalize_adaptive examples") {
    std::vector<double> h = {0.0, 2.0};
    CHECK(normalize_adaptive(h, 2.0) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
    CHECK(normalize_adaptive(h, 2.0) == doctest::Approx(0.70711).epsilon(1e-5));
    std::vector<double> one = {5.0};
    CHECK(normalize_adaptive(one, 3.0) == 3.0);
    std::vector<double> flat = {1.0, 1.0};
    CHECK(normalize_adaptive(flat, 1.0) == 0.0);
  }

  TEST_CASE("score_rollout_group: breakdown is self-consistent") {
    EngineConfig config;
    HashedBowEmbedder e;
    SimilarityRanker ranker;
    ScoringState state(config);
    auto group = sample_group();
    auto out = score_rollout_group(group, config, e, ranker, state);
    REQUIRE(out.size() == 3);
    const auto& w = config.fusion.weights;
    for (std::size_t i = 0; i < out.size(); ++i) {
      const auto& b = out[i];
      CHECK(b.rollout_id == group[i].id());
      CHECK(b.collab == doctest::Approx(collab_oracle(b.components, w, false)).epsilon(1e-12));
      double sum = b.collab + w.w_enhanced * b.components[Component::Enhanced].value_or(0.0) +
                   w.lambda.at("ranker") * b.components[Component::Ranker].value_or(0.0);
      for (const auto& [name, s] : b.agent_scores) sum += w.lambda.at(name) * s;
      CHECK(b.pre_squash == doctest::Approx(sum).epsilon(1e-12));
      CHECK(b.fused == doctest::Approx(std::tanh(b.pre_squash)).epsilon(1e-15));
      REQUIRE(b.reports.size() == 4);
      for (Component c : b.excluded) CHECK_FALSE(b.components.applicable(c));
    }
    // The reference-identical response outranks a wrong one and an untagged one.
    CHECK(out[0].fused > out[1].fused);
    CHECK(out[0].fused > out[2].fused);
    CHECK(*out[0].components[Component::Ranker] == 1.0);
    CHECK(state.stats.count() == 3);
  }

  TEST_CASE("score_rollout_group is deterministic given the same state") {
    EngineConfig config;
    config.fusion.weights.adaptive_normalization = true;
    HashedBowEmbedder e;
    SimilarityRanker ranker;
    ScoringState s1(config), s2(config);
    auto group = sample_group();
    for (int round = 0; round < 4; ++round) {
      CHECK(score_rollout_group(group, config, e, ranker, s1) == score_rollout_group(group, config, e, ranker, s2));
    }
  }

  TEST_CASE("embedder failure fails the whole group") {
    EngineConfig config;
    FailingEmbedder bad;
    SimilarityRanker ranker;
    ScoringState state(config);
    auto group = sample_group();
    try {
      score_rollout_group(group, config, bad, ranker, state);
      FAIL("expected GroupScoringError");
    } catch (const GroupScoringError& e) {
      CHECK(e.kind() == ErrorKind::GroupScoringFailed);
      REQUIRE(e.failures().size() == 3);
      CHECK(e.failures()[1].first == "b");
    }
  }

  TEST_CASE("invalid rollouts are named") {
    EngineConfig config;
    HashedBowEmbedder e;
    SimilarityRanker ranker;
    ScoringState state(config);
    auto group = sample_group();
    group[2].reference.final_answer.clear();
    try {
      score_rollout_group(group, config, e, ranker, state);
      FAIL("expected GroupScoringError");
    } catch (const GroupScoringError& err) {
      REQUIRE(err.failures().size() == 1);
      CHECK(err.failures()[0].first == "c");
    }
    CHECK(state.stats.count() == 0);
  }

  TEST_CASE("ablation: dropping agents removes exactly their terms") {
    HashedBowEmbedder e;
    SimilarityRanker ranker;
    auto group = sample_group();
    EngineConfig full;
    ScoringState sf(full);
    auto with_all = score_rollout_group(group, full, e, ranker, sf);
    EngineConfig lean;
    lean.fusion.weights.roster = {Agent::Assessor};
    ScoringState sl(lean);
    auto assessor_only = score_rollout_group(group, lean, e, ranker, sl);
    for (std::size_t i = 0; i < group.size(); ++i) {
      CHECK(assessor_only[i].collab == with_all[i].collab);
      CHECK(assessor_only[i].agent_scores.size() == 1);
      CHECK(assessor_only[i].agent_scores.at("assessor") == with_all[i].agent_scores.at("assessor"));
      CHECK_FALSE(assessor_only[i].components.applicable(Component::Enhanced));
      CHECK_FALSE(assessor_only[i].components.applicable(Component::Stability));
      CHECK_FALSE(assessor_only[i].components.applicable(Component::Diversity));
      double dropped = full.fusion.weights.w_enhanced * with_all[i].components[Component::Enhanced].value_or(0.0);
      for (const char* name : {"analyzer", "optimizer", "synthesizer"}) {
        auto it = with_all[i].agent_scores.find(name);
        if (it != with_all[i].agent_scores.end()) dropped += it->second;
      }
      CHECK(assessor_only[i].pre_squash == doctest::Approx(with_all[i].pre_squash - dropped).epsilon(1e-12));
    }
  }
}
