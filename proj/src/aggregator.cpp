#include "crm/aggregator.hpp"

#include "crm/error.hpp"
#include "crm/math_equiv.hpp"
#include "crm/structure.hpp"

#include <algorithm>
#include <cmath>

namespace crm {

namespace {

constexpr std::array<Component, 6> kWeightedInputs = {Component::Acc, Component::Cs, Component::Sim,
                                                      Component::Fmt, Component::Step, Component::Rep};

void require_positive(double v, const std::string& key) {
  if (!std::isfinite(v) || v <= 0.0) {
    throw Error(ErrorKind::InvalidValue, key + " must be finite and positive", key);
  }
}

void require_nonnegative(double v, const std::string& key) {
  if (!std::isfinite(v) || v < 0.0) {
    throw Error(ErrorKind::InvalidValue, key + " must be finite and nonnegative", key);
  }
}

}  // namespace

void validate(const EngineConfig& config) {
  validate_weights(config.fusion.weights);
  if (config.fusion.normalization_window < 2) {
    throw Error(ErrorKind::InvalidValue, "fusion.normalization_window must be >= 2",
                "fusion.normalization_window");
  }
  const auto& s = config.agents.signals;
  if (s.ngram < 1) throw Error(ErrorKind::InvalidValue, "text.ngram must be >= 1", "text.ngram");
  if (s.max_length < 1) throw Error(ErrorKind::InvalidValue, "text.max_length must be >= 1", "text.max_length");
  if (s.target_steps < 1) {
    throw Error(ErrorKind::InvalidValue, "text.target_steps must be >= 1", "text.target_steps");
  }
  for (double b : {s.cosine.min_correct, s.cosine.max_correct, s.cosine.min_wrong, s.cosine.max_wrong}) {
    if (!std::isfinite(b)) throw Error(ErrorKind::InvalidBounds, "cosine bounds must be finite", "text.cosine");
  }
  const auto& o = config.agents.optimizer;
  require_nonnegative(o.w_diversity, "agents.optimizer.w_diversity");
  require_nonnegative(o.w_efficiency, "agents.optimizer.w_efficiency");
  require_nonnegative(o.w_repetition, "agents.optimizer.w_repetition");
  if (config.agents.synthesizer.count < 1) {
    throw Error(ErrorKind::InvalidValue, "agents.synthesizer.count must be >= 1", "agents.synthesizer.count");
  }
  const auto& a = config.agents.analyzer;
  require_nonnegative(a.v_min, "agents.analyzer.v_min");
  require_positive(a.z_max, "agents.analyzer.z_max");
  require_positive(a.epsilon, "agents.analyzer.epsilon");
  if (a.window < 1) throw Error(ErrorKind::InvalidValue, "agents.analyzer.window must be >= 1", "agents.analyzer.window");
}

double collab_reward(const ComponentScores& components, const WeightConfig& w, bool use_cs,
                     std::vector<Component>* excluded) {
  const Component accuracy = use_cs ? Component::Cs : Component::Acc;
  const std::pair<Component, double> terms[] = {
      {accuracy, w.alpha}, {Component::Sim, w.beta}, {Component::Fmt, w.gamma},
      {Component::Step, w.delta}, {Component::Rep, -w.eta}};
  double sum = 0.0;
  for (const auto& [component, weight] : terms) {
    const auto& value = components[component];
    if (!value) {
      if (excluded) excluded->push_back(component);
      continue;
    }
    if (!std::isfinite(*value)) {
      throw Error(ErrorKind::NonFiniteComponent,
                  "component '" + std::string(to_string(component)) + "' is not finite",
                  std::string(to_string(component)));
    }
    sum += weight * *value;
  }
  return sum;
}

double fusion_sum(double collab, std::optional<double> enhanced,
                  const std::map<std::string, double>& agent_scores, const WeightConfig& w) {
  if (!std::isfinite(collab)) throw Error(ErrorKind::NonFiniteInput, "collab reward is not finite", "collab");
  double sum = collab;
  if (enhanced) {
    if (!std::isfinite(*enhanced)) throw Error(ErrorKind::NonFiniteInput, "enhanced reward is not finite", "enhanced");
    sum += w.w_enhanced * *enhanced;
  }
  for (const auto& [name, score] : agent_scores) {
    if (!std::isfinite(score)) {
      throw Error(ErrorKind::NonFiniteInput, "score of '" + name + "' is not finite", name);
    }
    auto it = w.lambda.find(name);
    sum += (it == w.lambda.end() ? 1.0 : it->second) * score;
  }
  return sum;
}

double fuse(double collab, std::optional<double> enhanced,
            const std::map<std::string, double>& agent_scores, const WeightConfig& w) {
  return std::tanh(fusion_sum(collab, enhanced, agent_scores, w));
}

double normalize_adaptive(std::span<const double> history, double value, double epsilon) {
  if (history.size() < 2) return value;
  double mean = 0.0;
  for (double h : history) mean += h;
  mean /= static_cast<double>(history.size());
  double ss = 0.0;
  for (double h : history) ss += (h - mean) * (h - mean);
  const double stddev = std::sqrt(ss / static_cast<double>(history.size() - 1));
  return (value - mean) / std::max(stddev, epsilon);
}

double AdaptiveNormalizer::normalize(Component component, double value) const {
  auto it = histories_.find(component);
  if (it == histories_.end()) return value;
  const std::vector<double> window(it->second.begin(), it->second.end());
  return normalize_adaptive(window, value);
}

void AdaptiveNormalizer::observe(Component component, double value) {
  auto& h = histories_[component];
  h.push_back(value);
  while (h.size() > window_) h.pop_front();
}

const std::deque<double>& AdaptiveNormalizer::history(Component component) const {
  static const std::deque<double> empty;
  auto it = histories_.find(component);
  return it == histories_.end() ? empty : it->second;
}

GroupScoringError::GroupScoringError(std::vector<std::pair<std::string, std::string>> failures)
    : Error(ErrorKind::GroupScoringFailed,
            [&] {
              std::string msg = "group could not be scored:";
              for (const auto& [id, why] : failures) msg += " [" + id + "] " + why + ";";
              return msg;
            }()),
      failures_(std::move(failures)) {}

std::vector<RewardBreakdown> score_rollout_group(std::span<const Rollout> group,
                                                 const EngineConfig& config, const Embedder& embedder,
                                                 const PreferenceRanker& ranker, ScoringState& state) {
  if (group.empty()) throw Error(ErrorKind::EmptyGroup, "cannot score an empty group");
  std::vector<std::pair<std::string, std::string>> failures;
  for (const auto& r : group) {
    try {
      validate_rollout(r);
    } catch (const Error& e) {
      failures.emplace_back(r.id(), e.what());
    }
  }
  if (!failures.empty()) throw GroupScoringError(std::move(failures));

  const auto& weights = config.fusion.weights;
  const auto& signals = config.agents.signals;
  const bool use_cs = config.fusion.use_cosine_scaling;
  const std::size_t n = group.size();

  std::vector<RewardBreakdown> out(n);
  // Failures of the embedder or ranker affect the whole group.
  auto for_whole_group = [&](auto&& fn) {
    try {
      return fn();
    } catch (const Error& e) {
      std::vector<std::pair<std::string, std::string>> all;
      for (const auto& r : group) all.emplace_back(r.id(), e.what());
      throw GroupScoringError(std::move(all));
    }
  };

  std::vector<ParsedResponse> parsed;
  for (std::size_t i = 0; i < n; ++i) {
    const Rollout& r = group[i];
    parsed.push_back(parse_response(r.response));
    auto& c = out[i].components;
    out[i].rollout_id = r.id();
    c[Component::Acc] = accuracy_reward(parsed[i], r.reference);
    c[Component::Fmt] = format_reward(parsed[i]);
    c[Component::Step] = step_reward(parsed[i], signals.target_steps);
    c[Component::Outcome] = outcome_reward(parsed[i], r.reference);
    c[Component::Rep] = repetition_penalty(r.response, signals.ngram);
    c[Component::Cs] = cosine_length_scale(*c[Component::Acc] == 1.0, token_length(r.response),
                                           signals.max_length, signals.cosine);
    c[Component::Sim] =
        for_whole_group([&] { return similarity_reward(r.response, r.reference.reference_text, embedder); });
  }

  auto base = for_whole_group([&] { return ranker.base_scores(group, embedder); });
  if (base) {
    auto ranks = ranker_reward(group, *base);
    for (std::size_t i = 0; i < n; ++i) out[i].components[Component::Ranker] = ranks[i];
  }

  // Weighted-sum inputs, optionally z-normalized against the windows seen
  // before this group.
  std::vector<ComponentScores> inputs(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (Component c : kWeightedInputs) {
      const auto& v = out[i].components[c];
      if (!v) continue;
      inputs[i][c] = weights.adaptive_normalization ? state.normalizer.normalize(c, *v) : *v;
    }
    out[i].collab = collab_reward(inputs[i], weights, use_cs);
  }

  auto scores_of = [&](const std::vector<AgentReport>& reports, std::size_t i) {
    std::map<std::string, double> scores;
    for (const auto& r : reports) {
      if (r.applicable) scores[std::string(to_string(r.agent))] = r.score;
    }
    if (const auto& rank = out[i].components[Component::Ranker]) scores[std::string(kRankerKey)] = *rank;
    return scores;
  };

  const StabilityBatchFn pre_stability = [&](const RosterOutcome& partial) {
    std::vector<double> batch;
    for (std::size_t i = 0; i < n; ++i) {
      batch.push_back(fuse(out[i].collab, partial.enhanced[i], scores_of(partial.reports[i], i), weights));
    }
    return batch;
  };
  RosterOutcome roster = for_whole_group([&] {
    return roster_evaluate(weights.roster, group, config.agents, embedder, state.stats, pre_stability);
  });

  for (std::size_t i = 0; i < n; ++i) {
    auto& b = out[i];
    b.components[Component::Enhanced] = roster.enhanced[i];
    for (const auto& report : roster.reports[i]) {
      if (report.agent == Agent::Optimizer) b.components[Component::Diversity] = report.diagnostics.at("diversity");
      if (report.agent == Agent::Analyzer) b.components[Component::Stability] = report.score;
    }
    b.reports = roster.reports[i];
    auto scores = scores_of(b.reports, i);
    b.pre_squash = fusion_sum(b.collab, b.components[Component::Enhanced], scores, weights);
    b.fused = std::tanh(b.pre_squash);
    scores.erase(std::string(kRankerKey));
    b.agent_scores = std::move(scores);
    for (Component c : kAllComponents) {
      if (!b.components.applicable(c)) b.excluded.push_back(c);
    }
  }

  if (weights.adaptive_normalization) {
    for (std::size_t i = 0; i < n; ++i) {
      for (Component c : kWeightedInputs) {
        if (const auto& v = out[i].components[c]) state.normalizer.observe(c, *v);
      }
    }
  }
  return out;
}

}  // namespace crm
