#pragma once

#include "crm/agents.hpp"
#include "crm/error.hpp"
#include "crm/model.hpp"
#include "crm/text_signals.hpp"

#include <array>
#include <deque>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace crm {

struct FusionConfig {
  WeightConfig weights = default_weights();
  bool use_cosine_scaling = false;  // R_cs takes the place of R_acc
  std::size_t normalization_window = 64;

  bool operator==(const FusionConfig&) const = default;
};

// Everything score_rollout_group needs besides the embedder and ranker.
struct EngineConfig {
  FusionConfig fusion;
  AgentParams agents;

  bool operator==(const EngineConfig&) const = default;
};

// Throws Error(InvalidValue) naming the violated constraint.
void validate(const EngineConfig& config);

// alpha*R_acc (or R_cs) + beta*R_sim + gamma*R_fmt + delta*R_step - eta*R_rep.
// Inapplicable terms add nothing and are appended to `excluded` when given.
// Throws Error(NonFiniteComponent).
double collab_reward(const ComponentScores& components, const WeightConfig& weights, bool use_cs,
                     std::vector<Component>* excluded = nullptr);

// collab + w_enhanced * enhanced + sum_i lambda_i * score_i. Keys of
// `agent_scores` are agent names or "ranker"; a key without a lambda entry
// weighs 1. Throws Error(NonFiniteInput).
double fusion_sum(double collab, std::optional<double> enhanced,
                  const std::map<std::string, double>& agent_scores, const WeightConfig& weights);

// tanh(fusion_sum(...)): bounded and strictly increasing in every input.
double fuse(double collab, std::optional<double> enhanced,
            const std::map<std::string, double>& agent_scores, const WeightConfig& weights);

// (value - mean) / max(stddev, epsilon) over the sample statistics of
// `history`; identity with fewer than two observations.
double normalize_adaptive(std::span<const double> history, double value, double epsilon = 1e-8);

// Per-component windows of the raw weighted-sum inputs, used when adaptive
// normalization is on.
class AdaptiveNormalizer {
 public:
  explicit AdaptiveNormalizer(std::size_t window = 64) : window_(window) {}

  double normalize(Component component, double value) const;
  void observe(Component component, double value);
  const std::deque<double>& history(Component component) const;

 private:
  std::size_t window_;
  std::map<Component, std::deque<double>> histories_;
};

// Mutable state carried across groups. Score groups through one owner, in
// order, to keep results deterministic.
struct ScoringState {
  RunningStats stats;
  AdaptiveNormalizer normalizer;

  explicit ScoringState(const EngineConfig& config)
      : stats(config.agents.analyzer.window), normalizer(config.fusion.normalization_window) {}
};

// Raised when one or more rollouts of a group cannot be scored; every
// affected rollout id is listed with its reason.
class GroupScoringError : public Error {
 public:
  explicit GroupScoringError(std::vector<std::pair<std::string, std::string>> failures);
  const std::vector<std::pair<std::string, std::string>>& failures() const noexcept {
    return failures_;
  }

 private:
  std::vector<std::pair<std::string, std::string>> failures_;
};

// Scores one group of rollouts (same prompt): parsing, every component
// evaluator, the group ranker, the rostered agents, the weighted sum and the
// fusion. The analyzer statistics advance by exactly one batch per call.
std::vector<RewardBreakdown> score_rollout_group(std::span<const Rollout> group,
                                                 const EngineConfig& config, const Embedder& embedder,
                                                 const PreferenceRanker& ranker, ScoringState& state);

}  // namespace crm
