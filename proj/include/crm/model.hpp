#pragma once

#include "crm/rational.hpp"

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace crm {

struct Prompt {
  std::string id;
  std::string text;
  std::optional<std::string> group_id;

  bool operator==(const Prompt&) const = default;
};

struct Reference {
  std::string final_answer;
  std::vector<Rational> intermediate_values;
  std::optional<std::string> reference_text;

  bool operator==(const Reference&) const = default;
};

// One prompt/response pair: the unit every evaluator scores. An empty
// response is valid input and simply scores poorly.
struct Rollout {
  Prompt prompt;
  std::string response;
  Reference reference;

  const std::string& id() const noexcept { return prompt.id; }
  bool operator==(const Rollout&) const = default;
};

// Specialist agents, in the canonical roster order.
enum class Agent { Analyzer, Optimizer, Assessor, Synthesizer };

inline constexpr std::array<Agent, 4> kAllAgents = {
    Agent::Analyzer, Agent::Optimizer, Agent::Assessor, Agent::Synthesizer};

std::string_view to_string(Agent agent);
std::optional<Agent> parse_agent(std::string_view name);

// Reward components reported for every rollout.
enum class Component {
  Acc,
  Sim,
  Fmt,
  Step,
  Cs,
  Rep,
  Ranker,
  Outcome,
  Enhanced,
  Diversity,
  Stability,
};

inline constexpr std::size_t kComponentCount = 11;
inline constexpr std::array<Component, kComponentCount> kAllComponents = {
    Component::Acc,      Component::Sim,     Component::Fmt,
    Component::Step,     Component::Cs,      Component::Rep,
    Component::Ranker,   Component::Outcome, Component::Enhanced,
    Component::Diversity, Component::Stability};

std::string_view to_string(Component component);

// Per-component scores. An empty optional means "not applicable": the
// component is excluded from aggregation rather than treated as zero.
class ComponentScores {
 public:
  const std::optional<double>& operator[](Component c) const {
    return values_[static_cast<std::size_t>(c)];
  }
  std::optional<double>& operator[](Component c) {
    return values_[static_cast<std::size_t>(c)];
  }
  bool applicable(Component c) const { return (*this)[c].has_value(); }

  bool operator==(const ComponentScores&) const = default;

 private:
  std::array<std::optional<double>, kComponentCount> values_{};
};

// One agent's partial signal R_i for a rollout.
struct AgentReport {
  Agent agent = Agent::Analyzer;
  double score = 0.0;  // in [-1, 1]
  bool applicable = true;
  std::map<std::string, double> diagnostics;
  std::vector<std::string> notes;

  bool operator==(const AgentReport&) const = default;
};

struct RewardBreakdown {
  std::string rollout_id;
  ComponentScores components;
  std::vector<AgentReport> reports;  // roster order
  std::map<std::string, double> agent_scores;
  // Components that did not contribute to the weighted sums.
  std::vector<Component> excluded;
  double collab = 0.0;
  double pre_squash = 0.0;
  double fused = 0.0;  // the training reward, in [-1, 1]

  bool operator==(const RewardBreakdown&) const = default;
};

// Aggregation coefficients. `lambda` holds the per-agent fusion weights plus
// the ranker weight under the key "ranker".
struct WeightConfig {
  double alpha = 1.0;
  double beta = 0.5;
  double gamma = 0.2;
  double delta = 0.2;
  double eta = 0.3;
  double w_enhanced = 0.5;
  std::map<std::string, double> lambda;
  std::vector<Agent> roster;
  bool adaptive_normalization = false;

  bool operator==(const WeightConfig&) const = default;
};

inline constexpr std::string_view kRankerKey = "ranker";

WeightConfig default_weights();

// Throws Error(InvalidValue) naming the violated constraint.
void validate_weights(const WeightConfig& weights);
void validate_roster(const std::vector<Agent>& roster);

// Returns the rollout unchanged if its invariants hold, otherwise throws
// Error(EmptyPromptId | EmptyPromptText | EmptyFinalAnswer |
// NonFiniteIntermediate) naming the offending field.
const Rollout& validate_rollout(const Rollout& rollout);

}  // namespace crm
