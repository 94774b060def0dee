#include "crm/model.hpp"

#include "crm/error.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace crm {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::EmptyPromptId: return "EmptyPromptId";
    case ErrorKind::EmptyPromptText: return "EmptyPromptText";
    case ErrorKind::EmptyFinalAnswer: return "EmptyFinalAnswer";
    case ErrorKind::NonFiniteIntermediate: return "NonFiniteIntermediate";
    case ErrorKind::InvalidBounds: return "InvalidBounds";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::EmbedderFailure: return "EmbedderFailure";
    case ErrorKind::EmptyGroup: return "EmptyGroup";
    case ErrorKind::EmptyBatch: return "EmptyBatch";
    case ErrorKind::NoReferenceText: return "NoReferenceText";
    case ErrorKind::NothingToPerturb: return "NothingToPerturb";
    case ErrorKind::NonFiniteComponent: return "NonFiniteComponent";
    case ErrorKind::NonFiniteInput: return "NonFiniteInput";
    case ErrorKind::DivergedValues: return "DivergedValues";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::UnknownKey: return "UnknownKey";
    case ErrorKind::InvalidValue: return "InvalidValue";
    case ErrorKind::NoRecords: return "NoRecords";
    case ErrorKind::MalformedRecord: return "MalformedRecord";
    case ErrorKind::GroupScoringFailed: return "GroupScoringFailed";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, std::string message, std::string field)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message),
      kind_(kind),
      field_(std::move(field)) {}

std::string_view to_string(Agent agent) {
  switch (agent) {
    case Agent::Analyzer: return "analyzer";
    case Agent::Optimizer: return "optimizer";
    case Agent::Assessor: return "assessor";
    case Agent::Synthesizer: return "synthesizer";
  }
  return "unknown";
}

std::optional<Agent> parse_agent(std::string_view name) {
  for (Agent a : kAllAgents) {
    if (to_string(a) == name) return a;
  }
  return std::nullopt;
}

std::string_view to_string(Component component) {
  switch (component) {
    case Component::Acc: return "acc";
    case Component::Sim: return "sim";
    case Component::Fmt: return "fmt";
    case Component::Step: return "step";
    case Component::Cs: return "cs";
    case Component::Rep: return "rep";
    case Component::Ranker: return "ranker";
    case Component::Outcome: return "outcome";
    case Component::Enhanced: return "enhanced";
    case Component::Diversity: return "diversity";
    case Component::Stability: return "stability";
  }
  return "unknown";
}

WeightConfig default_weights() {
  WeightConfig w;
  for (Agent a : kAllAgents) w.lambda[std::string(to_string(a))] = 1.0;
  w.lambda[std::string(kRankerKey)] = 1.0;
  w.roster.assign(kAllAgents.begin(), kAllAgents.end());
  return w;
}

void validate_roster(const std::vector<Agent>& roster) {
  if (roster.empty()) {
    throw Error(ErrorKind::InvalidValue, "roster must not be empty", "agents.roster");
  }
  std::set<Agent> seen;
  for (Agent a : roster) {
    if (!seen.insert(a).second) {
      throw Error(ErrorKind::InvalidValue,
                  "roster lists '" + std::string(to_string(a)) + "' twice (duplicate)",
                  "agents.roster");
    }
  }
  // Columns and evaluation follow the canonical analyzer, optimizer,
  // assessor, synthesizer order.
  if (!std::is_sorted(roster.begin(), roster.end())) {
    throw Error(ErrorKind::InvalidValue,
                "roster must follow the order analyzer, optimizer, assessor, synthesizer",
                "agents.roster");
  }
}

void validate_weights(const WeightConfig& w) {
  auto check = [](double v, const std::string& key) {
    if (!std::isfinite(v) || v < 0.0) {
      throw Error(ErrorKind::InvalidValue, key + " must be finite and nonnegative", key);
    }
  };
  check(w.alpha, "weights.alpha");
  check(w.beta, "weights.beta");
  check(w.gamma, "weights.gamma");
  check(w.delta, "weights.delta");
  check(w.eta, "weights.eta");
  check(w.w_enhanced, "weights.enhanced");
  for (const auto& [name, value] : w.lambda) {
    if (name != kRankerKey && !parse_agent(name)) {
      throw Error(ErrorKind::UnknownKey, "unknown lambda weight '" + name + "'",
                  "weights.lambda." + name);
    }
    check(value, "weights.lambda." + name);
  }
  validate_roster(w.roster);
}

const Rollout& validate_rollout(const Rollout& rollout) {
  if (rollout.prompt.id.empty()) {
    throw Error(ErrorKind::EmptyPromptId, "prompt id is empty", "id");
  }
  if (rollout.prompt.text.empty()) {
    throw Error(ErrorKind::EmptyPromptText, "prompt text is empty", "prompt");
  }
  if (rollout.reference.final_answer.empty()) {
    throw Error(ErrorKind::EmptyFinalAnswer, "reference final answer is empty",
                "reference.final_answer");
  }
  const auto& values = rollout.reference.intermediate_values;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!values[i].is_finite()) {
      std::string field = "reference.intermediate_values[" + std::to_string(i) + "]";
      throw Error(ErrorKind::NonFiniteIntermediate, field + " is not finite", field);
    }
  }
  return rollout;
}

}  // namespace crm
