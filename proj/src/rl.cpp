#include "crm/rl.hpp"

#include "crm/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>

namespace crm::rl {

std::string ToyEnv::render(const Actions& actions) const {
  std::string reasoning;
  for (int i = 0; i < actions[kSteps]; ++i) reasoning += step_lines[i] + "\n";
  if (actions[kPadding] == kPad) {
    for (int i = 0; i < filler_repeats; ++i) reasoning += (i ? " " : "") + filler;
    reasoning += "\n";
  }
  const std::string& answer = answers[actions[kAnswer]];
  if (actions[kProtocol] == kTagsOn) {
    return "<think>\n" + reasoning + "</think>\n<answer>" + answer + "</answer>";
  }
  return reasoning + "The answer is " + answer + ".";
}

Rollout ToyEnv::make_rollout(const Actions& actions) const {
  return Rollout{prompt, render(actions), reference};
}

ToyEnv ToyEnv::standard() {
  ToyEnv env;
  env.prompt = {"toy-apples", "Tom has 2 apples and buys 2 more. How many apples does he have?",
                std::nullopt};
  env.step_lines = {"Step 1: Tom starts with 2 apples.", "Step 2: He buys 2 more apples.",
                    "Step 3: 2 + 2 = 4 apples in total."};
  env.answers = {"4", "3", "5"};
  env.filler = "let me check that again";
  env.reference.final_answer = "4";
  env.reference.intermediate_values = {Rational(2)};
  // No reference text: the ranker, sim and the synthesizer stay inapplicable,
  // so a singleton episode is not credited a constant top rank.
  return env;
}

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

Policy::Policy(double temperature) : temperature_(temperature) {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw Error(ErrorKind::InvalidValue, "temperature must be positive", "train.temperature");
  }
  for (int n : kActionCounts) logits_.emplace_back(static_cast<std::size_t>(n), 0.0);
}

std::vector<double> Policy::probabilities(int state) const {
  const auto& z = logits_.at(static_cast<std::size_t>(state));
  const double top = *std::max_element(z.begin(), z.end());
  std::vector<double> p(z.size());
  double total = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    p[i] = std::exp((z[i] - top) / temperature_);
    total += p[i];
  }
  for (double& v : p) v /= total;
  return p;
}

double Policy::log_prob(int state, int action) const {
  const auto& z = logits_.at(static_cast<std::size_t>(state));
  const double top = *std::max_element(z.begin(), z.end());
  double total = 0.0;
  for (double v : z) total += std::exp((v - top) / temperature_);
  return (z.at(static_cast<std::size_t>(action)) - top) / temperature_ - std::log(total);
}

int Policy::sample(int state, std::mt19937_64& rng) const {
  const auto p = probabilities(state);
  double u = uniform01(rng);
  for (std::size_t i = 0; i + 1 < p.size(); ++i) {
    if (u < p[i]) return static_cast<int>(i);
    u -= p[i];
  }
  return static_cast<int>(p.size() - 1);
}

int Policy::greedy(int state) const {
  const auto& z = logits_.at(static_cast<std::size_t>(state));
  return static_cast<int>(std::max_element(z.begin(), z.end()) - z.begin());
}

EpisodeScorer::EpisodeScorer(EngineConfig config)
    : config_(std::move(config)), state_(config_) {
  validate(config_);
}

RewardBreakdown EpisodeScorer::score(const Rollout& rollout) {
  return score_rollout_group(std::span<const Rollout>(&rollout, 1), config_, embedder_, ranker_, state_)
      .front();
}

Episode play_actions(const ToyEnv& env, const Policy& policy, const ValueFn& value,
                     const Actions& actions, EpisodeScorer& scorer) {
  Episode ep;
  ep.actions = actions;
  for (int s = 0; s < kSlotCount; ++s) {
    ep.trajectory.steps.push_back({s, actions[s], 0.0, value.values[s], policy.log_prob(s, actions[s])});
  }
  ep.rollout = env.make_rollout(actions);
  ep.breakdown = scorer.score(ep.rollout);
  ep.trajectory.steps.back().reward = ep.breakdown.fused;
  return ep;
}

Episode rollout_episode(const ToyEnv& env, const Policy& policy, const ValueFn& value,
                        std::mt19937_64& rng, EpisodeScorer& scorer) {
  Actions actions{};
  for (int s = 0; s < kSlotCount; ++s) actions[s] = policy.sample(s, rng);
  return play_actions(env, policy, value, actions, scorer);
}

std::vector<double> gae(const Trajectory& traj, double gamma, double lam) {
  const auto& steps = traj.steps;
  std::vector<double> adv(steps.size());
  double running = 0.0;
  for (std::size_t t = steps.size(); t-- > 0;) {
    const double next_value = t + 1 < steps.size() ? steps[t + 1].value : 0.0;
    const double delta = steps[t].reward + gamma * next_value - steps[t].value;
    running = delta + gamma * lam * running;
    adv[t] = running;
  }
  return adv;
}

std::vector<double> returns_to_go(const Trajectory& traj, double gamma) {
  std::vector<double> out(traj.steps.size());
  double running = 0.0;
  for (std::size_t t = traj.steps.size(); t-- > 0;) {
    running = traj.steps[t].reward + gamma * running;
    out[t] = running;
  }
  return out;
}

namespace {

void require_same_length(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw Error(ErrorKind::LengthMismatch, std::string(what) + ": trajectory has " + std::to_string(a) +
                                               " steps but " + std::to_string(b) + " values were given");
  }
}

}  // namespace

double policy_loss(const Trajectory& traj, std::span<const double> advantages) {
  require_same_length(traj.steps.size(), advantages.size(), "policy_loss");
  if (traj.steps.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t t = 0; t < traj.steps.size(); ++t) sum += advantages[t] * traj.steps[t].log_prob;
  return -sum / static_cast<double>(traj.steps.size());
}

double policy_loss(const Policy& policy, const Trajectory& traj, std::span<const double> advantages) {
  require_same_length(traj.steps.size(), advantages.size(), "policy_loss");
  if (traj.steps.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t t = 0; t < traj.steps.size(); ++t) {
    sum += advantages[t] * policy.log_prob(traj.steps[t].state, traj.steps[t].action);
  }
  return -sum / static_cast<double>(traj.steps.size());
}

std::vector<std::vector<double>> policy_gradient(const Policy& policy, const Trajectory& traj,
                                                 std::span<const double> advantages) {
  require_same_length(traj.steps.size(), advantages.size(), "policy_gradient");
  std::vector<std::vector<double>> grad;
  for (const auto& row : policy.logits()) grad.emplace_back(row.size(), 0.0);
  if (traj.steps.empty()) return grad;
  const double scale = 1.0 / (static_cast<double>(traj.steps.size()) * policy.temperature());
  for (std::size_t t = 0; t < traj.steps.size(); ++t) {
    const auto& step = traj.steps[t];
    const auto p = policy.probabilities(step.state);
    auto& g = grad[static_cast<std::size_t>(step.state)];
    // d(-A log pi(a|s)) / d z_j = -A (1[j = a] - pi_j) / T
    for (std::size_t j = 0; j < p.size(); ++j) {
      const double indicator = static_cast<int>(j) == step.action ? 1.0 : 0.0;
      g[j] -= advantages[t] * (indicator - p[j]) * scale;
    }
  }
  return grad;
}

double value_loss(const Trajectory& traj, std::span<const double> targets) {
  require_same_length(traj.steps.size(), targets.size(), "value_loss");
  if (traj.steps.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t t = 0; t < traj.steps.size(); ++t) {
    const double err = traj.steps[t].value - targets[t];
    sum += err * err;
  }
  return sum / static_cast<double>(traj.steps.size());
}

void validate(const TrainConfig& c) {
  auto check = [](bool ok, const char* key, const char* constraint) {
    if (!ok) throw Error(ErrorKind::InvalidValue, std::string(key) + " " + constraint, key);
  };
  check(std::isfinite(c.lr_policy) && c.lr_policy >= 0.0, "train.lr_policy", "must be finite and >= 0");
  check(std::isfinite(c.lr_value) && c.lr_value >= 0.0, "train.lr_value", "must be finite and >= 0");
  check(c.gamma >= 0.0 && c.gamma <= 1.0, "train.gamma", "must lie in [0, 1]");
  check(c.lambda >= 0.0 && c.lambda <= 1.0, "train.lambda", "must lie in [0, 1]");
  check(c.episodes >= 1, "train.episodes", "must be >= 1");
  check(std::isfinite(c.temperature) && c.temperature > 0.0, "train.temperature", "must be > 0");
}

TrainingLog train(const ToyEnv& env, const TrainConfig& config, const EngineConfig& engine) {
  validate(config);
  TrainingLog log{{}, Policy(config.temperature), ValueFn{}};
  EpisodeScorer scorer(engine);
  std::mt19937_64 rng(config.seed);

  for (int e = 0; e < config.episodes; ++e) {
    Episode ep = rollout_episode(env, log.policy, log.value, rng, scorer);
    const auto& traj = ep.trajectory;
    const auto adv = gae(traj, config.gamma, config.lambda);
    const auto targets = returns_to_go(traj, config.gamma);

    LogRow row;
    row.episode = e;
    row.fused_reward = ep.breakdown.fused;
    row.policy_loss = policy_loss(traj, adv);
    row.value_loss = value_loss(traj, targets);

    const auto grad = policy_gradient(log.policy, traj, adv);
    auto& logits = log.policy.logits();
    for (std::size_t s = 0; s < logits.size(); ++s) {
      for (std::size_t j = 0; j < logits[s].size(); ++j) logits[s][j] -= config.lr_policy * grad[s][j];
    }
    // d/dV mean_t (V(s_t) - target_t)^2
    const double n = static_cast<double>(traj.steps.size());
    for (std::size_t t = 0; t < traj.steps.size(); ++t) {
      auto& v = log.value.values[static_cast<std::size_t>(traj.steps[t].state)];
      v -= config.lr_value * 2.0 * (traj.steps[t].value - targets[t]) / n;
    }

    bool finite = std::all_of(log.value.values.begin(), log.value.values.end(),
                              [](double v) { return std::isfinite(v); });
    for (const auto& row_logits : logits) {
      finite = finite && std::all_of(row_logits.begin(), row_logits.end(),
                                     [](double v) { return std::isfinite(v); });
    }
    if (!finite) {
      throw Error(ErrorKind::DivergedValues,
                  "parameters became non-finite at episode " + std::to_string(e), "episode " + std::to_string(e));
    }

    row.p_wellformed = log.policy.probabilities(kProtocol)[kTagsOn];
    row.p_correct = log.policy.probabilities(kAnswer)[kAnswerCorrect];
    log.rows.push_back(row);
  }
  return log;
}

void write_log_csv(std::ostream& out, const TrainingLog& log) {
  out << "episode,fused_reward,policy_loss,value_loss,p_wellformed,p_correct\n";
  char line[256];
  for (const auto& r : log.rows) {
    std::snprintf(line, sizeof line, "%d,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.episode, r.fused_reward,
                  r.policy_loss, r.value_loss, r.p_wellformed, r.p_correct);
    out << line;
  }
}

}  // namespace crm::rl
