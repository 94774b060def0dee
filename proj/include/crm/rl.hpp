#pragma once

#include "crm/aggregator.hpp"
#include "crm/model.hpp"
#include "crm/text_signals.hpp"

#include <array>
#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace crm::rl {

// Decision points of the toy generation task, one per timestep.
enum Slot : int { kProtocol = 0, kSteps = 1, kAnswer = 2, kPadding = 3 };
inline constexpr int kSlotCount = 4;
inline constexpr std::array<int, kSlotCount> kActionCounts = {2, 4, 3, 2};

// Action ids within each slot.
inline constexpr int kTagsOn = 0, kTagsOff = 1;
inline constexpr int kAnswerCorrect = 0, kAnswerWrongA = 1, kAnswerWrongB = 2;
inline constexpr int kStop = 0, kPad = 1;

using Actions = std::array<int, kSlotCount>;

// Structured-generation stand-in: four choices render deterministically into
// a response string that the reward engine scores like any other rollout.
struct ToyEnv {
  Prompt prompt;
  Reference reference;
  std::array<std::string, 3> step_lines;
  std::array<std::string, 3> answers;  // correct, wrong-a, wrong-b
  std::string filler;
  int filler_repeats = 8;

  std::string render(const Actions& actions) const;
  Rollout make_rollout(const Actions& actions) const;

  // "2 apples plus 2 more" with final answer 4 and intermediate 2.
  static ToyEnv standard();
};

double uniform01(std::mt19937_64& rng);

// Tabular softmax policy: one logit vector per slot.
class Policy {
 public:
  explicit Policy(double temperature = 1.0);

  double temperature() const noexcept { return temperature_; }
  const std::vector<std::vector<double>>& logits() const noexcept { return logits_; }
  std::vector<std::vector<double>>& logits() noexcept { return logits_; }

  std::vector<double> probabilities(int state) const;
  double log_prob(int state, int action) const;
  int sample(int state, std::mt19937_64& rng) const;
  int greedy(int state) const;

 private:
  std::vector<std::vector<double>> logits_;
  double temperature_;
};

struct ValueFn {
  std::vector<double> values = std::vector<double>(kSlotCount, 0.0);
};

struct Step {
  int state = 0;
  int action = 0;
  double reward = 0.0;
  double value = 0.0;
  double log_prob = 0.0;
};

// The fused reward sits on the last step; earlier rewards are 0.
struct Trajectory {
  std::vector<Step> steps;
};

// Scores rendered episodes through the reward engine as singleton groups.
class EpisodeScorer {
 public:
  explicit EpisodeScorer(EngineConfig config);
  RewardBreakdown score(const Rollout& rollout);

 private:
  EngineConfig config_;
  HashedBowEmbedder embedder_;
  SimilarityRanker ranker_;
  ScoringState state_;
};

struct Episode {
  Actions actions{};
  Trajectory trajectory;
  Rollout rollout;
  RewardBreakdown breakdown;
};

Episode rollout_episode(const ToyEnv& env, const Policy& policy, const ValueFn& value,
                        std::mt19937_64& rng, EpisodeScorer& scorer);
// Plays the given actions instead of sampling.
Episode play_actions(const ToyEnv& env, const Policy& policy, const ValueFn& value,
                     const Actions& actions, EpisodeScorer& scorer);

// Backward recursion A_t = delta_t + gamma*lam*A_{t+1} with
// delta_t = r_t + gamma*V(s_{t+1}) - V(s_t) and V(terminal) = 0.
std::vector<double> gae(const Trajectory& traj, double gamma, double lam);

// Discounted returns-to-go, the value regression targets.
std::vector<double> returns_to_go(const Trajectory& traj, double gamma);

// -mean_t A_t * log pi(a_t|s_t), using the log-probs recorded at sampling.
double policy_loss(const Trajectory& traj, std::span<const double> advantages);
// Same loss with log-probs recomputed from `policy`.
double policy_loss(const Policy& policy, const Trajectory& traj, std::span<const double> advantages);
// d policy_loss / d logits, shaped like Policy::logits().
std::vector<std::vector<double>> policy_gradient(const Policy& policy, const Trajectory& traj,
                                                 std::span<const double> advantages);

// mean_t (V(s_t) - target_t)^2 over the values recorded in `traj`.
double value_loss(const Trajectory& traj, std::span<const double> targets);

struct TrainConfig {
  double lr_policy = 0.5;
  double lr_value = 0.1;
  double gamma = 1.0;
  double lambda = 0.3;
  int episodes = 5000;
  std::uint64_t seed = 7;
  double temperature = 1.0;

  bool operator==(const TrainConfig&) const = default;
};

void validate(const TrainConfig& config);

struct LogRow {
  int episode = 0;
  double fused_reward = 0.0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double p_wellformed = 0.0;
  double p_correct = 0.0;
};

struct TrainingLog {
  std::vector<LogRow> rows;
  Policy policy;
  ValueFn value;
};

// On-policy actor-critic: one episode, GAE, one gradient step on the logits
// and the values per row of the log. Deterministic for a given seed.
// Throws Error(DivergedValues) naming the episode if a parameter goes
// non-finite.
TrainingLog train(const ToyEnv& env, const TrainConfig& train_config, const EngineConfig& engine);

// Columns: episode,fused_reward,policy_loss,value_loss,p_wellformed,p_correct
void write_log_csv(std::ostream& out, const TrainingLog& log);

}  // namespace crm::rl
