#pragma once

#include "crm/model.hpp"
#include "crm/structure.hpp"
#include "crm/text_signals.hpp"

#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace crm {

// Parameters shared by the text evaluators.
struct SignalParams {
  int ngram = kDefaultNgram;
  std::size_t max_length = 32;  // L_max, whitespace tokens
  int target_steps = kDefaultTargetSteps;
  CosineBounds cosine;

  bool operator==(const SignalParams&) const = default;
};

struct OptimizerParams {
  double w_diversity = 0.4;
  double w_efficiency = 0.3;
  double w_repetition = 0.3;

  bool operator==(const OptimizerParams&) const = default;
};

struct SynthesizerParams {
  int count = 3;
  std::uint64_t seed = 0;

  bool operator==(const SynthesizerParams&) const = default;
};

struct AnalyzerParams {
  double v_min = 1e-4;
  double z_max = 3.0;
  double epsilon = 1e-8;
  std::size_t window = 100;

  bool operator==(const AnalyzerParams&) const = default;
};

struct AgentParams {
  SignalParams signals;
  OptimizerParams optimizer;
  SynthesizerParams synthesizer;
  AnalyzerParams analyzer;

  bool operator==(const AgentParams&) const = default;
};

// ---------------------------------------------------------------- optimizer

// Per-rollout efficiency/diversity report. Diagnostics: repetition,
// diversity, efficiency. The raw mix w_d*diversity + w_e*efficiency -
// w_r*repetition spans [-w_r, w_d + w_e] and is mapped linearly onto [-1, 1].
// Throws Error(EmptyGroup).
std::vector<AgentReport> optimizer_evaluate(std::span<const Rollout> group, const Embedder& embedder,
                                            const SignalParams& signals = {},
                                            const OptimizerParams& params = {});

// ----------------------------------------------------------------- assessor

// Mean of acc, fmt, step and (when applicable) outcome, mapped [0,1] -> [-1,1].
AgentReport assessor_evaluate(const Rollout& rollout, const SignalParams& signals = {});
AgentReport assessor_evaluate(const Rollout& rollout, const ParsedResponse& parsed,
                              const SignalParams& signals);

// -------------------------------------------------------------- synthesizer

enum class PerturbationKind { NumericShift, StepDrop, AnswerSwap };

std::string_view to_string(PerturbationKind kind);

struct Perturbation {
  PerturbationKind kind = PerturbationKind::NumericShift;
  std::string text;    // the counterfactual negative
  std::string source;  // the reference text it was derived from

  bool operator==(const Perturbation&) const = default;
};

// Counterfactual negatives derived from the reference text, a pure function
// of (reference, count, seed). Kinds cycle numeric-shift, step-drop,
// answer-swap, skipping kinds the reference cannot support:
//   numeric-shift  one numeral v becomes v+1, v-1, v+2, v-2 or 10v
//   step-drop      one reasoning step is removed (needs >= 2 steps)
//   answer-swap    the numeric final answer is replaced by another number
// Throws Error(NoReferenceText) or Error(NothingToPerturb).
std::vector<Perturbation> synthesize_perturbations(const Reference& reference, int count,
                                                   std::uint64_t seed);

// sim(pred, reference) - max_neg sim(pred, negative), clamped to [-1, 1].
std::optional<double> enhanced_data_reward(std::string_view pred, const Reference& reference,
                                           std::span<const Perturbation> negatives,
                                           const Embedder& embedder);

// ----------------------------------------------------------------- analyzer

// Single-pass mean/variance over every fused value seen, plus a bounded window
// of the most recent ones.
class RunningStats {
 public:
  explicit RunningStats(std::size_t window = 100) : window_(window) {}

  std::size_t count() const noexcept { return count_; }
  double mean() const noexcept { return mean_; }
  double m2() const noexcept { return m2_; }
  std::size_t window() const noexcept { return window_; }
  const std::deque<double>& history() const noexcept { return history_; }

  // m2 / (count - 1); nullopt below two observations.
  std::optional<double> sample_variance() const;

  void push(double value);
  // Chan et al. pairwise combination; the window keeps `other`'s values last.
  void merge(const RunningStats& other);

  bool operator==(const RunningStats&) const = default;

 private:
  std::size_t window_;
  std::size_t count_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
  std::deque<double> history_;
};

RunningStats analyzer_update(const RunningStats& stats, std::span<const double> fused_batch);

// Penalty-only stability report (score in [-1, 0]). Diagnostics: collapse,
// drift. Throws Error(EmptyBatch).
AgentReport analyzer_evaluate(const RunningStats& stats, std::span<const double> fused_batch,
                              const AnalyzerParams& params = {});

// ------------------------------------------------------------------- roster

struct RosterOutcome {
  // reports[i] holds rollout i's reports in roster order.
  std::vector<std::vector<AgentReport>> reports;
  // R_enhanced per rollout; nullopt without the synthesizer or a usable
  // reference text.
  std::vector<std::optional<double>> enhanced;
};

// Fuses the partial outcome (every rostered agent except the analyzer) into
// the batch the analyzer monitors.
using StabilityBatchFn = std::function<std::vector<double>(const RosterOutcome&)>;

// Runs every rostered agent over one group. The analyzer, when rostered, is
// evaluated last on `stability_batch(partial)` and then folds that batch into
// `stats` as one update. Absent agents contribute no reports.
RosterOutcome roster_evaluate(const std::vector<Agent>& roster, std::span<const Rollout> group,
                              const AgentParams& params, const Embedder& embedder,
                              RunningStats& stats, const StabilityBatchFn& stability_batch);

}  // namespace crm
