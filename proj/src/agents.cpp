#include "crm/agents.hpp"

#include "crm/error.hpp"
#include "crm/math_equiv.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <random>
#include <sstream>

namespace crm {

namespace {

std::string fixed(double v, int precision = 3) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(precision);
  os << v;
  return os.str();
}

double to_unit_score(double mean01) { return std::clamp(2.0 * mean01 - 1.0, -1.0, 1.0); }

struct Numeral {
  std::size_t begin;
  std::size_t end;
  bool decimal;
};

std::vector<Numeral> find_numerals(std::string_view text) {
  std::vector<Numeral> out;
  std::size_t i = 0;
  auto digit = [&](std::size_t k) { return k < text.size() && text[k] >= '0' && text[k] <= '9'; };
  while (i < text.size()) {
    if (!digit(i)) {
      ++i;
      continue;
    }
    const bool in_word = i > 0 && (std::isalpha(static_cast<unsigned char>(text[i - 1])) || text[i - 1] == '_');
    std::size_t start = i;
    while (digit(i)) ++i;
    bool decimal = false;
    if (i < text.size() && text[i] == '.' && digit(i + 1)) {
      decimal = true;
      ++i;
      while (digit(i)) ++i;
    }
    if (!in_word) out.push_back({start, i, decimal});
  }
  return out;
}

std::string render_like(const Rational& value, bool decimal) {
  if (decimal) {
    if (auto d = value.to_decimal_string()) return *d;
  }
  return value.to_string();
}

// Offset of the reasoning text inside the reference, and the text itself.
std::pair<std::size_t, std::string_view> reasoning_region(std::string_view text) {
  auto parsed = parse_response(text);
  if (parsed.think_text) {
    auto open = text.find(kThinkOpen);
    return {open + kThinkOpen.size(), text.substr(open + kThinkOpen.size(), parsed.think_text->size())};
  }
  return {0, text};
}

struct AnswerSite {
  std::size_t begin;
  std::size_t length;
  Rational value;
  bool decimal;
};

std::optional<AnswerSite> locate_numeric_answer(const Reference& reference) {
  const std::string& text = *reference.reference_text;
  auto expr = parse_expr(reference.final_answer);
  const auto* value = std::get_if<Rational>(&expr);
  if (!value) return std::nullopt;
  const bool decimal = reference.final_answer.find('.') != std::string::npos;
  auto parsed = parse_response(text);
  if (parsed.answer_text) {
    auto open = text.find(kAnswerOpen) + kAnswerOpen.size();
    return AnswerSite{open, parsed.answer_text->size(), *value, decimal};
  }
  auto pos = text.rfind(reference.final_answer);
  if (pos == std::string::npos) return std::nullopt;
  return AnswerSite{pos, reference.final_answer.size(), *value, decimal};
}

std::optional<Perturbation> numeric_shift(const std::string& text, std::mt19937_64& rng) {
  auto numerals = find_numerals(text);
  if (numerals.empty()) return std::nullopt;
  const auto& target = numerals[rng() % numerals.size()];
  const Rational v = *parse_rational(std::string_view(text).substr(target.begin, target.end - target.begin));
  const Rational shifts[] = {v + 1, v - 1, v + 2, v - 2, v * 10};
  std::size_t choice = rng() % 5;
  // 10 * 0 == 0, so fall through to the next shift.
  while (shifts[choice] == v) choice = (choice + 1) % 5;
  std::string out = text;
  out.replace(target.begin, target.end - target.begin, render_like(shifts[choice], target.decimal));
  return Perturbation{PerturbationKind::NumericShift, std::move(out), text};
}

std::optional<Perturbation> step_drop(const std::string& text, std::mt19937_64& rng) {
  auto [offset, region] = reasoning_region(text);
  auto seg = segment_step_spans(region);
  if (seg.steps.size() < 2) return std::nullopt;
  const auto& step = seg.steps[rng() % seg.steps.size()];
  std::string out = text;
  out.erase(offset + step.begin, step.end - step.begin);
  return Perturbation{PerturbationKind::StepDrop, std::move(out), text};
}

std::optional<Perturbation> answer_swap(const Reference& reference, std::mt19937_64& rng) {
  auto site = locate_numeric_answer(reference);
  if (!site) return std::nullopt;
  const Rational swapped = site->value + Rational(static_cast<long long>(1 + rng() % 9));
  std::string out = *reference.reference_text;
  out.replace(site->begin, site->length, render_like(swapped, site->decimal));
  if (out == *reference.reference_text) return std::nullopt;
  return Perturbation{PerturbationKind::AnswerSwap, std::move(out), *reference.reference_text};
}

}  // namespace

// ---------------------------------------------------------------- optimizer

std::vector<AgentReport> optimizer_evaluate(std::span<const Rollout> group, const Embedder& embedder,
                                            const SignalParams& signals,
                                            const OptimizerParams& params) {
  if (group.empty()) throw Error(ErrorKind::EmptyGroup, "optimizer needs a nonempty group");
  std::vector<std::string> texts;
  for (const auto& r : group) texts.push_back(r.response);
  const auto vectors = checked_embed_batch(embedder, texts);

  const double lo = -params.w_repetition;
  const double hi = params.w_diversity + params.w_efficiency;
  std::vector<AgentReport> reports;
  for (std::size_t i = 0; i < group.size(); ++i) {
    double diversity = 1.0;
    if (group.size() > 1) {
      double total = 0.0;
      for (std::size_t j = 0; j < group.size(); ++j) {
        if (j != i) total += embedding_similarity(vectors[i], vectors[j]);
      }
      diversity = 1.0 - total / static_cast<double>(group.size() - 1);
    }
    const double repetition = repetition_penalty(group[i].response, signals.ngram);
    const double length = static_cast<double>(token_length(group[i].response));
    const double efficiency = 1.0 - std::min(1.0, length / static_cast<double>(signals.max_length));
    const double raw = params.w_diversity * diversity + params.w_efficiency * efficiency -
                       params.w_repetition * repetition;
    const double score = hi > lo ? std::clamp(-1.0 + 2.0 * (raw - lo) / (hi - lo), -1.0, 1.0) : 0.0;

    AgentReport report;
    report.agent = Agent::Optimizer;
    report.score = score;
    report.diagnostics = {{"diversity", diversity}, {"efficiency", efficiency}, {"repetition", repetition}};
    if (group.size() == 1) report.notes.push_back("singleton group: diversity 1 by convention");
    if (repetition > 0.0) report.notes.push_back("repeated n-grams: " + fixed(repetition));
    reports.push_back(std::move(report));
  }
  return reports;
}

// ----------------------------------------------------------------- assessor

AgentReport assessor_evaluate(const Rollout& rollout, const SignalParams& signals) {
  return assessor_evaluate(rollout, parse_response(rollout.response), signals);
}

AgentReport assessor_evaluate(const Rollout& rollout, const ParsedResponse& parsed,
                              const SignalParams& signals) {
  AgentReport report;
  report.agent = Agent::Assessor;
  report.diagnostics["acc"] = accuracy_reward(parsed, rollout.reference);
  report.diagnostics["fmt"] = format_reward(parsed);
  report.diagnostics["step"] = step_reward(parsed, signals.target_steps);
  if (auto outcome = outcome_reward(parsed, rollout.reference)) {
    report.diagnostics["outcome"] = *outcome;
  } else {
    report.notes.push_back("outcome not applicable: no reference intermediates");
  }
  double sum = 0.0;
  for (const auto& [name, value] : report.diagnostics) sum += value;
  report.score = to_unit_score(sum / static_cast<double>(report.diagnostics.size()));
  if (!parsed.well_formed) report.notes.push_back("response violates the think/answer protocol");
  return report;
}

// -------------------------------------------------------------- synthesizer

std::string_view to_string(PerturbationKind kind) {
  switch (kind) {
    case PerturbationKind::NumericShift: return "numeric-shift";
    case PerturbationKind::StepDrop: return "step-drop";
    case PerturbationKind::AnswerSwap: return "answer-swap";
  }
  return "unknown";
}

std::vector<Perturbation> synthesize_perturbations(const Reference& reference, int count,
                                                   std::uint64_t seed) {
  if (!reference.reference_text) {
    throw Error(ErrorKind::NoReferenceText, "perturbations need a reference text",
                "reference.reference_text");
  }
  if (count < 1) throw Error(ErrorKind::InvalidValue, "perturbation count must be >= 1", "agents.synthesizer.count");
  const std::string& text = *reference.reference_text;

  std::vector<PerturbationKind> available;
  if (!find_numerals(text).empty()) available.push_back(PerturbationKind::NumericShift);
  if (segment_step_spans(reasoning_region(text).second).steps.size() >= 2) {
    available.push_back(PerturbationKind::StepDrop);
  }
  if (locate_numeric_answer(reference)) available.push_back(PerturbationKind::AnswerSwap);
  if (available.empty()) {
    throw Error(ErrorKind::NothingToPerturb,
                "reference text has no numerals and fewer than two steps",
                "reference.reference_text");
  }

  std::mt19937_64 rng(seed);
  std::vector<Perturbation> out;
  std::size_t attempts = 0;
  for (std::size_t i = 0; out.size() < static_cast<std::size_t>(count); ++i) {
    std::optional<Perturbation> p;
    switch (available[i % available.size()]) {
      case PerturbationKind::NumericShift: p = numeric_shift(text, rng); break;
      case PerturbationKind::StepDrop: p = step_drop(text, rng); break;
      case PerturbationKind::AnswerSwap: p = answer_swap(reference, rng); break;
    }
    if (p && p->text != text) out.push_back(std::move(*p));
    if (++attempts > 16 * static_cast<std::size_t>(count)) {
      throw Error(ErrorKind::NothingToPerturb, "could not derive distinct perturbations",
                  "reference.reference_text");
    }
  }
  return out;
}

std::optional<double> enhanced_data_reward(std::string_view pred, const Reference& reference,
                                           std::span<const Perturbation> negatives,
                                           const Embedder& embedder) {
  if (!reference.reference_text || negatives.empty()) return std::nullopt;
  const auto pred_vec = checked_embed(embedder, pred);
  const double positive = embedding_similarity(pred_vec, checked_embed(embedder, *reference.reference_text));
  double hardest = 0.0;
  for (const auto& n : negatives) {
    hardest = std::max(hardest, embedding_similarity(pred_vec, checked_embed(embedder, n.text)));
  }
  return std::clamp(positive - hardest, -1.0, 1.0);
}

// ----------------------------------------------------------------- analyzer

std::optional<double> RunningStats::sample_variance() const {
  if (count_ < 2) return std::nullopt;
  return m2_ / static_cast<double>(count_ - 1);
}

void RunningStats::push(double value) {
  ++count_;
  const double delta = value - mean_;
  mean_ += delta / static_cast<double>(count_);
  m2_ += delta * (value - mean_);
  history_.push_back(value);
  while (history_.size() > window_) history_.pop_front();
}

void RunningStats::merge(const RunningStats& other) {
  if (other.count_ == 0) return;
  if (count_ == 0) {
    count_ = other.count_;
    mean_ = other.mean_;
    m2_ = other.m2_;
  } else {
    const double n_a = static_cast<double>(count_);
    const double n_b = static_cast<double>(other.count_);
    const double n = n_a + n_b;
    const double delta = other.mean_ - mean_;
    mean_ += delta * n_b / n;
    m2_ += other.m2_ + delta * delta * n_a * n_b / n;
    count_ += other.count_;
  }
  for (double v : other.history_) history_.push_back(v);
  while (history_.size() > window_) history_.pop_front();
}

RunningStats analyzer_update(const RunningStats& stats, std::span<const double> fused_batch) {
  RunningStats next = stats;
  for (double v : fused_batch) {
    if (!std::isfinite(v)) throw Error(ErrorKind::NonFiniteInput, "analyzer batch value is not finite");
    next.push(v);
  }
  return next;
}

AgentReport analyzer_evaluate(const RunningStats& stats, std::span<const double> fused_batch,
                              const AnalyzerParams& params) {
  if (fused_batch.empty()) throw Error(ErrorKind::EmptyBatch, "analyzer needs a nonempty batch");
  const double n = static_cast<double>(fused_batch.size());
  double batch_mean = 0.0;
  for (double v : fused_batch) batch_mean += v;
  batch_mean /= n;

  double collapse = 0.0;
  if (fused_batch.size() >= 2) {
    double ss = 0.0;
    for (double v : fused_batch) ss += (v - batch_mean) * (v - batch_mean);
    if (ss / (n - 1.0) < params.v_min) collapse = 1.0;
  }
  double drift = 0.0;
  if (auto var = stats.sample_variance()) {
    drift = std::abs(batch_mean - stats.mean()) / std::max(std::sqrt(*var), params.epsilon);
  }

  AgentReport report;
  report.agent = Agent::Analyzer;
  // "+ 0.0" turns a -0.0 penalty into 0.0.
  report.score = std::clamp(-0.5 * collapse - 0.5 * std::min(1.0, drift / params.z_max), -1.0, 0.0) + 0.0;
  report.diagnostics = {{"collapse", collapse}, {"drift", drift}};
  if (stats.count() < 2) report.notes.push_back("no running statistics yet: drift 0");
  if (collapse > 0.0) report.notes.push_back("reward variance collapsed within the batch");
  if (drift > params.z_max) report.notes.push_back("batch mean drifted " + fixed(drift, 2) + " stddevs");
  return report;
}

// ------------------------------------------------------------------- roster

RosterOutcome roster_evaluate(const std::vector<Agent>& roster, std::span<const Rollout> group,
                              const AgentParams& params, const Embedder& embedder,
                              RunningStats& stats, const StabilityBatchFn& stability_batch) {
  validate_roster(roster);
  if (group.empty()) throw Error(ErrorKind::EmptyGroup, "roster evaluation needs a nonempty group");
  const auto has = [&](Agent a) { return std::find(roster.begin(), roster.end(), a) != roster.end(); };

  RosterOutcome outcome;
  outcome.reports.resize(group.size());
  outcome.enhanced.assign(group.size(), std::nullopt);

  std::map<Agent, std::vector<AgentReport>> by_agent;
  if (has(Agent::Optimizer)) {
    by_agent[Agent::Optimizer] = optimizer_evaluate(group, embedder, params.signals, params.optimizer);
  }
  if (has(Agent::Assessor)) {
    auto& reports = by_agent[Agent::Assessor];
    for (const auto& r : group) reports.push_back(assessor_evaluate(r, params.signals));
  }
  if (has(Agent::Synthesizer)) {
    std::map<std::string, std::vector<Perturbation>> negatives_by_text;
    std::vector<std::string> reasons(group.size());
    for (std::size_t i = 0; i < group.size(); ++i) {
      const auto& ref = group[i].reference;
      if (!ref.reference_text) {
        reasons[i] = "no reference text";
        continue;
      }
      auto it = negatives_by_text.find(*ref.reference_text);
      if (it == negatives_by_text.end()) {
        std::vector<Perturbation> negatives;
        try {
          negatives = synthesize_perturbations(ref, params.synthesizer.count, params.synthesizer.seed);
        } catch (const Error& e) {
          if (e.kind() != ErrorKind::NothingToPerturb) throw;
        }
        it = negatives_by_text.emplace(*ref.reference_text, std::move(negatives)).first;
      }
      if (it->second.empty()) {
        reasons[i] = "reference text cannot be perturbed";
        continue;
      }
      outcome.enhanced[i] = enhanced_data_reward(group[i].response, ref, it->second, embedder);
    }
    double sum = 0.0;
    std::size_t applicable = 0;
    for (const auto& e : outcome.enhanced) {
      if (e) {
        sum += *e;
        ++applicable;
      }
    }
    const double group_score = applicable ? std::clamp(sum / applicable, -1.0, 1.0) : 0.0;
    auto& reports = by_agent[Agent::Synthesizer];
    for (std::size_t i = 0; i < group.size(); ++i) {
      AgentReport report;
      report.agent = Agent::Synthesizer;
      report.score = group_score;
      report.applicable = applicable > 0;
      if (outcome.enhanced[i]) {
        report.diagnostics["enhanced"] = *outcome.enhanced[i];
      } else {
        report.notes.push_back("enhanced reward not applicable: " + reasons[i]);
      }
      report.diagnostics["group_mean_enhanced"] = group_score;
      reports.push_back(std::move(report));
    }
  }

  auto collect = [&] {
    for (auto& per_rollout : outcome.reports) per_rollout.clear();
    for (Agent a : roster) {
      auto it = by_agent.find(a);
      if (it == by_agent.end()) continue;
      for (std::size_t i = 0; i < group.size(); ++i) outcome.reports[i].push_back(it->second[i]);
    }
  };
  collect();

  if (has(Agent::Analyzer)) {
    if (!stability_batch) {
      throw Error(ErrorKind::InvalidValue, "the analyzer needs a stability batch function", "agents.roster");
    }
    const auto batch = stability_batch(outcome);
    auto report = analyzer_evaluate(stats, batch, params.analyzer);
    stats = analyzer_update(stats, batch);
    by_agent[Agent::Analyzer] = std::vector<AgentReport>(group.size(), report);
    collect();
  }
  return outcome;
}

}  // namespace crm
