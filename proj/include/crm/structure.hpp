#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace crm {

inline constexpr std::string_view kThinkOpen = "<think>";
inline constexpr std::string_view kThinkClose = "</think>";
inline constexpr std::string_view kAnswerOpen = "<answer>";
inline constexpr std::string_view kAnswerClose = "</answer>";

inline constexpr int kDefaultTargetSteps = 3;

struct ParsedResponse {
  std::optional<std::string> think_text;
  std::optional<std::string> answer_text;
  bool well_formed = false;
  std::vector<std::string> steps;
};

// Which marker family segment_steps settled on.
enum class StepMarker { Labeled, Numbered, Lines };

struct StepSpan {
  std::size_t begin = 0;  // byte offset of the first line of the step
  std::size_t end = 0;    // one past the last byte, including its newline
  std::string text;       // marker stripped, trimmed
};

struct Segmentation {
  StepMarker marker = StepMarker::Lines;
  std::vector<StepSpan> steps;
};

// Never fails: a response that violates the protocol comes back with
// well_formed = false. Each block is extracted when its tags each occur
// exactly once and in open-close order, even if the response as a whole is
// malformed.
ParsedResponse parse_response(std::string_view response);

// Splits reasoning into steps using, in priority order, "Step N:" labels,
// "N." / "N)" numbering, then plain nonempty lines. The first family that
// yields at least two steps wins.
std::vector<std::string> segment_steps(std::string_view think_text);
Segmentation segment_step_spans(std::string_view think_text);

// The text with the winning family's step markers removed from each line.
// Numbers inside markers ("Step 2") are indices, not computed quantities.
std::string strip_step_markers(std::string_view think_text);

double format_reward(const ParsedResponse& parsed);
// min(1, |steps| / target_steps); target_steps must be >= 1.
double step_reward(const ParsedResponse& parsed, int target_steps = kDefaultTargetSteps);

bool is_blank(std::string_view text);
std::string_view trim(std::string_view text);

}  // namespace crm
