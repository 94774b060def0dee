#include "crm/structure.hpp"

#include "crm/error.hpp"

#include <algorithm>
#include <cctype>

namespace crm {

namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_digit(char c) { return c >= '0' && c <= '9'; }

std::size_t count_occurrences(std::string_view text, std::string_view needle) {
  std::size_t count = 0;
  for (auto pos = text.find(needle); pos != std::string_view::npos;
       pos = text.find(needle, pos + needle.size())) {
    ++count;
  }
  return count;
}

struct Block {
  std::size_t open = 0;   // offset of the opening tag
  std::size_t close = 0;  // offset one past the closing tag
  std::string_view inner;
};

std::optional<Block> find_block(std::string_view text, std::string_view open_tag,
                                std::string_view close_tag) {
  if (count_occurrences(text, open_tag) != 1 || count_occurrences(text, close_tag) != 1) {
    return std::nullopt;
  }
  auto open = text.find(open_tag);
  auto close = text.find(close_tag);
  if (close < open + open_tag.size()) return std::nullopt;
  Block b;
  b.open = open;
  b.close = close + close_tag.size();
  b.inner = text.substr(open + open_tag.size(), close - open - open_tag.size());
  return b;
}

struct Line {
  std::size_t begin;
  std::size_t end;  // including the trailing newline, if any
  std::string_view content;
};

std::vector<Line> split_lines(std::string_view text) {
  std::vector<Line> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    auto nl = text.find('\n', start);
    std::size_t stop = nl == std::string_view::npos ? text.size() : nl;
    std::size_t end = nl == std::string_view::npos ? text.size() : nl + 1;
    lines.push_back({start, end, text.substr(start, stop - start)});
    start = end;
  }
  return lines;
}

// "Step 3: body", "step 3. body", "Step 3) body", "Step 3 - body".
// Returns the offset of the body within the line on a match.
std::optional<std::size_t> match_labeled(std::string_view line) {
  std::size_t i = 0;
  while (i < line.size() && is_space(line[i])) ++i;
  if (line.size() - i < 4) return std::nullopt;
  std::string_view word = line.substr(i, 4);
  if (word != "Step" && word != "step" && word != "STEP") return std::nullopt;
  i += 4;
  while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
  std::size_t digits = i;
  while (i < line.size() && is_digit(line[i])) ++i;
  if (i == digits) return std::nullopt;
  while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
  if (i >= line.size() || (line[i] != ':' && line[i] != '.' && line[i] != ')' && line[i] != '-')) {
    return std::nullopt;
  }
  return i + 1;
}

// "1. body" or "2) body"; the separator must be followed by whitespace or
// end of line so that "3.5" is not a marker.
std::optional<std::size_t> match_numbered(std::string_view line) {
  std::size_t i = 0;
  while (i < line.size() && is_space(line[i])) ++i;
  std::size_t digits = i;
  while (i < line.size() && is_digit(line[i])) ++i;
  if (i == digits || i >= line.size()) return std::nullopt;
  if (line[i] != '.' && line[i] != ')') return std::nullopt;
  ++i;
  if (i < line.size() && !is_space(line[i])) return std::nullopt;
  return i;
}

using Matcher = std::optional<std::size_t> (*)(std::string_view);

// Groups lines into steps starting at each marker line; text before the
// first marker is not a step.
std::vector<StepSpan> segment_with(const std::vector<Line>& lines, Matcher matcher) {
  std::vector<StepSpan> steps;
  std::string current;
  bool open = false;
  auto flush = [&] {
    if (!open) return;
    std::string body(trim(current));
    if (!body.empty()) {
      steps.back().text = std::move(body);
    } else {
      steps.pop_back();
    }
    current.clear();
  };
  for (const auto& line : lines) {
    if (auto body = matcher(line.content)) {
      flush();
      steps.push_back({line.begin, line.end, {}});
      current = std::string(line.content.substr(*body));
      open = true;
    } else if (open) {
      current += '\n';
      current += line.content;
      steps.back().end = line.end;
    }
  }
  flush();
  return steps;
}

}  // namespace

bool is_blank(std::string_view text) {
  return std::all_of(text.begin(), text.end(), is_space);
}

std::string_view trim(std::string_view text) {
  while (!text.empty() && is_space(text.front())) text.remove_prefix(1);
  while (!text.empty() && is_space(text.back())) text.remove_suffix(1);
  return text;
}

Segmentation segment_step_spans(std::string_view think_text) {
  auto lines = split_lines(think_text);
  for (auto [marker, matcher] : {std::pair{StepMarker::Labeled, Matcher{match_labeled}},
                                 std::pair{StepMarker::Numbered, Matcher{match_numbered}}}) {
    auto steps = segment_with(lines, matcher);
    if (steps.size() >= 2) return {marker, std::move(steps)};
  }
  Segmentation fallback;
  for (const auto& line : lines) {
    auto body = trim(line.content);
    if (!body.empty()) fallback.steps.push_back({line.begin, line.end, std::string(body)});
  }
  return fallback;
}

std::vector<std::string> segment_steps(std::string_view think_text) {
  std::vector<std::string> out;
  for (auto& s : segment_step_spans(think_text).steps) out.push_back(std::move(s.text));
  return out;
}

std::string strip_step_markers(std::string_view think_text) {
  auto seg = segment_step_spans(think_text);
  if (seg.marker == StepMarker::Lines) return std::string(think_text);
  Matcher matcher = seg.marker == StepMarker::Labeled ? Matcher{match_labeled}
                                                      : Matcher{match_numbered};
  std::string out;
  for (const auto& line : split_lines(think_text)) {
    auto body = matcher(line.content);
    out += body ? line.content.substr(*body) : line.content;
    out += '\n';
  }
  return out;
}

ParsedResponse parse_response(std::string_view response) {
  ParsedResponse parsed;
  auto think = find_block(response, kThinkOpen, kThinkClose);
  auto answer = find_block(response, kAnswerOpen, kAnswerClose);
  if (think) {
    parsed.think_text = std::string(think->inner);
    parsed.steps = segment_steps(think->inner);
  }
  if (answer) parsed.answer_text = std::string(answer->inner);
  if (think && answer && think->close <= answer->open) {
    parsed.well_formed = is_blank(response.substr(0, think->open)) &&
                         is_blank(response.substr(think->close, answer->open - think->close)) &&
                         is_blank(response.substr(answer->close));
  }
  return parsed;
}

double format_reward(const ParsedResponse& parsed) { return parsed.well_formed ? 1.0 : 0.0; }

double step_reward(const ParsedResponse& parsed, int target_steps) {
  if (target_steps < 1) {
    throw Error(ErrorKind::InvalidValue, "target_steps must be >= 1", "text.target_steps");
  }
  return std::min(1.0, static_cast<double>(parsed.steps.size()) / target_steps);
}

}  // namespace crm
