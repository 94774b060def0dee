#include "crm/math_equiv.hpp"

#include <algorithm>
#include <cctype>
#include <regex>

namespace crm {

namespace {

bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_alpha(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }

void erase_all(std::string& s, std::string_view needle) {
  for (auto pos = s.find(needle); pos != std::string::npos; pos = s.find(needle, pos)) {
    s.erase(pos, needle.size());
  }
}

void replace_all(std::string& s, std::string_view from, std::string_view to) {
  for (auto pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size())) {
    s.replace(pos, from.size(), to);
  }
}

// Whitespace, math-mode delimiters and sizing commands carry no value.
std::string strip_presentation(std::string_view text) {
  std::string s;
  for (char c : text) {
    if (!std::isspace(static_cast<unsigned char>(c)) && c != '$') s += c;
  }
  erase_all(s, "\\left");
  erase_all(s, "\\right");
  for (auto spacing : {"\\!", "\\,", "\\;", "\\:"}) erase_all(s, spacing);
  replace_all(s, "\\%", "%");
  replace_all(s, "\\dfrac", "\\frac");
  replace_all(s, "\\tfrac", "\\frac");
  return s;
}

// Index one past the brace group starting at `open`, or npos if unbalanced.
std::size_t match_brace(const std::string& s, std::size_t open) {
  int depth = 0;
  for (std::size_t i = open; i < s.size(); ++i) {
    if (s[i] == '{') ++depth;
    if (s[i] == '}' && --depth == 0) return i + 1;
  }
  return std::string::npos;
}

bool is_atom(std::string_view group) {
  if (group.empty()) return false;
  if (group.front() == '\\') {
    return std::all_of(group.begin() + 1, group.end(), is_alpha) && group.size() > 1;
  }
  return std::all_of(group.begin(), group.end(),
                     [](char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '.'; });
}

std::string parenthesize(std::string group) {
  return is_atom(group) ? group : "(" + group + ")";
}

// \frac{A}{B} -> A/B (operands parenthesized unless atomic), innermost first.
std::string rewrite_fractions(std::string s) {
  for (auto pos = s.rfind("\\frac{"); pos != std::string::npos; pos = s.rfind("\\frac{")) {
    std::size_t num_open = pos + 5;
    std::size_t num_end = match_brace(s, num_open);
    if (num_end == std::string::npos || num_end >= s.size() || s[num_end] != '{') break;
    std::size_t den_end = match_brace(s, num_end);
    if (den_end == std::string::npos) break;
    std::string num = s.substr(num_open + 1, num_end - num_open - 2);
    std::string den = s.substr(num_end + 1, den_end - num_end - 2);
    s.replace(pos, den_end - pos, parenthesize(num) + "/" + parenthesize(den));
  }
  return s;
}

const std::regex& integer_re() {
  static const std::regex re(R"([+-]?\d+)");
  return re;
}
const std::regex& decimal_re() {
  static const std::regex re(R"([+-]?(\d+\.\d*|\.\d+))");
  return re;
}
const std::regex& fraction_re() {
  static const std::regex re(R"(([+-]?\d+)/([+-]?\d+))");
  return re;
}
const std::regex& latex_fraction_re() {
  static const std::regex re(R"(([+-]?)\\frac\{([+-]?\d+)\}\{([+-]?\d+)\})");
  return re;
}
const std::regex& percent_re() {
  static const std::regex re(R"(([+-]?(\d+|\d+\.\d*|\.\d+))%)");
  return re;
}

std::optional<Rational> nonzero_fraction(const std::string& p, const std::string& q) {
  auto num = parse_rational(p);
  auto den = parse_rational(q);
  if (!num || !den || den->numerator() == 0) return std::nullopt;
  return Rational(num->numerator(), den->numerator());
}

}  // namespace

Expr parse_expr(std::string_view text) {
  const std::string s = strip_presentation(text);
  std::smatch m;
  if (std::regex_match(s, integer_re()) || std::regex_match(s, decimal_re())) {
    return *parse_rational(s);
  }
  if (std::regex_match(s, m, fraction_re())) {
    if (auto r = nonzero_fraction(m[1], m[2])) return *r;
  }
  if (std::regex_match(s, m, latex_fraction_re())) {
    if (auto r = nonzero_fraction(m[2], m[3])) {
      return m[1] == "-" ? Rational(0) - *r : *r;
    }
  }
  if (std::regex_match(s, m, percent_re())) {
    return *parse_rational(m[1].str()) * Rational(1, 100);
  }

  std::string tokens = rewrite_fractions(s);
  replace_all(tokens, "\\cdot", "*");
  replace_all(tokens, "\\times", "*");
  std::string normalized;
  for (char c : tokens) {
    if (c == '{' || c == '}') continue;
    normalized += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  if (normalized.empty()) return Unparseable{std::string(text)};
  return Symbolic{std::move(normalized)};
}

bool check_equivalence(const Expr& a, const Expr& b) {
  if (a.index() != b.index()) return false;
  if (const auto* ra = std::get_if<Rational>(&a)) return *ra == std::get<Rational>(b);
  if (const auto* sa = std::get_if<Symbolic>(&a)) return *sa == std::get<Symbolic>(b);
  return false;
}

std::vector<Rational> extract_numeric_literals(std::string_view text) {
  std::vector<Rational> out;
  const std::string s(text);

  for (auto it = std::sregex_iterator(s.begin(), s.end(), latex_fraction_re());
       it != std::sregex_iterator(); ++it) {
    const auto& m = *it;
    if (auto r = nonzero_fraction(m[2], m[3])) out.push_back(m[1] == "-" ? Rational(0) - *r : *r);
  }

  std::size_t i = 0;
  while (i < s.size()) {
    bool starts_number = is_digit(s[i]) || (s[i] == '.' && i + 1 < s.size() && is_digit(s[i + 1]));
    if (!starts_number) {
      ++i;
      continue;
    }
    // Part of an identifier such as "x2".
    if (i > 0 && (is_alpha(s[i - 1]) || s[i - 1] == '_')) {
      while (i < s.size() && (is_digit(s[i]) || s[i] == '.')) ++i;
      continue;
    }
    // A minus sign is a sign only when it cannot be a binary operator.
    bool negative = false;
    if (i > 0 && s[i - 1] == '-') {
      std::size_t j = i - 1;
      while (j > 0 && s[j - 1] == ' ') --j;
      negative = j == 0 || !(std::isalnum(static_cast<unsigned char>(s[j - 1])) ||
                             s[j - 1] == ')' || s[j - 1] == '}' || s[j - 1] == ']');
    }
    std::size_t start = i;
    while (i < s.size() && is_digit(s[i])) ++i;
    if (i + 1 < s.size() && s[i] == '.' && is_digit(s[i + 1])) {
      ++i;
      while (i < s.size() && is_digit(s[i])) ++i;
    } else if (start == i && s[i] == '.') {
      ++i;
      while (i < s.size() && is_digit(s[i])) ++i;
    }
    Rational value = *parse_rational(s.substr(start, i - start));
    if (negative) value = Rational(0) - value;
    out.push_back(value);

    if (i + 1 < s.size() && s[i] == '/' && is_digit(s[i + 1]) && value.is_integer()) {
      std::size_t den_start = ++i;
      while (i < s.size() && is_digit(s[i])) ++i;
      Rational den = *parse_rational(s.substr(den_start, i - den_start));
      out.push_back(den);
      if (den.numerator() != 0) out.push_back(Rational(value.numerator(), den.numerator()));
    }
  }
  return out;
}

double accuracy_reward(const ParsedResponse& parsed, const Reference& reference) {
  if (!parsed.answer_text) return 0.0;
  return check_equivalence(parse_expr(*parsed.answer_text), parse_expr(reference.final_answer))
             ? 1.0
             : 0.0;
}

std::optional<double> outcome_reward(const ParsedResponse& parsed, const Reference& reference) {
  const auto& wanted = reference.intermediate_values;
  if (wanted.empty()) return std::nullopt;
  std::vector<Rational> found;
  if (parsed.think_text) found = extract_numeric_literals(strip_step_markers(*parsed.think_text));
  std::size_t hits = 0;
  for (const auto& v : wanted) {
    if (std::find(found.begin(), found.end(), v) != found.end()) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(wanted.size());
}

}  // namespace crm
