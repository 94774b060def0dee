#pragma once

#include "crm/model.hpp"
#include "crm/rational.hpp"
#include "crm/structure.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace crm {

struct Symbolic {
  std::string tokens;  // lowercase, whitespace-free, LaTeX sugar rewritten
  bool operator==(const Symbolic&) const = default;
};

struct Unparseable {
  std::string original;
  bool operator==(const Unparseable&) const = default;
};

// Canonical answer value. Equivalence is decided on this form alone: exact
// rationals compare by value, everything else by normalized token sequence.
using Expr = std::variant<Rational, Symbolic, Unparseable>;

Expr parse_expr(std::string_view text);
bool check_equivalence(const Expr& a, const Expr& b);

// Every integer, decimal and fraction literal in `text`, as exact values.
// For "p/q" and "\frac{p}{q}" the quotient and both operands are included.
std::vector<Rational> extract_numeric_literals(std::string_view text);

double accuracy_reward(const ParsedResponse& parsed, const Reference& reference);

// Fraction of the reference intermediates found among the numeric literals of
// the reasoning trace (step markers excluded). nullopt when the reference has
// no intermediates.
std::optional<double> outcome_reward(const ParsedResponse& parsed, const Reference& reference);

}  // namespace crm
