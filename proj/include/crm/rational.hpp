#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <compare>
#include <optional>
#include <string>
#include <string_view>

namespace crm {

using BigInt = boost::multiprecision::cpp_int;

// Exact rational number. A zero denominator marks an undefined value (for
// instance a parsed "3/0"); such values compare unequal to every finite one.
class Rational {
 public:
  Rational() : num_(0), den_(1) {}
  Rational(BigInt numerator, BigInt denominator = 1);
  Rational(long long value) : num_(value), den_(1) {}  // NOLINT(implicit)

  const BigInt& numerator() const noexcept { return num_; }
  const BigInt& denominator() const noexcept { return den_; }
  bool is_finite() const noexcept { return den_ != 0; }
  bool is_integer() const noexcept { return den_ == 1; }

  // "p" for integers, "p/q" otherwise. Undefined values render as "p/0".
  std::string to_string() const;
  // Finite decimal rendering, only when the reduced denominator has no prime
  // factors besides 2 and 5.
  std::optional<std::string> to_decimal_string() const;
  double to_double() const;

  friend bool operator==(const Rational& a, const Rational& b);
  friend std::strong_ordering operator<=>(const Rational& a, const Rational& b);

  friend Rational operator+(const Rational& a, const Rational& b);
  friend Rational operator-(const Rational& a, const Rational& b);
  friend Rational operator*(const Rational& a, const Rational& b);

 private:
  BigInt num_;
  BigInt den_;
};

// Parses "p", "p/q" or a finite decimal such as "-1.25". Returns nullopt for
// anything else. A zero denominator yields an undefined Rational.
std::optional<Rational> parse_rational(std::string_view text);

}  // namespace crm
