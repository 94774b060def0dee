#include "crm/rational.hpp"

#include <boost/integer/common_factor_rt.hpp>

#include <cctype>

namespace crm {

namespace {

bool all_digits(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (!std::isdigit(static_cast<unsigned char>(c))) return false;
  }
  return true;
}

// cpp_int treats a leading zero as an octal prefix, so strip them first.
BigInt from_digits(std::string_view digits) {
  std::size_t first = digits.find_first_not_of('0');
  if (first == std::string_view::npos) return 0;
  return BigInt(std::string(digits.substr(first)));
}

std::optional<BigInt> parse_integer(std::string_view s) {
  bool negative = false;
  if (!s.empty() && (s.front() == '+' || s.front() == '-')) {
    negative = s.front() == '-';
    s.remove_prefix(1);
  }
  if (!all_digits(s)) return std::nullopt;
  BigInt value = from_digits(s);
  return negative ? BigInt(-value) : value;
}

BigInt pow10(std::size_t exponent) {
  BigInt result = 1;
  for (std::size_t i = 0; i < exponent; ++i) result *= 10;
  return result;
}

}  // namespace

Rational::Rational(BigInt numerator, BigInt denominator)
    : num_(std::move(numerator)), den_(std::move(denominator)) {
  if (den_ == 0) return;
  if (den_ < 0) {
    num_ = -num_;
    den_ = -den_;
  }
  BigInt g = boost::multiprecision::gcd(boost::multiprecision::abs(num_), den_);
  if (g > 1) {
    num_ /= g;
    den_ /= g;
  }
}

std::string Rational::to_string() const {
  if (den_ == 1) return num_.str();
  return num_.str() + "/" + den_.str();
}

std::optional<std::string> Rational::to_decimal_string() const {
  if (den_ == 0) return std::nullopt;
  BigInt d = den_;
  std::size_t twos = 0, fives = 0;
  while (d % 2 == 0) {
    d /= 2;
    ++twos;
  }
  while (d % 5 == 0) {
    d /= 5;
    ++fives;
  }
  if (d != 1) return std::nullopt;
  std::size_t digits = std::max(twos, fives);
  BigInt scaled = boost::multiprecision::abs(num_) * pow10(digits) / den_;
  std::string body = scaled.str();
  if (digits > 0) {
    if (body.size() <= digits) body.insert(0, digits - body.size() + 1, '0');
    body.insert(body.size() - digits, ".");
  }
  return (num_ < 0 ? "-" : "") + body;
}

double Rational::to_double() const {
  if (den_ == 0) return std::numeric_limits<double>::quiet_NaN();
  return static_cast<double>(num_) / static_cast<double>(den_);
}

bool operator==(const Rational& a, const Rational& b) {
  if (!a.is_finite() || !b.is_finite()) return false;
  return a.num_ == b.num_ && a.den_ == b.den_;
}

std::strong_ordering operator<=>(const Rational& a, const Rational& b) {
  BigInt lhs = a.num_ * b.den_;
  BigInt rhs = b.num_ * a.den_;
  if (lhs < rhs) return std::strong_ordering::less;
  if (lhs > rhs) return std::strong_ordering::greater;
  return std::strong_ordering::equal;
}

Rational operator+(const Rational& a, const Rational& b) {
  return Rational(a.num_ * b.den_ + b.num_ * a.den_, a.den_ * b.den_);
}

Rational operator-(const Rational& a, const Rational& b) {
  return Rational(a.num_ * b.den_ - b.num_ * a.den_, a.den_ * b.den_);
}

Rational operator*(const Rational& a, const Rational& b) {
  return Rational(a.num_ * b.num_, a.den_ * b.den_);
}

std::optional<Rational> parse_rational(std::string_view text) {
  if (auto slash = text.find('/'); slash != std::string_view::npos) {
    auto p = parse_integer(text.substr(0, slash));
    auto q = parse_integer(text.substr(slash + 1));
    if (!p || !q) return std::nullopt;
    return Rational(*p, *q);
  }
  if (auto dot = text.find('.'); dot != std::string_view::npos) {
    std::string_view whole = text.substr(0, dot);
    std::string_view frac = text.substr(dot + 1);
    bool negative = false;
    if (!whole.empty() && (whole.front() == '+' || whole.front() == '-')) {
      negative = whole.front() == '-';
      whole.remove_prefix(1);
    }
    if (whole.empty() && frac.empty()) return std::nullopt;
    if (!whole.empty() && !all_digits(whole)) return std::nullopt;
    if (!frac.empty() && !all_digits(frac)) return std::nullopt;
    std::string digits = std::string(whole) + std::string(frac);
    BigInt num = from_digits(digits);
    if (negative) num = -num;
    return Rational(num, pow10(frac.size()));
  }
  auto value = parse_integer(text);
  if (!value) return std::nullopt;
  return Rational(*value, 1);
}

}  // namespace crm
