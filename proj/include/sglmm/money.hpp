#pragma once

#include <compare>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace sglmm {

/// Currency amount held as an integer number of cents so that splitting and
/// dispersal conserve totals exactly.
class Money {
 public:
  constexpr Money() = default;
  static constexpr Money from_cents(std::int64_t cents) { return Money(cents); }
  /// Rounds to the nearest cent.
  static Money from_dollars(double dollars);
  /// Parses a decimal string such as "1234.5" or "12" without going through
  /// binary floating point.
  static Money parse(const std::string& text);

  constexpr std::int64_t cents() const { return cents_; }
  double dollars() const { return static_cast<double>(cents_) / 100.0; }
  std::string to_string() const;

  constexpr Money& operator+=(Money o) {
    cents_ += o.cents_;
    return *this;
  }
  constexpr Money& operator-=(Money o) {
    cents_ -= o.cents_;
    return *this;
  }
  friend constexpr Money operator+(Money a, Money b) { return Money(a.cents_ + b.cents_); }
  friend constexpr Money operator-(Money a, Money b) { return Money(a.cents_ - b.cents_); }
  friend constexpr auto operator<=>(Money, Money) = default;

 private:
  constexpr explicit Money(std::int64_t cents) : cents_(cents) {}
  std::int64_t cents_ = 0;
};

/// Splits `amount` proportionally to strictly positive integer `weights`.
/// Each share is the floor of its exact proportional value; the leftover
/// cents (fewer than the number of shares) go one cent each to the trailing
/// shares, so the shares sum to `amount` exactly.
std::vector<Money> apportion(Money amount, std::span<const std::int64_t> weights);

}  // namespace sglmm
