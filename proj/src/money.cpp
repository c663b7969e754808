#include "sglmm/money.hpp"

#include "sglmm/errors.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <numeric>

namespace sglmm {

Money Money::from_dollars(double dollars) {
  if (!std::isfinite(dollars)) throw MalformedRecordError("non-finite currency amount");
  return Money(std::llround(dollars * 100.0));
}

Money Money::parse(const std::string& text) {
  std::size_t pos = 0;
  while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
  bool negative = false;
  if (pos < text.size() && (text[pos] == '-' || text[pos] == '+')) {
    negative = text[pos] == '-';
    ++pos;
  }
  std::int64_t whole = 0;
  std::int64_t frac = 0;
  int frac_digits = 0;
  bool any_digit = false;
  bool round_up = false;
  for (; pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos])); ++pos) {
    whole = whole * 10 + (text[pos] - '0');
    any_digit = true;
  }
  if (pos < text.size() && text[pos] == '.') {
    ++pos;
    for (; pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos])); ++pos) {
      any_digit = true;
      if (frac_digits < 2) {
        frac = frac * 10 + (text[pos] - '0');
        ++frac_digits;
      } else if (frac_digits == 2) {
        round_up = text[pos] >= '5';
        ++frac_digits;
      }
    }
  }
  while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
  if (!any_digit || pos != text.size()) {
    throw MalformedRecordError("cannot parse currency amount '" + text + "'");
  }
  if (frac_digits == 1) frac *= 10;
  std::int64_t cents = whole * 100 + frac + (round_up ? 1 : 0);
  return Money(negative ? -cents : cents);
}

std::string Money::to_string() const {
  std::int64_t c = cents_ < 0 ? -cents_ : cents_;
  std::string frac = std::to_string(c % 100);
  if (frac.size() < 2) frac.insert(0, "0");
  return (cents_ < 0 ? "-" : "") + std::to_string(c / 100) + "." + frac;
}

std::vector<Money> apportion(Money amount, std::span<const std::int64_t> weights) {
  if (weights.empty()) throw DataError("apportion: no recipients");
  __int128 total_weight = 0;
  for (auto w : weights) {
    if (w <= 0) throw DataError("apportion: weights must be positive");
    total_weight += w;
  }
  const std::int64_t cents = amount.cents();
  std::vector<Money> shares(weights.size());
  std::int64_t assigned = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    // Floor division for either sign of amount.
    __int128 num = static_cast<__int128>(cents) * weights[i];
    __int128 q = num / total_weight;
    if (num % total_weight != 0 && num < 0) --q;
    shares[i] = Money::from_cents(static_cast<std::int64_t>(q));
    assigned += static_cast<std::int64_t>(q);
  }
  std::int64_t residue = cents - assigned;  // 0 <= residue < weights.size()
  for (std::size_t i = weights.size(); residue > 0 && i-- > 0; --residue) {
    shares[i] += Money::from_cents(1);
  }
  return shares;
}

}  // namespace sglmm
