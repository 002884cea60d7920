#include "ropocop/ratio.hpp"

#include <limits>
#include <numeric>
#include <stdexcept>

namespace ropocop {

namespace {

__extension__ using u128 = unsigned __int128;

constexpr std::uint64_t kPow10[] = {
    1ULL,
    10ULL,
    100ULL,
    1000ULL,
    10000ULL,
    100000ULL,
    1000000ULL,
    10000000ULL,
    100000000ULL,
    1000000000ULL,
    10000000000ULL,
    100000000000ULL,
    1000000000000ULL,
    10000000000000ULL,
    100000000000000ULL,
    1000000000000000ULL,
    10000000000000000ULL,
    100000000000000000ULL,
    1000000000000000000ULL,
};
constexpr int kMaxDecimals = 18;

std::uint64_t parse_digits(std::string_view digits, std::string_view whole) {
  if (digits.empty()) {
    throw std::invalid_argument("invalid rational '" + std::string(whole) + "'");
  }
  u128 value = 0;
  for (char c : digits) {
    if (c < '0' || c > '9') {
      throw std::invalid_argument("invalid rational '" + std::string(whole) + "'");
    }
    value = value * 10 + static_cast<unsigned>(c - '0');
    if (value > std::numeric_limits<std::uint64_t>::max()) {
      throw std::invalid_argument("rational out of range '" + std::string(whole) + "'");
    }
  }
  return static_cast<std::uint64_t>(value);
}

} // namespace

Ratio::Ratio(std::uint64_t num, std::uint64_t den) {
  if (den == 0) {
    throw std::invalid_argument("rational with zero denominator");
  }
  const std::uint64_t g = std::gcd(num, den);
  num_ = num / g;
  den_ = den / g;
  if (num_ == 0) {
    den_ = 1;
  }
}

Ratio Ratio::parse(std::string_view text) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t')) text.remove_suffix(1);

  if (auto slash = text.find('/'); slash != std::string_view::npos) {
    return Ratio(parse_digits(text.substr(0, slash), text), parse_digits(text.substr(slash + 1), text));
  }
  auto dot = text.find('.');
  if (dot == std::string_view::npos) {
    return Ratio(parse_digits(text, text));
  }
  std::string_view int_part = text.substr(0, dot);
  std::string_view frac_part = text.substr(dot + 1);
  if (frac_part.size() > static_cast<std::size_t>(kMaxDecimals) || (int_part.empty() && frac_part.empty())) {
    throw std::invalid_argument("invalid rational '" + std::string(text) + "'");
  }
  std::string digits;
  digits.reserve(text.size());
  digits.append(int_part.empty() ? "0" : int_part);
  digits.append(frac_part);
  return Ratio(parse_digits(digits, text), kPow10[frac_part.size()]);
}

std::string Ratio::to_string() const {
  for (int k = 0; k <= kMaxDecimals; ++k) {
    if (kPow10[k] % den_ != 0) {
      continue;
    }
    const u128 scaled = static_cast<u128>(num_) * (kPow10[k] / den_);
    const u128 whole = scaled / kPow10[k];
    u128 frac = scaled % kPow10[k];
    std::string out;
    {
      u128 w = whole;
      do {
        out.insert(out.begin(), static_cast<char>('0' + static_cast<int>(w % 10)));
        w /= 10;
      } while (w != 0);
    }
    if (k > 0) {
      std::string tail(static_cast<std::size_t>(k), '0');
      for (int i = k - 1; i >= 0; --i) {
        tail[static_cast<std::size_t>(i)] = static_cast<char>('0' + static_cast<int>(frac % 10));
        frac /= 10;
      }
      out += '.';
      out += tail;
    }
    return out;
  }
  return std::to_string(num_) + "/" + std::to_string(den_);
}

std::strong_ordering operator<=>(const Ratio& a, const Ratio& b) {
  const u128 lhs = static_cast<u128>(a.num_) * b.den_;
  const u128 rhs = static_cast<u128>(b.num_) * a.den_;
  return lhs <=> rhs;
}

Ratio operator+(const Ratio& a, const Ratio& b) {
  const std::uint64_t g = std::gcd(a.den_, b.den_);
  const u128 den = static_cast<u128>(a.den_ / g) * b.den_;
  const u128 num = static_cast<u128>(a.num_) * (b.den_ / g) + static_cast<u128>(b.num_) * (a.den_ / g);
  if (den > std::numeric_limits<std::uint64_t>::max() || num > std::numeric_limits<std::uint64_t>::max()) {
    throw std::overflow_error("rational addition overflow");
  }
  return Ratio(static_cast<std::uint64_t>(num), static_cast<std::uint64_t>(den));
}

Ratio saturating_sub(const Ratio& a, const Ratio& b) {
  if (a <= b) {
    return Ratio();
  }
  const std::uint64_t g = std::gcd(a.den(), b.den());
  const u128 den = static_cast<u128>(a.den() / g) * b.den();
  const u128 num = static_cast<u128>(a.num()) * (b.den() / g) - static_cast<u128>(b.num()) * (a.den() / g);
  if (den > std::numeric_limits<std::uint64_t>::max() || num > std::numeric_limits<std::uint64_t>::max()) {
    throw std::overflow_error("rational subtraction overflow");
  }
  return Ratio(static_cast<std::uint64_t>(num), static_cast<std::uint64_t>(den));
}

bool average_at_most(std::uint64_t sum, std::uint64_t count, const Ratio& threshold) {
  return static_cast<u128>(sum) * threshold.den() <= static_cast<u128>(threshold.num()) * count;
}

std::uint64_t scale_floor(std::uint64_t value, const Ratio& factor, std::uint64_t ceiling) {
  const u128 scaled = static_cast<u128>(value) * factor.num() / factor.den();
  return scaled > ceiling ? ceiling : static_cast<std::uint64_t>(scaled);
}

} // namespace ropocop
