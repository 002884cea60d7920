#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace ropocop {

/// Non-negative exact rational, always stored in lowest terms.
///
/// Thresholds such as "2.25" or the 1.3 safety factor are kept as
/// numerator/denominator pairs so every comparison the detectors make is
/// exact. Comparisons cross-multiply in 128-bit arithmetic.
class Ratio {
public:
  constexpr Ratio() = default;
  Ratio(std::uint64_t num, std::uint64_t den = 1);

  /// Accepts "4", "2.25", "9/4". Throws std::invalid_argument otherwise.
  static Ratio parse(std::string_view text);

  std::uint64_t num() const { return num_; }
  std::uint64_t den() const { return den_; }

  /// Terminating decimal when one exists ("2.25", "4"), else "n/d".
  std::string to_string() const;
  double to_double() const { return static_cast<double>(num_) / static_cast<double>(den_); }

  friend bool operator==(const Ratio&, const Ratio&) = default;
  friend std::strong_ordering operator<=>(const Ratio& a, const Ratio& b);

  friend Ratio operator+(const Ratio& a, const Ratio& b);

private:
  std::uint64_t num_ = 0;
  std::uint64_t den_ = 1;
};

/// max(0, a - b)
Ratio saturating_sub(const Ratio& a, const Ratio& b);

/// sum / count <= threshold, decided by sum * den <= num * count.
bool average_at_most(std::uint64_t sum, std::uint64_t count, const Ratio& threshold);

/// floor(value * factor), saturating at `ceiling`.
std::uint64_t scale_floor(std::uint64_t value, const Ratio& factor, std::uint64_t ceiling);

} // namespace ropocop
