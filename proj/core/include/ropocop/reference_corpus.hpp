#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ropocop/anticra.hpp"
#include "ropocop/ratio.hpp"

namespace ropocop::synth {

enum class Series : char {
  spec = 'a',        // SPEC CPU2006 benchmarks
  exploit = 'b',     // real-world exploits
  application = 'c', // desktop applications
};

/// One published (longest run, lowest window average) summary pair.
struct FeaturePoint {
  std::string label; // series letter + 1-based position in the series, e.g. "b05"
  Series series;
  std::uint64_t count;
  /// Absent for points plotted at y = 0 (run too short to evaluate).
  std::optional<Ratio> avg;
  anticra::Classification expected;
};

/// The 45 measured points: 11 exploits, 18 SPEC benchmarks, 16 applications,
/// in publication order.
const std::vector<FeaturePoint>& reference_corpus();

} // namespace ropocop::synth
