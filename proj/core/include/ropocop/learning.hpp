#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ropocop/anticra.hpp"
#include "ropocop/config.hpp"
#include "ropocop/ratio.hpp"
#include "ropocop/trace.hpp"

namespace ropocop::learning {

struct Margins {
  std::uint32_t count_margin = 3;
  Ratio avg_margin{1, 4};

  friend bool operator==(const Margins&, const Margins&) = default;
};

struct ProgramProfile {
  std::string program;
  std::uint64_t traces_seen = 0;
  std::uint64_t observed_max_consecutive = 0;
  std::optional<Ratio> observed_min_window_avg;
  Margins margins;
  anticra::Config recommended;

  friend bool operator==(const ProgramProfile&, const ProgramProfile&) = default;
};

class LearningError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Gap between the two count bands and between the two average bands of the
/// stock thresholds (35 -> 50, 2.25 -> 4).
inline constexpr std::uint32_t kBandCountGap = 15;
inline const Ratio kBandAvgGap{7, 4};

/// Thresholds that sit just outside the observed extrema.
///
/// band1_max_count = max + count_margin, band2_max_count = hard_cap =
/// band1_max_count + 15, band1_max_avg = max(0, min_avg - avg_margin) (or the
/// stock 2.25 when no average was observed), band2_max_avg = band1_max_avg + 1.75.
/// band1_max_count is at least 1. Throws LearningError when avg_margin is 0.
anticra::Config recommend(std::uint64_t observed_max_consecutive, const std::optional<Ratio>& observed_min_window_avg,
                          const Margins& margins);

ProgramProfile profile_from_features(const std::string& program, std::span<const anticra::RunFeatures> per_trace,
                                     const Margins& margins = {});

/// Learns from whole traces. Features are extracted under the stock window/warmup.
ProgramProfile build_profile(const std::string& program, std::span<const std::vector<TraceEvent>> traces,
                             const Margins& margins = {});

/// Combines two sessions of the same program. Throws LearningError on a name
/// or margin mismatch.
ProgramProfile merge_profiles(const ProgramProfile& a, const ProgramProfile& b);

/// Config-file form: [anticra] with the recommendation plus a [profile] section.
std::string render_profile(const ProgramProfile& profile);
ProgramProfile profile_from(const ConfigDocument& doc);

} // namespace ropocop::learning
