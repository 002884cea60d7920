#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "ropocop/ratio.hpp"
#include "ropocop/trace.hpp"

namespace ropocop::anticra {

/// Thresholds for the consecutive-indirect-branch / short-block heuristic.
///
/// Runs of up to `band1_max_count` indirect branches alarm when the window
/// average drops to `band1_max_avg` or lower; longer runs up to
/// `band2_max_count` use the looser `band2_max_avg`. Anything beyond
/// `hard_cap` alarms unconditionally. No average is evaluated before the run
/// reaches `warmup` blocks.
struct Config {
  std::uint32_t window = 10;
  std::uint32_t warmup = 15;
  std::uint32_t band1_max_count = 35;
  Ratio band1_max_avg{9, 4};
  std::uint32_t band2_max_count = 50;
  Ratio band2_max_avg{4, 1};
  std::uint32_t hard_cap = 50;

  /// Throws std::invalid_argument describing the first broken invariant.
  void validate() const;

  friend bool operator==(const Config&, const Config&) = default;
};

enum class Rule : std::uint8_t { hard_cap, band1, band2 };

/// "HardCap", "Band1", "Band2"
std::string_view to_string(Rule r);

struct Verdict {
  bool alarm = false;
  Rule rule = Rule::hard_cap; // meaningful only when alarm is set
  std::uint64_t consecutive = 0;
  /// Window average at this block, present once the run reached warmup.
  std::optional<Ratio> window_avg;
};

/// Live counters for the current run of indirect-branch-terminated blocks.
class RunState {
public:
  explicit RunState(std::uint32_t window = 10);

  void push(std::uint32_t instr_count);
  void reset();

  std::uint64_t consecutive() const { return consecutive_; }
  std::uint64_t window_sum() const { return sum_; }
  std::uint32_t window_count() const { return count_; }
  std::uint32_t window_capacity() const { return static_cast<std::uint32_t>(lengths_.size()); }

  /// Bytes held by this state; depends only on the window size.
  std::size_t footprint_bytes() const { return sizeof(*this) + lengths_.capacity() * sizeof(std::uint32_t); }

private:
  std::vector<std::uint32_t> lengths_;
  std::uint32_t head_ = 0;
  std::uint32_t count_ = 0;
  std::uint64_t sum_ = 0;
  std::uint64_t consecutive_ = 0;
};

/// Per-trace summary: the two axes of the classification plane.
struct RunFeatures {
  std::uint64_t max_consecutive = 0;
  /// Absent when no run ever reached warmup.
  std::optional<Ratio> lowest_window_avg;

  void fold(const RunFeatures& other);

  friend bool operator==(const RunFeatures&, const RunFeatures&) = default;
};

/// Advances `state` by one block and applies the rule table.
Verdict observe_block(RunState& state, const Config& cfg, const BlockExec& ev);

/// Streaming detector: a RunState plus the running feature summary.
class Detector {
public:
  explicit Detector(Config cfg = {});

  Verdict observe(const BlockExec& ev);

  const Config& config() const { return cfg_; }
  const RunState& state() const { return state_; }
  const RunFeatures& features() const { return features_; }
  std::size_t footprint_bytes() const { return sizeof(*this) - sizeof(RunState) + state_.footprint_bytes(); }

private:
  Config cfg_;
  RunState state_;
  RunFeatures features_;
};

RunFeatures extract_features(std::span<const TraceEvent> events, const Config& cfg = {});

enum class Classification : std::uint8_t { benign, malicious };

std::string_view to_string(Classification c);

/// Which rule a (count, lowest average) summary pair falls under, if any.
std::optional<Rule> matching_rule(std::uint64_t count, const std::optional<Ratio>& avg, const Config& cfg);

Classification classify_feature_point(std::uint64_t count, const std::optional<Ratio>& avg, const Config& cfg = {});

} // namespace ropocop::anticra
