#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "ropocop/anticra.hpp"
#include "ropocop/reference_corpus.hpp"
#include "ropocop/synth.hpp"

namespace ropocop {

struct EvalRow {
  synth::FeaturePoint point;
  /// Classification of the summary pair.
  anticra::Classification got = anticra::Classification::benign;
  bool match = false;
  /// Streaming detector verdict on a trace regenerated from the point.
  anticra::Classification trace_got = anticra::Classification::benign;
  anticra::RunFeatures trace_features;
};

struct EvalResult {
  std::vector<EvalRow> rows; // sorted by label
  std::size_t exploits_detected = 0;
  std::size_t exploits_total = 0;
  std::size_t benign_false_alarms = 0;
  std::size_t benign_total = 0;
  std::size_t traces_consistent = 0;

  /// "exploits detected: D/E, benign false alarms: F/B"
  std::string summary_line() const;
  /// "regenerated traces consistent: N/M"
  std::string trace_line() const;
  /// Header label,count,avg,expected,got,match then one row per point.
  std::string to_csv() const;
};

/// Trace shaped like the point: a return chain for exploits, benign activity
/// with the same longest run and average floor otherwise.
synth::GenSpec regeneration_spec(const synth::FeaturePoint& point, std::uint64_t seed);

EvalResult run_evaluation(const anticra::Config& cfg, std::uint64_t seed = 1);

} // namespace ropocop
