#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "ropocop/anticra.hpp"
#include "ropocop/depplus.hpp"
#include "ropocop/trace.hpp"

namespace ropocop {

inline constexpr int kReportSchemaVersion = 1;

enum class DetectorId : std::uint8_t { anticra, depplus };

/// "AntiCRA" / "DepPlus"
std::string_view to_string(DetectorId d);

struct AntiCraEvidence {
  std::uint64_t consecutive = 0;
  std::optional<Ratio> window_avg;
};

struct DepPlusEvidence {
  Address target;
  depplus::Mode mode = depplus::Mode::full_scan;
  std::size_t scanned_regions = 0;
};

struct Alarm {
  DetectorId detector = DetectorId::anticra;
  /// 0-based position in the event stream; always a BlockExec.
  std::size_t event_index = 0;
  /// 1-based position among BlockExec events.
  std::uint64_t block_number = 0;
  /// HardCap, Band1, Band2 or NonImageTarget.
  std::string rule;
  std::variant<AntiCraEvidence, DepPlusEvidence> evidence;
};

struct AnalysisOptions {
  bool run_anticra = true;
  bool run_depplus = true;
  bool fail_fast = false;
  anticra::Config anticra;
  depplus::Config depplus;
};

struct AnalysisReport {
  std::string trace;
  AnalysisOptions options;
  std::uint64_t events = 0;
  std::uint64_t blocks = 0;
  bool stopped_early = false;
  anticra::RunFeatures features;
  std::vector<Alarm> alarms;

  std::optional<std::size_t> first_alarm_index() const;
  const Alarm* first_alarm(DetectorId d) const;
  std::size_t alarm_count(DetectorId d) const;

  /// Versioned JSON report, keys in fixed order.
  std::string to_json() const;
};

/// Feeds one event stream through the enabled detectors in a single pass.
class Analyzer {
public:
  explicit Analyzer(AnalysisOptions options, std::string trace_name = {});

  /// Returns false once fail-fast has stopped the analysis.
  /// Throws depplus::MapError on inconsistent image events.
  bool feed(const TraceEvent& ev);

  const AnalysisReport& report() const { return report_; }
  AnalysisReport take_report() { return std::move(report_); }

  /// Detector state bytes; independent of how many events were fed.
  std::size_t state_bytes() const;

private:
  AnalysisReport report_;
  std::optional<anticra::Detector> anticra_;
  std::optional<depplus::Detector> depplus_;
};

AnalysisReport analyze_stream(std::istream& in, const AnalysisOptions& options, std::string trace_name = {});
AnalysisReport analyze_events(std::span<const TraceEvent> events, const AnalysisOptions& options,
                              std::string trace_name = {});

} // namespace ropocop
