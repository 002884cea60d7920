#include "ropocop/analyzer.hpp"

#include <json.hpp>

#include "ropocop/trace_io.hpp"

namespace ropocop {

namespace {

using ojson = nlohmann::ordered_json;

ojson to_json(const Alarm& a) {
  ojson j;
  j["detector"] = std::string(to_string(a.detector));
  j["event_index"] = a.event_index;
  j["block_number"] = a.block_number;
  j["rule"] = a.rule;
  if (const auto* e = std::get_if<AntiCraEvidence>(&a.evidence)) {
    j["evidence"] = {{"consecutive", e->consecutive},
                     {"window_avg", e->window_avg ? ojson(e->window_avg->to_string()) : ojson(nullptr)}};
  } else {
    const auto& d = std::get<DepPlusEvidence>(a.evidence);
    j["evidence"] = {{"target", to_hex(d.target)},
                     {"mode", std::string(depplus::to_string(d.mode))},
                     {"scanned_regions", d.scanned_regions}};
  }
  return j;
}

} // namespace

std::string_view to_string(DetectorId d) {
  return d == DetectorId::anticra ? "AntiCRA" : "DepPlus";
}

std::optional<std::size_t> AnalysisReport::first_alarm_index() const {
  if (alarms.empty()) return std::nullopt;
  return alarms.front().event_index;
}

const Alarm* AnalysisReport::first_alarm(DetectorId d) const {
  for (const Alarm& a : alarms) {
    if (a.detector == d) return &a;
  }
  return nullptr;
}

std::size_t AnalysisReport::alarm_count(DetectorId d) const {
  std::size_t n = 0;
  for (const Alarm& a : alarms) n += a.detector == d;
  return n;
}

std::string AnalysisReport::to_json() const {
  ojson j;
  j["schema"] = "ropocop-report";
  j["version"] = kReportSchemaVersion;
  j["trace"] = trace;
  ojson detectors = ojson::array();
  if (options.run_anticra) detectors.push_back("anticra");
  if (options.run_depplus) detectors.push_back("depplus");
  j["detectors"] = detectors;
  j["depplus_mode"] = options.run_depplus ? ojson(std::string(depplus::to_string(options.depplus.mode))) : ojson(nullptr);
  j["events"] = events;
  j["blocks"] = blocks;
  j["stopped_early"] = stopped_early;
  j["features"] = {{"max_consecutive", features.max_consecutive},
                   {"lowest_window_avg", features.lowest_window_avg ? ojson(features.lowest_window_avg->to_string())
                                                                    : ojson(nullptr)}};
  ojson list = ojson::array();
  for (const Alarm& a : alarms) list.push_back(ropocop::to_json(a));
  j["alarms"] = std::move(list);
  const auto first = first_alarm_index();
  j["summary"] = {{"alarms", alarms.size()}, {"first_alarm_index", first ? ojson(*first) : ojson(nullptr)}};
  return j.dump(2);
}

Analyzer::Analyzer(AnalysisOptions options, std::string trace_name) {
  report_.trace = std::move(trace_name);
  report_.options = options;
  if (options.run_anticra) anticra_.emplace(options.anticra);
  if (options.run_depplus) depplus_.emplace(options.depplus);
}

bool Analyzer::feed(const TraceEvent& ev) {
  if (report_.stopped_early) {
    return false;
  }
  const std::size_t index = report_.events++;
  const auto* block = std::get_if<BlockExec>(&ev);
  if (block) {
    ++report_.blocks;
  }
  bool alarmed = false;

  if (anticra_ && block) {
    const anticra::Verdict v = anticra_->observe(*block);
    if (v.alarm) {
      report_.alarms.push_back(Alarm{DetectorId::anticra, index, report_.blocks, std::string(to_string(v.rule)),
                                     AntiCraEvidence{v.consecutive, v.window_avg}});
      alarmed = true;
    }
  }
  if (depplus_) {
    if (auto v = depplus_->observe(ev); v && v->alarm()) {
      report_.alarms.push_back(Alarm{DetectorId::depplus, index, report_.blocks, "NonImageTarget",
                                     DepPlusEvidence{v->target, v->mode, v->scanned_regions}});
      alarmed = true;
    }
  }
  if (anticra_) {
    report_.features = anticra_->features();
  }
  if (alarmed && report_.options.fail_fast) {
    report_.stopped_early = true;
    return false;
  }
  return true;
}

std::size_t Analyzer::state_bytes() const {
  std::size_t bytes = 0;
  if (anticra_) bytes += anticra_->footprint_bytes();
  if (depplus_) bytes += depplus_->footprint_bytes();
  return bytes;
}

AnalysisReport analyze_stream(std::istream& in, const AnalysisOptions& options, std::string trace_name) {
  Analyzer analyzer(options, std::move(trace_name));
  TraceReader reader(in);
  while (auto ev = reader.next()) {
    if (!analyzer.feed(*ev)) break;
  }
  return analyzer.take_report();
}

AnalysisReport analyze_events(std::span<const TraceEvent> events, const AnalysisOptions& options,
                              std::string trace_name) {
  Analyzer analyzer(options, std::move(trace_name));
  for (const auto& ev : events) {
    if (!analyzer.feed(ev)) break;
  }
  return analyzer.take_report();
}

} // namespace ropocop
