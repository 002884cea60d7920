#include "ropocop/evaluation.hpp"

#include <algorithm>
#include <sstream>

namespace ropocop {

std::string EvalResult::summary_line() const {
  std::ostringstream out;
  out << "exploits detected: " << exploits_detected << "/" << exploits_total
      << ", benign false alarms: " << benign_false_alarms << "/" << benign_total;
  return out.str();
}

std::string EvalResult::trace_line() const {
  return "regenerated traces consistent: " + std::to_string(traces_consistent) + "/" + std::to_string(rows.size());
}

std::string EvalResult::to_csv() const {
  std::ostringstream out;
  out << "label,count,avg,expected,got,match\r\n";
  for (const EvalRow& r : rows) {
    out << r.point.label << ',' << r.point.count << ',' << (r.point.avg ? r.point.avg->to_string() : "") << ','
        << to_string(r.point.expected) << ',' << to_string(r.got) << ',' << (r.match ? "true" : "false") << "\r\n";
  }
  return out.str();
}

synth::GenSpec regeneration_spec(const synth::FeaturePoint& point, std::uint64_t seed) {
  if (point.series == synth::Series::exploit) {
    synth::GenSpec spec = synth::default_spec(synth::Kind::pure_rop, seed);
    spec.params.gadget_count = point.count;
    spec.params.gadget_len = synth::LengthDist::cycle(synth::pattern_for_average(point.avg.value_or(Ratio(1))));
    return spec;
  }
  synth::GenSpec spec = synth::default_spec(synth::Kind::benign, seed);
  spec.params.max_run = static_cast<std::uint32_t>(point.count);
  spec.params.block_count = std::max<std::uint64_t>(400, 8 * point.count);
  if (point.avg) {
    spec.params.min_avg = std::max(*point.avg, Ratio(1));
  }
  return spec;
}

EvalResult run_evaluation(const anticra::Config& cfg, std::uint64_t seed) {
  EvalResult result;
  std::uint64_t index = 0;
  for (const synth::FeaturePoint& point : synth::reference_corpus()) {
    EvalRow row;
    row.point = point;
    row.got = anticra::classify_feature_point(point.count, point.avg, cfg);
    row.match = row.got == point.expected;

    synth::GenSpec spec = regeneration_spec(point, seed + index++);
    spec.params.window = cfg.window;
    spec.params.warmup = cfg.warmup;
    const synth::GeneratedTrace trace = synth::generate(spec);
    anticra::Detector detector(cfg);
    bool alarm = false;
    for (const auto& ev : trace.events) {
      if (const auto* b = std::get_if<BlockExec>(&ev)) {
        alarm = detector.observe(*b).alarm || alarm;
      }
    }
    row.trace_got = alarm ? anticra::Classification::malicious : anticra::Classification::benign;
    row.trace_features = detector.features();

    if (point.series == synth::Series::exploit) {
      ++result.exploits_total;
      result.exploits_detected += row.got == anticra::Classification::malicious;
    } else {
      ++result.benign_total;
      result.benign_false_alarms += row.got == anticra::Classification::malicious;
    }
    result.traces_consistent += row.trace_got == row.got;
    result.rows.push_back(std::move(row));
  }
  std::stable_sort(result.rows.begin(), result.rows.end(),
                   [](const EvalRow& a, const EvalRow& b) { return a.point.label < b.point.label; });
  return result;
}

} // namespace ropocop
