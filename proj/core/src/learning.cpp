#include "ropocop/learning.hpp"

#include <algorithm>
#include <sstream>

namespace ropocop::learning {

anticra::Config recommend(std::uint64_t observed_max_consecutive, const std::optional<Ratio>& observed_min_window_avg,
                          const Margins& margins) {
  if (margins.avg_margin == Ratio(0)) {
    throw LearningError("avg_margin must be positive: a zero margin puts band1_max_avg on the observed minimum");
  }
  anticra::Config cfg;
  const std::uint64_t band1 = std::max<std::uint64_t>(1, observed_max_consecutive + margins.count_margin);
  if (band1 + kBandCountGap > 0xffffffffULL) {
    throw LearningError("observed run length too large to derive thresholds");
  }
  cfg.band1_max_count = static_cast<std::uint32_t>(band1);
  cfg.band2_max_count = cfg.band1_max_count + kBandCountGap;
  cfg.hard_cap = cfg.band2_max_count;
  cfg.band1_max_avg = observed_min_window_avg ? saturating_sub(*observed_min_window_avg, margins.avg_margin)
                                              : anticra::Config{}.band1_max_avg;
  cfg.band2_max_avg = cfg.band1_max_avg + kBandAvgGap;
  return cfg;
}

ProgramProfile profile_from_features(const std::string& program, std::span<const anticra::RunFeatures> per_trace,
                                     const Margins& margins) {
  if (per_trace.empty()) {
    throw LearningError("learning needs at least one trace");
  }
  anticra::RunFeatures all;
  for (const auto& f : per_trace) {
    all.fold(f);
  }
  ProgramProfile p;
  p.program = program;
  p.traces_seen = per_trace.size();
  p.observed_max_consecutive = all.max_consecutive;
  p.observed_min_window_avg = all.lowest_window_avg;
  p.margins = margins;
  p.recommended = recommend(p.observed_max_consecutive, p.observed_min_window_avg, margins);
  return p;
}

ProgramProfile build_profile(const std::string& program, std::span<const std::vector<TraceEvent>> traces,
                             const Margins& margins) {
  std::vector<anticra::RunFeatures> features;
  features.reserve(traces.size());
  for (const auto& t : traces) {
    features.push_back(anticra::extract_features(t, anticra::Config{}));
  }
  return profile_from_features(program, features, margins);
}

ProgramProfile merge_profiles(const ProgramProfile& a, const ProgramProfile& b) {
  if (a.program != b.program) {
    throw LearningError("cannot merge profiles of '" + a.program + "' and '" + b.program + "'");
  }
  if (!(a.margins == b.margins)) {
    throw LearningError("cannot merge profiles learned with different margins");
  }
  anticra::RunFeatures fa{a.observed_max_consecutive, a.observed_min_window_avg};
  fa.fold({b.observed_max_consecutive, b.observed_min_window_avg});

  ProgramProfile out;
  out.program = a.program;
  out.traces_seen = a.traces_seen + b.traces_seen;
  out.observed_max_consecutive = fa.max_consecutive;
  out.observed_min_window_avg = fa.lowest_window_avg;
  out.margins = a.margins;
  out.recommended = recommend(out.observed_max_consecutive, out.observed_min_window_avg, out.margins);
  return out;
}

std::string render_profile(const ProgramProfile& p) {
  std::ostringstream out;
  out << "# learned thresholds for " << p.program << "; both bands are recomputed from the observed extrema\n";
  out << render_anticra_section(p.recommended) << "\n";
  out << "[profile]\n"
      << "program = " << quote_config_string(p.program) << "\n"
      << "traces_seen = " << p.traces_seen << "\n"
      << "observed_max_consecutive = " << p.observed_max_consecutive << "\n";
  if (p.observed_min_window_avg) {
    out << "observed_min_window_avg = " << quote_config_string(p.observed_min_window_avg->to_string()) << "\n";
  }
  out << "count_margin = " << p.margins.count_margin << "\n"
      << "avg_margin = " << quote_config_string(p.margins.avg_margin.to_string()) << "\n";
  return out.str();
}

ProgramProfile profile_from(const ConfigDocument& doc) {
  if (!doc.has_section("profile")) {
    throw ConfigError("profile", "missing [profile] section");
  }
  doc.require_known_keys("profile", {"program", "traces_seen", "observed_max_consecutive", "observed_min_window_avg",
                                     "count_margin", "avg_margin"});
  ProgramProfile p;
  auto program = doc.get("profile", "program");
  if (!program) {
    throw ConfigError("profile.program", "missing");
  }
  p.program = *program;
  p.traces_seen = get_uint(doc, "profile", "traces_seen").value_or(0);
  p.observed_max_consecutive = get_uint(doc, "profile", "observed_max_consecutive").value_or(0);
  p.observed_min_window_avg = get_ratio(doc, "profile", "observed_min_window_avg");
  if (auto m = get_uint(doc, "profile", "count_margin")) {
    if (*m > 0xffffffffULL) throw ConfigError("profile.count_margin", "value out of range");
    p.margins.count_margin = static_cast<std::uint32_t>(*m);
  }
  if (auto m = get_ratio(doc, "profile", "avg_margin")) p.margins.avg_margin = *m;
  p.recommended = tool_config_from(doc).anticra;
  return p;
}

} // namespace ropocop::learning
