#include "ropocop/cli/commands.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ropocop/analyzer.hpp"
#include "ropocop/config.hpp"
#include "ropocop/evaluation.hpp"
#include "ropocop/learning.hpp"
#include "ropocop/trace_io.hpp"

namespace ropocop::cli {

namespace fs = std::filesystem;

namespace {

std::optional<std::string> resolve_config(const std::optional<std::string>& flag) {
  if (flag) return flag;
  if (const char* env = std::getenv(kConfigEnvVar); env && *env) {
    return std::string(env);
  }
  return std::nullopt;
}

ToolConfig load_config(const std::optional<std::string>& flag) {
  auto path = resolve_config(flag);
  return path ? load_tool_config(*path) : ToolConfig{};
}

bool write_text(const std::string& path, const std::string& text, std::ostream& err) {
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  file << text;
  file.flush();
  if (!file) {
    err << "error: cannot write '" << path << "'\n";
    return false;
  }
  return true;
}

anticra::RunFeatures features_of_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open trace '" + path.string() + "'");
  }
  TraceReader reader(in);
  anticra::Detector detector;
  while (auto ev = reader.next()) {
    if (const auto* b = std::get_if<BlockExec>(&*ev)) {
      detector.observe(*b);
    }
  }
  return detector.features();
}

} // namespace

int cmd_analyze(const AnalyzeArgs& args, std::ostream& out, std::ostream& err) {
  AnalysisOptions options;
  try {
    const ToolConfig cfg = load_config(args.config);
    options.anticra = cfg.anticra;
    options.depplus = cfg.depplus;
  } catch (const std::exception& e) {
    err << "error: config: " << e.what() << "\n";
    return kExitInputError;
  }

  options.run_anticra = false;
  options.run_depplus = false;
  std::stringstream list(args.detectors);
  for (std::string name; std::getline(list, name, ',');) {
    if (name == "anticra") {
      options.run_anticra = true;
    } else if (name == "depplus") {
      options.run_depplus = true;
    } else {
      err << "error: unknown detector '" << name << "' (expected anticra, depplus)\n";
      return kExitInputError;
    }
  }
  if (!options.run_anticra && !options.run_depplus) {
    err << "error: no detectors selected\n";
    return kExitInputError;
  }
  if (args.depplus_mode) {
    auto mode = depplus::mode_from_string(*args.depplus_mode);
    if (!mode) {
      err << "error: --depplus-mode must be full or watermark\n";
      return kExitInputError;
    }
    options.depplus.mode = *mode;
  }
  options.fail_fast = args.fail_fast;

  std::ifstream in(args.trace, std::ios::binary);
  if (!in) {
    err << "error: cannot open trace '" << args.trace << "'\n";
    return kExitInputError;
  }
  AnalysisReport report;
  try {
    report = analyze_stream(in, options, args.trace);
  } catch (const TraceError& e) {
    err << "error: " << args.trace << ": " << e.what() << "\n";
    return kExitInputError;
  } catch (const depplus::MapError& e) {
    err << "error: " << args.trace << ": " << e.what() << "\n";
    return kExitInputError;
  }

  const std::string json = report.to_json() + "\n";
  if (args.out) {
    if (!write_text(*args.out, json, err)) return kExitInputError;
  } else {
    out << json;
  }
  return report.alarms.empty() ? kExitClean : kExitAlarm;
}

int cmd_learn(const LearnArgs& args, std::ostream& out, std::ostream& err) {
  learning::Margins margins;
  margins.count_margin = args.count_margin;
  try {
    margins.avg_margin = Ratio::parse(args.avg_margin);
  } catch (const std::exception&) {
    err << "error: --avg-margin expects a decimal, got '" << args.avg_margin << "'\n";
    return kExitInputError;
  }

  std::error_code ec;
  if (!fs::is_directory(args.dir, ec)) {
    err << "error: '" << args.dir << "' is not a directory\n";
    return kExitInputError;
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(args.dir, ec)) {
    if (entry.is_regular_file() && entry.path().extension() == ".rtrc") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) {
    err << "error: no .rtrc traces in '" << args.dir << "'\n";
    return kExitInputError;
  }

  std::vector<anticra::RunFeatures> features;
  for (const auto& f : files) {
    try {
      features.push_back(features_of_file(f));
    } catch (const std::exception& e) {
      err << "error: " << f.string() << ": " << e.what() << "\n";
      return kExitInputError;
    }
  }
  learning::ProgramProfile profile;
  try {
    profile = learning::profile_from_features(args.program, features, margins);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitInputError;
  }

  const std::string path = args.out.value_or(args.program + ".profile.toml");
  if (!write_text(path, learning::render_profile(profile), err)) return kExitInputError;

  const auto& r = profile.recommended;
  out << "program: " << profile.program << "\n"
      << "traces: " << profile.traces_seen << "\n"
      << "observed max consecutive indirect branches: " << profile.observed_max_consecutive << "\n"
      << "observed min window average: "
      << (profile.observed_min_window_avg ? profile.observed_min_window_avg->to_string() : "none") << "\n"
      << "recommended: band1 <= " << r.band1_max_count << " @ avg <= " << r.band1_max_avg.to_string()
      << ", band2 <= " << r.band2_max_count << " @ avg <= " << r.band2_max_avg.to_string()
      << ", hard cap " << r.hard_cap << "\n"
      << "profile written to " << path << "\n";
  return kExitClean;
}

int cmd_gen(const synth::GenSpec& spec, const std::string& out_path, std::ostream& out, std::ostream& err) {
  synth::GeneratedTrace trace;
  try {
    trace = synth::generate(spec);
  } catch (const std::exception& e) {
    err << "error: gen: " << e.what() << "\n";
    return kExitInputError;
  }
  try {
    write_trace_file(out_path, trace.events);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitInputError;
  }
  out << "wrote " << trace.events.size() << " events (" << synth::to_string(spec.kind) << ", seed " << spec.seed
      << ") to " << out_path << "\n";
  if (trace.pivot_index) {
    out << "pivot at event " << *trace.pivot_index << "\n";
  }
  return kExitClean;
}

int cmd_eval(const EvalArgs& args, std::ostream& out, std::ostream& err) {
  ToolConfig cfg;
  try {
    cfg = load_config(args.config);
  } catch (const std::exception& e) {
    err << "error: config: " << e.what() << "\n";
    return kExitInputError;
  }
  EvalResult result;
  try {
    result = run_evaluation(cfg.anticra);
  } catch (const std::exception& e) {
    err << "error: eval: " << e.what() << "\n";
    return kExitInputError;
  }
  if (!write_text(args.out, result.to_csv(), err)) return kExitInputError;
  out << result.summary_line() << "\n" << result.trace_line() << "\n";
  return kExitClean;
}

} // namespace ropocop::cli
