#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "ropocop/synth.hpp"

namespace ropocop::cli {

// Exit codes shared by every subcommand.
inline constexpr int kExitClean = 0;
inline constexpr int kExitInputError = 2;
inline constexpr int kExitAlarm = 3;

/// Environment variable consulted when --config is not given.
inline constexpr const char* kConfigEnvVar = "ROPOCOP_CONFIG";

struct AnalyzeArgs {
  std::string trace;
  std::optional<std::string> config;
  std::string detectors = "anticra,depplus";
  std::optional<std::string> depplus_mode;
  bool fail_fast = false;
  std::optional<std::string> out;
};

/// 0 = clean, 3 = alarm(s), 2 = input error. Report JSON goes to `out`
/// unless args.out names a file.
int cmd_analyze(const AnalyzeArgs& args, std::ostream& out, std::ostream& err);

struct LearnArgs {
  std::string dir;
  std::string program;
  std::uint32_t count_margin = 3;
  std::string avg_margin = "0.25";
  std::optional<std::string> out; // default: <program>.profile.toml
};

int cmd_learn(const LearnArgs& args, std::ostream& out, std::ostream& err);

/// Writes the trace for `spec` to `out_path`.
int cmd_gen(const synth::GenSpec& spec, const std::string& out_path, std::ostream& out, std::ostream& err);

struct EvalArgs {
  std::optional<std::string> config;
  std::string out;
};

/// Writes the classification CSV and prints the summary lines.
int cmd_eval(const EvalArgs& args, std::ostream& out, std::ostream& err);

/// Full command line entry point (argv[0] is the program name).
int run(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err);

} // namespace ropocop::cli
