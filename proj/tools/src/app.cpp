#include <algorithm>

#include <CLI11.hpp>

#include "ropocop/cli/commands.hpp"
#include "ropocop/config.hpp"

namespace ropocop::cli {

namespace {

struct GenFlags {
  std::optional<std::string> config;
  std::optional<std::string> kind;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> gadget_count;
  std::optional<std::string> gadget_len;
  std::optional<std::uint32_t> prelude_gadgets;
  std::optional<std::uint32_t> padding_gadget_len;
  std::optional<std::uint32_t> padding_every;
  std::optional<std::uint64_t> block_count;
  std::optional<std::string> block_len;
  std::optional<std::uint32_t> max_run;
  std::optional<std::string> min_avg;
  std::optional<std::uint32_t> alloc_every;
  std::optional<std::uint32_t> prologue_blocks;
  std::optional<std::uint32_t> shellcode_blocks;
  std::optional<std::string> layout;
  std::optional<std::string> growth;
  std::optional<std::uint32_t> probe_period;
  std::string out;
};

synth::GenSpec spec_from_flags(const GenFlags& f) {
  std::optional<synth::Kind> kind;
  if (f.kind) {
    kind = synth::kind_from_string(*f.kind);
    if (!kind) throw std::invalid_argument("unknown --kind '" + *f.kind + "'");
  }
  synth::GenSpec spec;
  if (f.config) {
    spec = synth::gen_spec_from(ConfigDocument::load(*f.config));
    if (kind && *kind != spec.kind) {
      throw std::invalid_argument("--kind conflicts with the [gen] kind in " + *f.config);
    }
  } else if (kind) {
    spec = synth::default_spec(*kind);
  } else {
    throw std::invalid_argument("gen needs --kind or --config");
  }
  synth::GenParams& p = spec.params;
  if (f.seed) spec.seed = *f.seed;
  if (f.gadget_count) p.gadget_count = *f.gadget_count;
  if (f.gadget_len) p.gadget_len = synth::LengthDist::parse(*f.gadget_len);
  if (f.prelude_gadgets) p.prelude_gadgets = *f.prelude_gadgets;
  if (f.padding_gadget_len) p.padding_gadget_len = *f.padding_gadget_len;
  if (f.padding_every) p.padding_every = *f.padding_every;
  if (f.block_count) p.block_count = *f.block_count;
  if (f.block_len) p.block_len = synth::LengthDist::parse(*f.block_len);
  if (f.max_run) p.max_run = *f.max_run;
  if (f.min_avg) p.min_avg = Ratio::parse(*f.min_avg);
  if (f.alloc_every) p.alloc_every = *f.alloc_every;
  if (f.prologue_blocks) p.prologue_blocks = *f.prologue_blocks;
  if (f.shellcode_blocks) p.shellcode_blocks = *f.shellcode_blocks;
  if (f.layout) {
    auto l = synth::layout_from_string(*f.layout);
    if (!l) throw std::invalid_argument("--layout must be well-behaved or adversarial");
    p.layout = *l;
  }
  if (f.growth) p.growth = Ratio::parse(*f.growth);
  if (f.probe_period) p.probe_period = *f.probe_period;
  return spec;
}

} // namespace

int run(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Code-reuse attack detection over execution traces", "ropocop"};
  app.require_subcommand(1);

  AnalyzeArgs analyze;
  auto* analyze_cmd = app.add_subcommand("analyze", "Run the detectors over a trace and emit a JSON report");
  analyze_cmd->add_option("--trace", analyze.trace, "Trace file (.rtrc)")->required();
  analyze_cmd->add_option("--config", analyze.config, "Config file (falls back to $ROPOCOP_CONFIG)");
  analyze_cmd->add_option("--detectors", analyze.detectors, "Comma-separated subset of anticra,depplus")
      ->capture_default_str();
  analyze_cmd->add_option("--depplus-mode", analyze.depplus_mode, "full or watermark");
  analyze_cmd->add_flag("--fail-fast", analyze.fail_fast, "Stop at the first alarm");
  analyze_cmd->add_option("--out", analyze.out, "Write the report here instead of stdout");

  LearnArgs learn;
  auto* learn_cmd = app.add_subcommand("learn", "Derive per-program thresholds from benign traces");
  learn_cmd->add_option("--dir", learn.dir, "Directory of .rtrc traces")->required();
  learn_cmd->add_option("--program", learn.program, "Program name")->required();
  learn_cmd->add_option("--count-margin", learn.count_margin, "Added to the longest observed run")
      ->capture_default_str();
  learn_cmd->add_option("--avg-margin", learn.avg_margin, "Subtracted from the lowest observed average")
      ->capture_default_str();
  learn_cmd->add_option("--out", learn.out, "Profile path (default <program>.profile.toml)");

  GenFlags gen;
  auto* gen_cmd = app.add_subcommand("gen", "Synthesize a benign or attack trace");
  gen_cmd->add_option("--config", gen.config, "Config file with a [gen] section");
  gen_cmd->add_option("--kind", gen.kind,
                      "benign, pure-rop, pure-jop, two-staged, code-injection, nop-gadget-evasion");
  gen_cmd->add_option("--seed", gen.seed);
  gen_cmd->add_option("--gadget-count", gen.gadget_count);
  gen_cmd->add_option("--gadget-len", gen.gadget_len, "N, a,b,c cycle, or lo:hi");
  gen_cmd->add_option("--prelude-gadgets", gen.prelude_gadgets);
  gen_cmd->add_option("--padding-gadget-len", gen.padding_gadget_len);
  gen_cmd->add_option("--padding-every", gen.padding_every);
  gen_cmd->add_option("--block-count", gen.block_count);
  gen_cmd->add_option("--block-len", gen.block_len, "N, a,b,c cycle, or lo:hi");
  gen_cmd->add_option("--max-run", gen.max_run);
  gen_cmd->add_option("--min-avg", gen.min_avg);
  gen_cmd->add_option("--alloc-every", gen.alloc_every);
  gen_cmd->add_option("--prologue-blocks", gen.prologue_blocks);
  gen_cmd->add_option("--shellcode-blocks", gen.shellcode_blocks);
  gen_cmd->add_option("--layout", gen.layout, "well-behaved or adversarial");
  gen_cmd->add_option("--growth", gen.growth, "Adversarial allocation size relative to usage");
  gen_cmd->add_option("--probe-period", gen.probe_period);
  gen_cmd->add_option("--out", gen.out, "Output trace path")->required();

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "Classify the reference feature points and write a CSV");
  eval_cmd->add_option("--config", eval.config, "Config file (falls back to $ROPOCOP_CONFIG)");
  eval_cmd->add_option("--out", eval.out, "CSV output path")->required();

  std::vector<std::string> args(argv.begin() + (argv.empty() ? 0 : 1), argv.end());
  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitClean : kExitInputError;
  }

  if (*analyze_cmd) return cmd_analyze(analyze, out, err);
  if (*learn_cmd) return cmd_learn(learn, out, err);
  if (*gen_cmd) {
    synth::GenSpec spec;
    try {
      spec = spec_from_flags(gen);
    } catch (const std::exception& e) {
      err << "error: gen: " << e.what() << "\n";
      return kExitInputError;
    }
    return cmd_gen(spec, gen.out, out, err);
  }
  if (*eval_cmd) return cmd_eval(eval, out, err);
  return kExitInputError;
}

} // namespace ropocop::cli
