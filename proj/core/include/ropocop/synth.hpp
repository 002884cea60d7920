#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ropocop/anticra.hpp"
#include "ropocop/config.hpp"
#include "ropocop/ratio.hpp"
#include "ropocop/trace.hpp"

namespace ropocop::synth {

enum class Kind : std::uint8_t {
  benign,
  pure_rop,
  pure_jop,
  two_staged,
  code_injection,
  nop_gadget_evasion,
};

/// "benign", "pure-rop", "pure-jop", "two-staged", "code-injection", "nop-gadget-evasion"
std::string_view to_string(Kind k);
std::optional<Kind> kind_from_string(std::string_view s);

/// How data memory grows relative to the DEP+ usage probes.
enum class Layout : std::uint8_t {
  well_behaved, // small steps; data never outgrows the last probe x 1.3
  adversarial,  // one large allocation lands between two probes
};

std::string_view to_string(Layout l);
std::optional<Layout> layout_from_string(std::string_view s);

class SynthError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Deterministic source shared by all generators. Only the raw mt19937_64
/// stream is used, so output does not depend on the standard library's
/// distribution implementations.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  /// Uniform in [lo, hi].
  std::uint64_t uniform(std::uint64_t lo, std::uint64_t hi);
  bool chance(std::uint32_t percent) { return uniform(0, 99) < percent; }

private:
  std::mt19937_64 engine_;
};

/// Instruction-count distribution for gadgets or benign blocks.
class LengthDist {
public:
  enum class Shape : std::uint8_t { constant, cycle, uniform };

  static LengthDist constant(std::uint32_t n);
  static LengthDist cycle(std::vector<std::uint32_t> values);
  static LengthDist uniform(std::uint32_t lo, std::uint32_t hi);

  /// "3" (constant), "2,2,3" (cycle), "2:9" (uniform, inclusive).
  static LengthDist parse(std::string_view text);
  std::string to_string() const;

  /// i-th draw; cycles index by position, uniform consumes the rng.
  std::uint32_t draw(std::size_t i, Rng& rng) const;

  Shape shape() const { return shape_; }
  const std::vector<std::uint32_t>& values() const { return values_; }

  friend bool operator==(const LengthDist&, const LengthDist&) = default;

private:
  Shape shape_ = Shape::constant;
  std::vector<std::uint32_t> values_{1}; // constant: {n}; cycle: pattern; uniform: {lo, hi}
};

struct AddressLayout {
  Address image_base{0x60000000};
  std::uint32_t image_count = 6;
  std::uint32_t image_size = 0x00100000;
  std::uint32_t image_stride = 0x01000000;
  Address heap_base{0x00100000};
  std::uint32_t heap_initial = 0x00080000;
  Address stack_top{0x0012FF00};

  friend bool operator==(const AddressLayout&, const AddressLayout&) = default;
};

struct GenParams {
  /// Useful gadgets in the chain (pure-rop, pure-jop, nop-gadget-evasion).
  std::uint64_t gadget_count = 0;
  LengthDist gadget_len = LengthDist::constant(1);
  /// Return gadgets before the pivot (two-staged).
  std::uint32_t prelude_gadgets = 13;
  /// Padding gadget length and spacing (nop-gadget-evasion).
  std::uint32_t padding_gadget_len = 24;
  std::uint32_t padding_every = 2;

  /// Benign activity: number of blocks, block lengths, longest indirect run
  /// and the floor for every evaluated window average.
  std::uint64_t block_count = 2000;
  LengthDist block_len = LengthDist::uniform(2, 9);
  std::uint32_t max_run = 12;
  Ratio min_avg{3};
  /// Blocks between AllocCall/UsageReport pairs; 0 disables them.
  std::uint32_t alloc_every = 16;

  /// Benign blocks emitted before an attack.
  std::uint32_t prologue_blocks = 0;
  /// Injected-code blocks emitted after the pivot.
  std::uint32_t shellcode_blocks = 6;

  Layout layout = Layout::well_behaved;
  /// Adversarial layout: size of the unprobed allocation relative to current usage.
  Ratio growth{1};
  /// Probe cadence the generator assumes the detector uses.
  std::uint32_t probe_period = 10;

  std::uint32_t window = 10;
  std::uint32_t warmup = 15;

  AddressLayout addresses;

  friend bool operator==(const GenParams&, const GenParams&) = default;
};

struct GenSpec {
  Kind kind = Kind::benign;
  std::uint64_t seed = 0;
  GenParams params;

  friend bool operator==(const GenSpec&, const GenSpec&) = default;
};

/// Kind-specific defaults (gadget counts and lengths).
GenSpec default_spec(Kind kind, std::uint64_t seed = 0);

struct GeneratedTrace {
  std::vector<TraceEvent> events;
  /// Index of the first indirect branch whose target leaves the images.
  std::optional<std::size_t> pivot_index;
};

/// Pure function of `spec`. Throws SynthError on invalid or contradictory parameters.
GeneratedTrace generate(const GenSpec& spec);

/// Throws SynthError describing the first problem.
void validate(const GenSpec& spec);

/// Benign activity as a lazy event stream, for traces too large to hold.
class BenignStream {
public:
  BenignStream(const GenParams& params, std::uint64_t seed);

  std::optional<TraceEvent> next();

  std::uint64_t blocks_emitted() const { return blocks_; }
  std::uint64_t alloc_calls() const { return alloc_calls_; }
  Address heap_top() const { return heap_top_; }
  /// Address the last block transferred control to.
  Address pc() const { return pc_; }
  Rng& rng() { return rng_; }

  /// Random in-image address.
  Address image_address();
  /// Emits one AllocCall/UsageReport pair growing the heap by up to 2%.
  void queue_alloc_pair();
  /// Queues an AllocCall whose UsageReport grows the heap by `growth`.
  void queue_growth(const Ratio& growth);

private:
  void plan_block();
  std::uint32_t run_length(std::uint32_t drawn);

  GenParams params_;
  Rng rng_;
  std::deque<TraceEvent> pending_;
  std::uint64_t blocks_ = 0;
  std::uint64_t alloc_calls_ = 0;
  std::uint64_t run_left_ = 0;
  std::uint64_t run_pos_ = 0;
  bool in_run_ = false;
  bool first_run_ = true;
  std::deque<std::uint32_t> window_;
  std::uint64_t window_sum_ = 0;
  Address heap_top_;
  Address pc_;
};

/// Period-`window` cycle whose every full window averages to `avg`, rounded
/// up to the next multiple of 1/window.
std::vector<std::uint32_t> pattern_for_average(const Ratio& avg, std::uint32_t window = 10);

/// GenSpec from a [gen] section; missing keys use default_spec(kind).
GenSpec gen_spec_from(const ConfigDocument& doc);
std::string render_gen_section(const GenSpec& spec);

} // namespace ropocop::synth
