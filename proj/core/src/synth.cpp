#include "ropocop/synth.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <limits>
#include <sstream>

namespace ropocop::synth {

namespace {

constexpr std::array<std::string_view, 6> kKindNames = {
    "benign", "pure-rop", "pure-jop", "two-staged", "code-injection", "nop-gadget-evasion",
};

constexpr std::array<std::string_view, 8> kImageNames = {
    "app.exe", "ntdll.dll", "kernel32.dll", "user32.dll", "msvcrt.dll", "gdi32.dll", "advapi32.dll", "ole32.dll",
};

// The generator's model of the detector's usage multiplier.
const Ratio kAssumedSafetyFactor{13, 10};

std::uint32_t parse_u32(std::string_view s, std::string_view whole) {
  std::uint32_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw SynthError("invalid length distribution '" + std::string(whole) + "'");
  }
  return v;
}

__extension__ using u128 = unsigned __int128;

std::uint64_t ceil_mul(const Ratio& r, std::uint64_t n) {
  const u128 prod = static_cast<u128>(r.num()) * n;
  return static_cast<std::uint64_t>((prod + r.den() - 1) / r.den());
}

Terminator pick_indirect(Rng& rng) {
  const auto roll = rng.uniform(0, 9);
  if (roll < 5) return Terminator::ret;
  if (roll < 8) return Terminator::indirect_call;
  return Terminator::indirect_jump;
}

Terminator pick_direct(Rng& rng) {
  const auto roll = rng.uniform(0, 9);
  if (roll < 4) return Terminator::direct_branch;
  if (roll < 6) return Terminator::direct_call;
  return Terminator::fall_through;
}

} // namespace

std::string_view to_string(Kind k) {
  return kKindNames[static_cast<std::size_t>(k)];
}

std::optional<Kind> kind_from_string(std::string_view s) {
  for (std::size_t i = 0; i < kKindNames.size(); ++i) {
    if (kKindNames[i] == s) return static_cast<Kind>(i);
  }
  return std::nullopt;
}

std::string_view to_string(Layout l) {
  return l == Layout::adversarial ? "adversarial" : "well-behaved";
}

std::optional<Layout> layout_from_string(std::string_view s) {
  if (s == "well-behaved") return Layout::well_behaved;
  if (s == "adversarial") return Layout::adversarial;
  return std::nullopt;
}

std::uint64_t Rng::uniform(std::uint64_t lo, std::uint64_t hi) {
  constexpr auto kMax = std::numeric_limits<std::uint64_t>::max();
  if (hi <= lo) return lo;
  const std::uint64_t span = hi - lo;
  if (span == kMax) return next();
  const std::uint64_t n = span + 1;
  const std::uint64_t limit = kMax - (kMax % n + 1) % n;
  std::uint64_t x;
  do {
    x = next();
  } while (x > limit);
  return lo + x % n;
}

LengthDist LengthDist::constant(std::uint32_t n) {
  LengthDist d;
  d.shape_ = Shape::constant;
  d.values_ = {n};
  return d;
}

LengthDist LengthDist::cycle(std::vector<std::uint32_t> values) {
  if (values.empty()) {
    throw SynthError("empty length cycle");
  }
  LengthDist d;
  d.shape_ = Shape::cycle;
  d.values_ = std::move(values);
  return d;
}

LengthDist LengthDist::uniform(std::uint32_t lo, std::uint32_t hi) {
  if (lo > hi) {
    throw SynthError("uniform length range with lo > hi");
  }
  LengthDist d;
  d.shape_ = Shape::uniform;
  d.values_ = {lo, hi};
  return d;
}

LengthDist LengthDist::parse(std::string_view text) {
  if (auto colon = text.find(':'); colon != std::string_view::npos) {
    return uniform(parse_u32(text.substr(0, colon), text), parse_u32(text.substr(colon + 1), text));
  }
  if (text.find(',') != std::string_view::npos) {
    std::vector<std::uint32_t> values;
    std::size_t pos = 0;
    while (pos <= text.size()) {
      auto comma = text.find(',', pos);
      if (comma == std::string_view::npos) comma = text.size();
      values.push_back(parse_u32(text.substr(pos, comma - pos), text));
      pos = comma + 1;
    }
    return cycle(std::move(values));
  }
  return constant(parse_u32(text, text));
}

std::string LengthDist::to_string() const {
  switch (shape_) {
  case Shape::constant:
    return std::to_string(values_[0]);
  case Shape::uniform:
    return std::to_string(values_[0]) + ":" + std::to_string(values_[1]);
  case Shape::cycle: {
    std::string out;
    for (std::size_t i = 0; i < values_.size(); ++i) {
      if (i) out += ',';
      out += std::to_string(values_[i]);
    }
    return out;
  }
  }
  return {};
}

std::uint32_t LengthDist::draw(std::size_t i, Rng& rng) const {
  switch (shape_) {
  case Shape::constant:
    return values_[0];
  case Shape::cycle:
    return values_[i % values_.size()];
  case Shape::uniform:
    return static_cast<std::uint32_t>(rng.uniform(values_[0], values_[1]));
  }
  return 1;
}

namespace {

bool any_zero(const LengthDist& d) {
  return std::find(d.values().begin(), d.values().end(), 0U) != d.values().end();
}

} // namespace

void validate(const GenSpec& spec) {
  const GenParams& p = spec.params;
  const AddressLayout& a = p.addresses;
  if (p.window == 0 || p.warmup < p.window) {
    throw SynthError("window must be positive and not exceed warmup");
  }
  if (p.min_avg < Ratio(1)) {
    throw SynthError("contradictory benign targets: window average below 1 instruction per block");
  }
  if (any_zero(p.block_len) || any_zero(p.gadget_len)) {
    throw SynthError("block and gadget lengths must be at least 1");
  }
  if (p.probe_period == 0) {
    throw SynthError("probe_period must be positive");
  }
  if (a.image_count == 0 || a.image_size < 0x100 || a.image_size > a.image_stride) {
    throw SynthError("image layout needs at least one image of 256 bytes or more, no larger than the stride");
  }
  const std::uint64_t images_end =
      a.image_base.value + static_cast<std::uint64_t>(a.image_count - 1) * a.image_stride + a.image_size;
  if (images_end > kMaxAddress) {
    throw SynthError("image layout exceeds the 32-bit address space");
  }
  if (a.heap_initial == 0 || a.heap_base.value + a.heap_initial >= a.image_base.value ||
      a.stack_top.value >= a.image_base.value || a.stack_top.value < 0x1000) {
    throw SynthError("stack and heap must lie below the images");
  }
  switch (spec.kind) {
  case Kind::pure_rop:
  case Kind::pure_jop:
    if (p.gadget_count == 0) throw SynthError("gadget_count must be positive");
    break;
  case Kind::nop_gadget_evasion:
    if (p.gadget_count == 0) throw SynthError("gadget_count must be positive");
    if (p.padding_every == 0 || p.padding_gadget_len == 0) {
      throw SynthError("padding_every and padding_gadget_len must be positive");
    }
    break;
  case Kind::two_staged:
    if (p.layout == Layout::adversarial && p.growth <= Ratio(3, 10)) {
      throw SynthError("adversarial growth must exceed the 30% safety margin");
    }
    break;
  case Kind::benign:
  case Kind::code_injection:
    break;
  }
}

GenSpec default_spec(Kind kind, std::uint64_t seed) {
  GenSpec spec;
  spec.kind = kind;
  spec.seed = seed;
  GenParams& p = spec.params;
  switch (kind) {
  case Kind::pure_rop:
    // One single-instruction `ret` gadget repeated 9,344 times.
    p.gadget_count = 9344;
    p.gadget_len = LengthDist::constant(1);
    break;
  case Kind::pure_jop:
    p.gadget_count = 40;
    p.gadget_len = LengthDist::cycle({2, 2, 2, 2, 3});
    break;
  case Kind::two_staged:
    p.gadget_len = LengthDist::cycle({2, 2, 2, 2, 3});
    break;
  case Kind::nop_gadget_evasion:
    p.gadget_count = 30;
    p.gadget_len = LengthDist::constant(1);
    break;
  case Kind::benign:
  case Kind::code_injection:
    break;
  }
  return spec;
}

BenignStream::BenignStream(const GenParams& params, std::uint64_t seed)
    : params_(params),
      rng_(seed),
      heap_top_{params.addresses.heap_base.value + params.addresses.heap_initial},
      pc_{params.addresses.image_base.value + params.addresses.image_size / 16} {
  const AddressLayout& a = params_.addresses;
  for (std::uint32_t i = 0; i < a.image_count; ++i) {
    ImageLoad load;
    load.name = i < kImageNames.size() ? std::string(kImageNames[i]) : "lib" + std::to_string(i) + ".dll";
    load.start = Address{a.image_base.value + static_cast<std::uint64_t>(i) * a.image_stride};
    load.end = Address{load.start.value + a.image_size};
    pending_.push_back(std::move(load));
  }
}

Address BenignStream::image_address() {
  const AddressLayout& a = params_.addresses;
  const auto image = rng_.uniform(0, a.image_count - 1);
  const auto offset = rng_.uniform(0, a.image_size - 1);
  return Address{a.image_base.value + image * a.image_stride + offset};
}

void BenignStream::queue_alloc_pair() {
  ++alloc_calls_;
  pending_.emplace_back(AllocCall{});
  const std::uint64_t cap = params_.addresses.image_base.value / 2;
  if (heap_top_.value < cap) {
    heap_top_.value = std::min(cap, heap_top_.value + rng_.uniform(0, heap_top_.value / 50));
  }
  pending_.emplace_back(UsageReport{heap_top_});
}

void BenignStream::queue_growth(const Ratio& growth) {
  ++alloc_calls_;
  pending_.emplace_back(AllocCall{});
  const std::uint64_t step = scale_floor(heap_top_.value, growth, kMaxAddress);
  heap_top_.value = std::min(params_.addresses.image_base.value - 1, heap_top_.value + step);
  pending_.emplace_back(UsageReport{heap_top_});
}

std::optional<TraceEvent> BenignStream::next() {
  while (pending_.empty()) {
    if (blocks_ >= params_.block_count) {
      return std::nullopt;
    }
    plan_block();
  }
  TraceEvent ev = std::move(pending_.front());
  pending_.pop_front();
  return ev;
}

std::uint32_t BenignStream::run_length(std::uint32_t drawn) {
  const std::uint64_t c = run_pos_ + 1;
  std::uint64_t len = drawn;
  if (window_.size() == params_.window) {
    window_sum_ -= window_.front();
    window_.pop_front();
  }
  if (c >= params_.warmup) {
    const std::uint64_t needed = ceil_mul(params_.min_avg, params_.window);
    if (window_sum_ + len < needed) {
      len = needed - window_sum_;
    }
  }
  const auto out = static_cast<std::uint32_t>(std::min<std::uint64_t>(len, std::numeric_limits<std::uint32_t>::max()));
  window_.push_back(out);
  window_sum_ += out;
  return out;
}

void BenignStream::plan_block() {
  if (params_.alloc_every != 0 && blocks_ > 0 && blocks_ % params_.alloc_every == 0) {
    queue_alloc_pair();
  }

  if (!in_run_) {
    std::uint64_t r = 0;
    if (params_.max_run > 0) {
      if (first_run_) {
        r = params_.max_run;
      } else if (rng_.chance(20)) {
        r = rng_.uniform(0, params_.max_run);
      } else {
        r = rng_.uniform(0, std::min<std::uint32_t>(params_.max_run, 3));
      }
    }
    first_run_ = false;
    if (r > 0) {
      in_run_ = true;
      run_left_ = r;
      run_pos_ = 0;
      window_.clear();
      window_sum_ = 0;
    }
  }

  BlockExec b;
  b.start = pc_;
  const std::uint32_t drawn = params_.block_len.draw(blocks_, rng_);
  if (in_run_ && run_left_ > 0) {
    b.instr_count = run_length(drawn);
    b.terminator = pick_indirect(rng_);
    b.target = image_address();
    --run_left_;
    ++run_pos_;
  } else {
    b.instr_count = drawn;
    b.terminator = pick_direct(rng_);
    in_run_ = false;
    if (b.terminator == Terminator::fall_through) {
      const AddressLayout& a = params_.addresses;
      const std::uint64_t next = b.start.value + 4ULL * b.instr_count;
      const std::uint64_t rel = b.start.value - a.image_base.value;
      const std::uint64_t image_start = a.image_base.value + (rel / a.image_stride) * a.image_stride;
      b.target = next < image_start + a.image_size ? Address{next} : image_address();
    } else {
      b.target = image_address();
    }
  }
  pc_ = b.target;
  ++blocks_;
  pending_.emplace_back(b);
}

std::vector<std::uint32_t> pattern_for_average(const Ratio& avg, std::uint32_t window) {
  if (window == 0) {
    throw SynthError("window must be positive");
  }
  std::uint64_t total = ceil_mul(avg, window);
  if (total < window) total = window;
  const std::uint64_t base = total / window;
  const std::uint64_t extra = total % window;
  std::vector<std::uint32_t> out(window, static_cast<std::uint32_t>(base));
  // Spread the longer blocks evenly across the period.
  for (std::uint64_t k = 0; k < extra; ++k) {
    out[static_cast<std::size_t>((k * window) / extra)] += 1;
  }
  return out;
}

namespace {

class TraceBuilder {
public:
  explicit TraceBuilder(const GenSpec& spec) : spec_(spec), stream_(prologue_params(spec), spec.seed) {}

  GeneratedTrace build() {
    drain();
    reset_run_after_prologue();
    switch (spec_.kind) {
    case Kind::pure_rop:
      chain(draw_lengths(p().gadget_count), Terminator::ret, std::nullopt);
      break;
    case Kind::pure_jop:
      chain(draw_lengths(p().gadget_count), Terminator::indirect_jump, std::nullopt);
      break;
    case Kind::nop_gadget_evasion:
      chain(padded_lengths(), Terminator::ret, std::nullopt);
      break;
    case Kind::two_staged:
      two_staged();
      break;
    case Kind::code_injection:
      code_injection();
      break;
    case Kind::benign:
      break;
    }
    return std::move(out_);
  }

private:
  static GenParams prologue_params(const GenSpec& spec) {
    GenParams pp = spec.params;
    if (spec.kind != Kind::benign) {
      pp.block_count = spec.params.prologue_blocks;
    }
    return pp;
  }

  const GenParams& p() const { return spec_.params; }

  void drain() {
    while (auto ev = stream_.next()) {
      out_.events.push_back(std::move(*ev));
    }
  }

  void push_block(Address start, std::uint32_t n, Terminator t, Address target) {
    out_.events.emplace_back(BlockExec{start, n, t, target});
  }

  void reset_run_after_prologue() {
    for (auto it = out_.events.rbegin(); it != out_.events.rend(); ++it) {
      if (const auto* b = std::get_if<BlockExec>(&*it)) {
        if (is_indirect(b->terminator)) {
          push_block(stream_.pc(), 2, Terminator::direct_branch, stream_.image_address());
        }
        return;
      }
    }
  }

  std::vector<std::uint32_t> draw_lengths(std::uint64_t n) {
    std::vector<std::uint32_t> lengths;
    lengths.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) {
      lengths.push_back(p().gadget_len.draw(i, stream_.rng()));
    }
    return lengths;
  }

  std::vector<std::uint32_t> padded_lengths() {
    std::vector<std::uint32_t> lengths;
    for (std::uint64_t i = 0; i < p().gadget_count; ++i) {
      lengths.push_back(p().gadget_len.draw(i, stream_.rng()));
      if ((i + 1) % p().padding_every == 0 && i + 1 < p().gadget_count) {
        lengths.push_back(p().padding_gadget_len);
      }
    }
    return lengths;
  }

  // Gadgets at random image addresses, each transferring into the next one.
  void chain(const std::vector<std::uint32_t>& lengths, Terminator t, std::optional<Address> final_target) {
    Address start = stream_.image_address();
    for (std::size_t i = 0; i < lengths.size(); ++i) {
      const bool last = i + 1 == lengths.size();
      const Address target = last && final_target ? *final_target : stream_.image_address();
      push_block(start, lengths[i], t, target);
      start = target;
    }
  }

  Address heap_target() {
    BenignStream& s = stream_;
    if (p().layout == Layout::adversarial) {
      while (s.alloc_calls() == 0 || s.alloc_calls() % p().probe_period != 0) {
        s.queue_alloc_pair();
      }
      drain();
      const std::uint64_t watermark = scale_floor(s.heap_top().value, kAssumedSafetyFactor, kMaxAddress);
      s.queue_growth(p().growth);
      drain();
      const std::uint64_t top = s.heap_top().value;
      if (top <= watermark + 0x10) {
        throw SynthError("adversarial allocation does not outgrow the probed watermark");
      }
      // Aligned address strictly above the estimate, inside the new allocation.
      return Address{(watermark + 0x10 + (top - watermark - 0x10) / 2) & ~0xfULL};
    }
    const std::uint64_t lo = p().addresses.heap_base.value;
    const std::uint64_t hi = s.heap_top().value;
    return Address{s.rng().uniform(lo, hi - 1) & ~0xfULL};
  }

  void shellcode(Address entry) {
    Address pc = entry;
    for (std::uint32_t i = 0; i < p().shellcode_blocks; ++i) {
      const auto n = static_cast<std::uint32_t>(stream_.rng().uniform(1, 6));
      const Terminator t = (i % 3 == 2) ? Terminator::direct_branch : Terminator::fall_through;
      const Address next{pc.value + 2ULL * n};
      push_block(pc, n, t, next);
      pc = next;
    }
  }

  void two_staged() {
    const Address target = heap_target();
    auto lengths = draw_lengths(p().prelude_gadgets + 1ULL);
    const std::uint32_t pivot_len = lengths.back();
    lengths.pop_back();
    const Address pivot_start = stream_.image_address();
    if (!lengths.empty()) {
      chain(lengths, Terminator::ret, pivot_start);
    }
    out_.pivot_index = out_.events.size();
    push_block(pivot_start, pivot_len, Terminator::ret, target);
    shellcode(target);
  }

  void code_injection() {
    const Address function = stream_.image_address();
    push_block(stream_.pc(), 3, Terminator::direct_call, function);
    const Address copy_loop{function.value + 12};
    push_block(function, 3, Terminator::fall_through, copy_loop);
    const Address epilogue{copy_loop.value + 16};
    push_block(copy_loop, 4, Terminator::direct_branch, epilogue);

    const std::uint64_t stack = p().addresses.stack_top.value;
    const Address smashed{(stack - stream_.rng().uniform(0x40, 0x400)) & ~0x3ULL};
    out_.pivot_index = out_.events.size();
    push_block(epilogue, 2, Terminator::ret, smashed);
    shellcode(smashed);
  }

  const GenSpec& spec_;
  BenignStream stream_;
  GeneratedTrace out_;
};

} // namespace

GeneratedTrace generate(const GenSpec& spec) {
  validate(spec);
  return TraceBuilder(spec).build();
}

GenSpec gen_spec_from(const ConfigDocument& doc) {
  doc.require_known_keys("gen", {"kind", "seed", "gadget_count", "gadget_len", "prelude_gadgets",
                                 "padding_gadget_len", "padding_every", "block_count", "block_len", "max_run",
                                 "min_avg", "alloc_every", "prologue_blocks", "shellcode_blocks", "layout",
                                 "growth", "probe_period", "image_base", "image_count", "image_size",
                                 "image_stride", "heap_base", "stack_top"});
  Kind kind = Kind::benign;
  if (auto k = doc.get("gen", "kind")) {
    auto parsed = kind_from_string(*k);
    if (!parsed) throw ConfigError("gen.kind", "unknown kind '" + *k + "'");
    kind = *parsed;
  }
  GenSpec spec = default_spec(kind, get_uint(doc, "gen", "seed").value_or(0));
  GenParams& p = spec.params;

  auto u32 = [&](const char* key, std::uint32_t& out) {
    if (auto v = get_uint(doc, "gen", key)) {
      if (*v > 0xffffffffULL) throw ConfigError(std::string("gen.") + key, "value out of range");
      out = static_cast<std::uint32_t>(*v);
    }
  };
  auto dist = [&](const char* key, LengthDist& out) {
    if (auto v = doc.get("gen", key)) {
      try {
        out = LengthDist::parse(*v);
      } catch (const std::exception& e) {
        throw ConfigError(std::string("gen.") + key, e.what());
      }
    }
  };
  auto addr = [&](const char* key, Address& out) {
    if (auto v = doc.get("gen", key)) {
      try {
        out = parse_hex(*v);
      } catch (const std::exception& e) {
        throw ConfigError(std::string("gen.") + key, e.what());
      }
    }
  };

  if (auto v = get_uint(doc, "gen", "gadget_count")) p.gadget_count = *v;
  if (auto v = get_uint(doc, "gen", "block_count")) p.block_count = *v;
  dist("gadget_len", p.gadget_len);
  dist("block_len", p.block_len);
  u32("prelude_gadgets", p.prelude_gadgets);
  u32("padding_gadget_len", p.padding_gadget_len);
  u32("padding_every", p.padding_every);
  u32("max_run", p.max_run);
  u32("alloc_every", p.alloc_every);
  u32("prologue_blocks", p.prologue_blocks);
  u32("shellcode_blocks", p.shellcode_blocks);
  u32("probe_period", p.probe_period);
  u32("image_count", p.addresses.image_count);
  u32("image_size", p.addresses.image_size);
  u32("image_stride", p.addresses.image_stride);
  if (auto r = get_ratio(doc, "gen", "min_avg")) p.min_avg = *r;
  if (auto r = get_ratio(doc, "gen", "growth")) p.growth = *r;
  if (auto l = doc.get("gen", "layout")) {
    auto parsed = layout_from_string(*l);
    if (!parsed) throw ConfigError("gen.layout", "expected \"well-behaved\" or \"adversarial\", got '" + *l + "'");
    p.layout = *parsed;
  }
  addr("image_base", p.addresses.image_base);
  addr("heap_base", p.addresses.heap_base);
  addr("stack_top", p.addresses.stack_top);
  return spec;
}

std::string render_gen_section(const GenSpec& spec) {
  const GenParams& p = spec.params;
  std::ostringstream out;
  out << "[gen]\n"
      << "kind = " << quote_config_string(to_string(spec.kind)) << "\n"
      << "seed = " << spec.seed << "\n"
      << "gadget_count = " << p.gadget_count << "\n"
      << "gadget_len = " << quote_config_string(p.gadget_len.to_string()) << "\n"
      << "prelude_gadgets = " << p.prelude_gadgets << "\n"
      << "padding_gadget_len = " << p.padding_gadget_len << "\n"
      << "padding_every = " << p.padding_every << "\n"
      << "block_count = " << p.block_count << "\n"
      << "block_len = " << quote_config_string(p.block_len.to_string()) << "\n"
      << "max_run = " << p.max_run << "\n"
      << "min_avg = " << quote_config_string(p.min_avg.to_string()) << "\n"
      << "alloc_every = " << p.alloc_every << "\n"
      << "prologue_blocks = " << p.prologue_blocks << "\n"
      << "shellcode_blocks = " << p.shellcode_blocks << "\n"
      << "layout = " << quote_config_string(to_string(p.layout)) << "\n"
      << "growth = " << quote_config_string(p.growth.to_string()) << "\n"
      << "probe_period = " << p.probe_period << "\n"
      << "image_base = " << quote_config_string(to_hex(p.addresses.image_base)) << "\n"
      << "image_count = " << p.addresses.image_count << "\n"
      << "image_size = " << p.addresses.image_size << "\n"
      << "image_stride = " << p.addresses.image_stride << "\n"
      << "heap_base = " << quote_config_string(to_hex(p.addresses.heap_base)) << "\n"
      << "stack_top = " << quote_config_string(to_hex(p.addresses.stack_top)) << "\n";
  return out.str();
}

} // namespace ropocop::synth
