#include "ropocop/anticra.hpp"

#include <stdexcept>
#include <string>

namespace ropocop::anticra {

void Config::validate() const {
  auto fail = [](const std::string& what) { throw std::invalid_argument("anticra: " + what); };
  if (window == 0) fail("window must be positive");
  if (warmup == 0) fail("warmup must be positive");
  if (band1_max_count == 0 || band2_max_count == 0 || hard_cap == 0) fail("counts must be positive");
  if (warmup < window) fail("warmup must be at least window");
  if (band1_max_count >= band2_max_count) fail("band1_max_count must be below band2_max_count");
  if (band2_max_count > hard_cap) fail("band2_max_count must not exceed hard_cap");
  if (band1_max_avg > band2_max_avg) fail("band1_max_avg must not exceed band2_max_avg");
}

std::string_view to_string(Rule r) {
  switch (r) {
  case Rule::hard_cap:
    return "HardCap";
  case Rule::band1:
    return "Band1";
  case Rule::band2:
    return "Band2";
  }
  return "?";
}

std::string_view to_string(Classification c) {
  return c == Classification::malicious ? "malicious" : "benign";
}

RunState::RunState(std::uint32_t window) : lengths_(window == 0 ? 1 : window, 0) {}

void RunState::push(std::uint32_t instr_count) {
  const auto cap = static_cast<std::uint32_t>(lengths_.size());
  if (count_ == cap) {
    sum_ -= lengths_[head_];
  } else {
    ++count_;
  }
  lengths_[head_] = instr_count;
  sum_ += instr_count;
  head_ = (head_ + 1) % cap;
  ++consecutive_;
}

void RunState::reset() {
  head_ = 0;
  count_ = 0;
  sum_ = 0;
  consecutive_ = 0;
}

void RunFeatures::fold(const RunFeatures& other) {
  if (other.max_consecutive > max_consecutive) {
    max_consecutive = other.max_consecutive;
  }
  if (other.lowest_window_avg && (!lowest_window_avg || *other.lowest_window_avg < *lowest_window_avg)) {
    lowest_window_avg = other.lowest_window_avg;
  }
}

Verdict observe_block(RunState& state, const Config& cfg, const BlockExec& ev) {
  Verdict v;
  if (!is_indirect(ev.terminator)) {
    state.reset();
    return v;
  }
  state.push(ev.instr_count);
  const std::uint64_t c = state.consecutive();
  v.consecutive = c;

  const bool evaluated = c >= cfg.warmup;
  if (evaluated) {
    v.window_avg = Ratio(state.window_sum(), state.window_count());
  }

  if (c > cfg.hard_cap) {
    v.alarm = true;
    v.rule = Rule::hard_cap;
  } else if (evaluated && c <= cfg.band1_max_count &&
             average_at_most(state.window_sum(), state.window_count(), cfg.band1_max_avg)) {
    v.alarm = true;
    v.rule = Rule::band1;
  } else if (evaluated && c > cfg.band1_max_count && c <= cfg.band2_max_count &&
             average_at_most(state.window_sum(), state.window_count(), cfg.band2_max_avg)) {
    v.alarm = true;
    v.rule = Rule::band2;
  }
  return v;
}

Detector::Detector(Config cfg) : cfg_(cfg), state_(cfg.window) {
  cfg_.validate();
}

Verdict Detector::observe(const BlockExec& ev) {
  Verdict v = observe_block(state_, cfg_, ev);
  if (v.consecutive > features_.max_consecutive) {
    features_.max_consecutive = v.consecutive;
  }
  if (v.window_avg && (!features_.lowest_window_avg || *v.window_avg < *features_.lowest_window_avg)) {
    features_.lowest_window_avg = v.window_avg;
  }
  return v;
}

RunFeatures extract_features(std::span<const TraceEvent> events, const Config& cfg) {
  Detector detector(cfg);
  for (const auto& ev : events) {
    if (const auto* block = std::get_if<BlockExec>(&ev)) {
      detector.observe(*block);
    }
  }
  return detector.features();
}

std::optional<Rule> matching_rule(std::uint64_t count, const std::optional<Ratio>& avg, const Config& cfg) {
  if (count > cfg.hard_cap) {
    return Rule::hard_cap;
  }
  if (!avg) {
    return std::nullopt;
  }
  if (count >= cfg.warmup && count <= cfg.band1_max_count && *avg <= cfg.band1_max_avg) {
    return Rule::band1;
  }
  if (count > cfg.band1_max_count && count <= cfg.band2_max_count && *avg <= cfg.band2_max_avg) {
    return Rule::band2;
  }
  return std::nullopt;
}

Classification classify_feature_point(std::uint64_t count, const std::optional<Ratio>& avg, const Config& cfg) {
  return matching_rule(count, avg, cfg) ? Classification::malicious : Classification::benign;
}

} // namespace ropocop::anticra
