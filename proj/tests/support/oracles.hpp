#pragma once

// Reference implementations used only by tests. They recompute everything
// from the raw event list with arbitrary-precision rationals and linear
// scans, sharing no code path with the streaming detectors.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "ropocop/anticra.hpp"
#include "ropocop/trace.hpp"

namespace ropocop::oracle {

using BigRational = boost::multiprecision::cpp_rational;

inline BigRational big(const Ratio& r) {
  return BigRational(boost::multiprecision::cpp_int(r.num()), boost::multiprecision::cpp_int(r.den()));
}

inline BigRational window_average(const std::vector<std::uint32_t>& run, std::size_t window) {
  const std::size_t n = std::min(run.size(), window);
  boost::multiprecision::cpp_int sum = 0;
  for (std::size_t i = run.size() - n; i < run.size(); ++i) sum += run[i];
  return BigRational(sum, boost::multiprecision::cpp_int(n));
}

/// Rule fired at each BlockExec (nullopt = clean), re-deriving every run and
/// window from scratch.
inline std::vector<std::optional<anticra::Rule>> scripted_rule_table(const std::vector<BlockExec>& blocks,
                                                                     const anticra::Config& cfg) {
  std::vector<std::optional<anticra::Rule>> out;
  std::vector<std::uint32_t> run;
  for (const BlockExec& b : blocks) {
    const bool indirect = b.terminator == Terminator::ret || b.terminator == Terminator::indirect_call ||
                          b.terminator == Terminator::indirect_jump;
    if (!indirect) {
      run.clear();
      out.push_back(std::nullopt);
      continue;
    }
    run.push_back(b.instr_count);
    const std::uint64_t c = run.size();
    std::optional<anticra::Rule> fired;
    if (c > cfg.hard_cap) {
      fired = anticra::Rule::hard_cap;
    } else if (c >= cfg.warmup) {
      const BigRational avg = window_average(run, cfg.window);
      if (c <= cfg.band1_max_count && avg <= big(cfg.band1_max_avg)) {
        fired = anticra::Rule::band1;
      } else if (c > cfg.band1_max_count && c <= cfg.band2_max_count && avg <= big(cfg.band2_max_avg)) {
        fired = anticra::Rule::band2;
      }
    }
    out.push_back(fired);
  }
  return out;
}

struct BruteFeatures {
  std::uint64_t max_consecutive = 0;
  std::optional<BigRational> lowest;
};

/// O(n * window): every run, every evaluation point, window summed afresh.
inline BruteFeatures brute_force_features(const std::vector<BlockExec>& blocks, const anticra::Config& cfg) {
  BruteFeatures f;
  std::vector<std::uint32_t> run;
  for (const BlockExec& b : blocks) {
    if (!is_indirect(b.terminator)) {
      run.clear();
      continue;
    }
    run.push_back(b.instr_count);
    f.max_consecutive = std::max<std::uint64_t>(f.max_consecutive, run.size());
    if (run.size() >= cfg.warmup) {
      const BigRational avg = window_average(run, cfg.window);
      if (!f.lowest || avg < *f.lowest) f.lowest = avg;
    }
  }
  return f;
}

inline std::vector<BlockExec> blocks_of(const std::vector<TraceEvent>& events) {
  std::vector<BlockExec> out;
  for (const auto& ev : events) {
    if (const auto* b = std::get_if<BlockExec>(&ev)) out.push_back(*b);
  }
  return out;
}

/// Unsorted image list with linear containment, replayed from the events.
class LinearImageMap {
public:
  void apply(const TraceEvent& ev) {
    if (const auto* l = std::get_if<ImageLoad>(&ev)) {
      images_.push_back({l->start.value, l->end.value});
    } else if (const auto* u = std::get_if<ImageUnload>(&ev)) {
      for (std::size_t i = 0; i < images_.size(); ++i) {
        if (images_[i].first == u->start.value) {
          images_.erase(images_.begin() + static_cast<std::ptrdiff_t>(i));
          break;
        }
      }
    }
  }
  bool inside(std::uint64_t a) const {
    for (const auto& [s, e] : images_) {
      if (s <= a && a < e) return true;
    }
    return false;
  }

private:
  std::vector<std::pair<std::uint64_t, std::uint64_t>> images_;
};

/// Event indices whose indirect-branch target lies outside every image.
inline std::vector<std::size_t> non_image_targets(const std::vector<TraceEvent>& events) {
  LinearImageMap map;
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < events.size(); ++i) {
    map.apply(events[i]);
    if (const auto* b = std::get_if<BlockExec>(&events[i])) {
      if (is_indirect(b->terminator) && !map.inside(b->target.value)) out.push_back(i);
    }
  }
  return out;
}

} // namespace ropocop::oracle
