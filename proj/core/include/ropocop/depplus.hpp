#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ropocop/ratio.hpp"
#include "ropocop/trace.hpp"

namespace ropocop::depplus {

enum class Mode : std::uint8_t {
  full_scan, // exact containment check against every loaded image
  watermark, // skip targets above the data watermark, scan only low images
};

/// "full" / "watermark"
std::string_view to_string(Mode m);
std::optional<Mode> mode_from_string(std::string_view s);

struct Config {
  Mode mode = Mode::full_scan;
  std::uint32_t probe_period = 10;
  Ratio safety_factor{13, 10};

  void validate() const;

  friend bool operator==(const Config&, const Config&) = default;
};

struct Region {
  std::string name;
  Address start;
  Address end; // exclusive

  bool contains(Address a) const { return start <= a && a < end; }

  friend bool operator==(const Region&, const Region&) = default;
};

enum class Outcome : std::uint8_t { allowed, alarm };

struct Verdict {
  Outcome outcome = Outcome::allowed;
  Address target;
  Mode mode = Mode::full_scan;
  std::size_t scanned_regions = 0;

  bool alarm() const { return outcome == Outcome::alarm; }
};

class MapError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Loaded images sorted by start address, plus the data-space watermark
/// fed by periodic memory-usage probes.
class ImageMap {
public:
  explicit ImageMap(std::uint32_t probe_period = 10, Ratio safety_factor = Ratio(13, 10));

  /// Throws MapError if the image overlaps an existing region.
  void load(const ImageLoad& ev);
  /// Throws MapError if no region starts at ev.start.
  void unload(const ImageUnload& ev);

  /// Counts the call; every probe_period-th call arms a probe.
  void on_alloc_event(const AllocCall& ev);
  /// Consumed into the watermark only when a probe is armed.
  void on_alloc_event(const UsageReport& ev);

  Verdict check_target(Address target, Mode mode) const;

  std::span<const Region> regions() const { return regions_; }
  /// Before the first probe the watermark covers the whole address space.
  Address watermark() const { return watermark_; }
  std::uint64_t alloc_event_counter() const { return alloc_counter_; }
  bool probe_armed() const { return probe_armed_; }
  std::uint32_t probe_period() const { return probe_period_; }
  const Ratio& safety_factor() const { return safety_factor_; }

  /// Number of regions whose start is at or below the watermark.
  std::size_t regions_below_watermark() const;

  std::size_t footprint_bytes() const;

private:
  std::vector<Region> regions_;
  Address watermark_{kMaxAddress};
  std::uint64_t alloc_counter_ = 0;
  std::uint32_t probe_period_;
  Ratio safety_factor_;
  bool probe_armed_ = false;
};

/// Stream consumer: maintains the image map and checks every indirect branch.
class Detector {
public:
  explicit Detector(Config cfg = {});

  /// Verdict for indirect-branch blocks, nullopt for every other event.
  std::optional<Verdict> observe(const TraceEvent& ev);

  const ImageMap& map() const { return map_; }
  const Config& config() const { return cfg_; }
  std::size_t footprint_bytes() const { return sizeof(*this) - sizeof(ImageMap) + map_.footprint_bytes(); }

private:
  Config cfg_;
  ImageMap map_;
};

} // namespace ropocop::depplus
