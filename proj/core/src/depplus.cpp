#include "ropocop/depplus.hpp"

#include <algorithm>

namespace ropocop::depplus {

std::string_view to_string(Mode m) {
  return m == Mode::watermark ? "watermark" : "full";
}

std::optional<Mode> mode_from_string(std::string_view s) {
  if (s == "full") return Mode::full_scan;
  if (s == "watermark") return Mode::watermark;
  return std::nullopt;
}

void Config::validate() const {
  if (probe_period == 0) {
    throw std::invalid_argument("depplus: probe_period must be positive");
  }
}

namespace {

std::string describe(const std::string& name, Address start, Address end) {
  return "'" + name + "' [" + to_hex(start) + ", " + to_hex(end) + ")";
}

} // namespace

ImageMap::ImageMap(std::uint32_t probe_period, Ratio safety_factor)
    : probe_period_(probe_period == 0 ? 1 : probe_period), safety_factor_(safety_factor) {}

void ImageMap::load(const ImageLoad& ev) {
  auto pos = std::lower_bound(regions_.begin(), regions_.end(), ev.start,
                              [](const Region& r, Address a) { return r.start < a; });
  if (pos != regions_.end() && pos->start < ev.end) {
    throw MapError("image " + describe(ev.name, ev.start, ev.end) + " overlaps " +
                   describe(pos->name, pos->start, pos->end));
  }
  if (pos != regions_.begin()) {
    const Region& prev = *std::prev(pos);
    if (ev.start < prev.end) {
      throw MapError("image " + describe(ev.name, ev.start, ev.end) + " overlaps " +
                     describe(prev.name, prev.start, prev.end));
    }
  }
  regions_.insert(pos, Region{ev.name, ev.start, ev.end});
}

void ImageMap::unload(const ImageUnload& ev) {
  auto pos = std::lower_bound(regions_.begin(), regions_.end(), ev.start,
                              [](const Region& r, Address a) { return r.start < a; });
  if (pos == regions_.end() || pos->start != ev.start) {
    throw MapError("unload of unknown image '" + ev.name + "' at " + to_hex(ev.start));
  }
  regions_.erase(pos);
}

void ImageMap::on_alloc_event(const AllocCall&) {
  ++alloc_counter_;
  if (alloc_counter_ % probe_period_ == 0) {
    probe_armed_ = true;
  }
}

void ImageMap::on_alloc_event(const UsageReport& ev) {
  if (!probe_armed_) {
    return;
  }
  probe_armed_ = false;
  watermark_ = Address{scale_floor(ev.top.value, safety_factor_, kMaxAddress)};
}

Verdict ImageMap::check_target(Address target, Mode mode) const {
  Verdict v;
  v.target = target;
  v.mode = mode;

  if (mode == Mode::full_scan) {
    std::size_t lo = 0;
    std::size_t hi = regions_.size();
    while (lo < hi) {
      const std::size_t mid = lo + (hi - lo) / 2;
      ++v.scanned_regions;
      if (regions_[mid].start <= target) {
        lo = mid + 1;
      } else {
        hi = mid;
      }
    }
    // lo moves only past probed regions, so regions_[lo - 1] was examined.
    const bool inside = lo > 0 && regions_[lo - 1].contains(target);
    v.outcome = inside ? Outcome::allowed : Outcome::alarm;
    return v;
  }

  if (target > watermark_) {
    v.outcome = Outcome::allowed;
    return v;
  }
  v.outcome = Outcome::alarm;
  for (const Region& r : regions_) {
    if (r.start > watermark_ || r.start > target) {
      break;
    }
    ++v.scanned_regions;
    if (r.contains(target)) {
      v.outcome = Outcome::allowed;
      break;
    }
  }
  return v;
}

std::size_t ImageMap::regions_below_watermark() const {
  return static_cast<std::size_t>(std::count_if(regions_.begin(), regions_.end(),
                                                [&](const Region& r) { return r.start <= watermark_; }));
}

std::size_t ImageMap::footprint_bytes() const {
  std::size_t bytes = sizeof(*this) + regions_.capacity() * sizeof(Region);
  for (const Region& r : regions_) {
    if (r.name.capacity() > 15) { // beyond the small-string buffer
      bytes += r.name.capacity() + 1;
    }
  }
  return bytes;
}

Detector::Detector(Config cfg) : cfg_(cfg), map_(cfg.probe_period, cfg.safety_factor) {
  cfg_.validate();
}

std::optional<Verdict> Detector::observe(const TraceEvent& ev) {
  struct Visitor {
    Detector& self;
    std::optional<Verdict> operator()(const BlockExec& b) const {
      if (!is_indirect(b.terminator)) {
        return std::nullopt;
      }
      return self.map_.check_target(b.target, self.cfg_.mode);
    }
    std::optional<Verdict> operator()(const ImageLoad& l) const {
      self.map_.load(l);
      return std::nullopt;
    }
    std::optional<Verdict> operator()(const ImageUnload& u) const {
      self.map_.unload(u);
      return std::nullopt;
    }
    std::optional<Verdict> operator()(const AllocCall& a) const {
      self.map_.on_alloc_event(a);
      return std::nullopt;
    }
    std::optional<Verdict> operator()(const UsageReport& r) const {
      self.map_.on_alloc_event(r);
      return std::nullopt;
    }
  };
  return std::visit(Visitor{*this}, ev);
}

} // namespace ropocop::depplus
