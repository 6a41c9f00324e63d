#include "hawkes/thinning.hpp"

#include <algorithm>
#include <cmath>

namespace hawkes {

RegionMap RegionMap::uniform(double rate) {
  RegionMap m;
  m.default_rate = rate;
  return m;
}

namespace {

bool rects_overlap(const Rect& a, const Rect& b) {
  // Positive-area intersection; touching edges do not count.
  double w = std::min(a.x1, b.x1) - std::max(a.x0, b.x0);
  double h = std::min(a.y1, b.y1) - std::max(a.y0, b.y0);
  return w > 0.0 && h > 0.0;
}

}  // namespace

void RegionMap::validate() const {
  auto check_rate = [](double r, const std::string& where) {
    if (!(r >= 0.0 && r <= 1.0))
      throw ConfigError("RegionMap: rate outside [0,1] in " + where);
  };
  check_rate(default_rate, "default_rate");
  for (const auto& reg : regions) {
    if (reg.rects.empty()) throw ConfigError("RegionMap: region '" + reg.name + "' has no rects");
    check_rate(reg.reporting_rate, "region '" + reg.name + "'");
    if (reg.retention_base && !(*reg.retention_base >= 0.0))
      throw ConfigError("RegionMap: negative retention base in region '" + reg.name + "'");
    for (const auto& r : reg.rects)
      if (!(r.x1 >= r.x0 && r.y1 >= r.y0))
        throw ConfigError("RegionMap: malformed rect in region '" + reg.name + "'");
  }
  for (std::size_t i = 0; i < regions.size(); ++i)
    for (std::size_t j = i + 1; j < regions.size(); ++j)
      for (const auto& a : regions[i].rects)
        for (const auto& b : regions[j].rects)
          if (rects_overlap(a, b))
            throw ConfigError("RegionMap: regions '" + regions[i].name + "' and '" +
                              regions[j].name + "' overlap");
}

const Region* RegionMap::find(double x, double y) const {
  for (const auto& reg : regions)
    for (const auto& r : reg.rects)
      if (r.contains(x, y)) return &reg;
  return nullptr;
}

double lookup_rate(Point p, const RegionMap& map) {
  const Region* reg = map.find(p.x, p.y);
  return reg ? reg->reporting_rate : map.default_rate;
}

std::vector<std::uint8_t> thinning_mask(const EventStream& s, const RegionMap& map,
                                        const BaseNoise& noise) {
  std::vector<std::uint8_t> mask(s.events.size());
  for (std::size_t i = 0; i < s.events.size(); ++i) {
    double rate = lookup_rate({s.events[i].x, s.events[i].y}, map);
    mask[i] = noise.uniform(Channel::Thin, i) < rate ? 1 : 0;
  }
  return mask;
}

namespace {

EventStream apply_mask(const EventStream& s, const std::vector<std::uint8_t>& mask,
                       bool keep_removed) {
  EventStream out;
  out.horizon = s.horizon;
  out.truncation_count = s.truncation_count;
  if (keep_removed) {
    out.events = s.events;
    out.retained = mask;
    return out;
  }
  for (std::size_t i = 0; i < s.events.size(); ++i)
    if (mask[i]) out.events.push_back(s.events[i]);
  return out;
}

}  // namespace

EventStream thin_stream(const EventStream& s, const RegionMap& map, const BaseNoise& noise,
                        bool keep_removed) {
  map.validate();
  return apply_mask(s, thinning_mask(s, map, noise), keep_removed);
}

EventStream victimization_subsample(const EventStream& s, const RegionMap& map,
                                    double horizon_ratio, const BaseNoise& noise) {
  map.validate();
  if (!(horizon_ratio > 0.0))
    throw ConfigError("victimization_subsample: horizon_ratio must be positive");
  std::vector<std::uint8_t> mask(s.events.size(), 1);
  for (std::size_t i = 0; i < s.events.size(); ++i) {
    const Region* reg = map.find(s.events[i].x, s.events[i].y);
    if (!reg) continue;  // outside every region: this step does not apply
    if (!reg->retention_base)
      throw ConfigError("victimization_subsample: region '" + reg->name +
                        "' has no retention metadata");
    double p = std::min(1.0, *reg->retention_base * horizon_ratio);
    mask[i] = noise.uniform(Channel::Victim, i) < p ? 1 : 0;
  }
  return apply_mask(s, mask, false);
}

}  // namespace hawkes
