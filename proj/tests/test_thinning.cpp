#include <doctest.h>

#include <cmath>

#include "hawkes/generator.hpp"
#include "hawkes/thinning.hpp"

using namespace hawkes;

namespace {

RegionMap two_region_map() {
  RegionMap map;
  map.default_rate = 1.0;
  Region west{"west", {{-10.0, -10.0, 0.0, 10.0}}, 0.3, {}};
  Region east{"east", {{0.0, -10.0, 10.0, 10.0}}, 0.9, {}};
  map.regions = {west, east};
  return map;
}

EventStream uniform_events(int n, double span, std::uint64_t seed) {
  EventStream s;
  BaseNoise noise(seed);
  double t = 0.0;
  for (int i = 0; i < n; ++i) {
    t += 0.001 + noise.uniform(Channel::Generic, 3 * static_cast<std::uint64_t>(i));
    s.events.push_back(
        {t, span * (2.0 * noise.uniform(Channel::Generic, 3 * static_cast<std::uint64_t>(i) + 1) - 1.0),
         span * (2.0 * noise.uniform(Channel::Generic, 3 * static_cast<std::uint64_t>(i) + 2) - 1.0)});
  }
  s.horizon = t + 1.0;
  return s;
}

}  // namespace

TEST_CASE("rate lookup: direct, default, boundary tie-break") {
  RegionMap map = two_region_map();
  map.validate();
  CHECK(lookup_rate({-5.0, 0.0}, map) == 0.3);
  CHECK(lookup_rate({5.0, 0.0}, map) == 0.9);
  CHECK(lookup_rate({50.0, 0.0}, map) == 1.0);  // no region, default
  // The shared boundary x = 0 belongs to the region listed first.
  CHECK(lookup_rate({0.0, 0.0}, map) == 0.3);
}

TEST_CASE("overlap validation: positive-area overlap rejected, shared edges fine") {
  RegionMap map = two_region_map();
  CHECK_NOTHROW(map.validate());
  map.regions[1].rects[0].x0 = -1.0;  // now overlaps west
  CHECK_THROWS_AS(map.validate(), ConfigError);

  RegionMap bad_rate = two_region_map();
  bad_rate.regions[0].reporting_rate = 1.5;
  CHECK_THROWS_AS(bad_rate.validate(), ConfigError);
}

TEST_CASE("thinning: identity at rate one, empty at rate zero") {
  EventStream s = uniform_events(200, 9.0, 1);
  RegionMap all = RegionMap::uniform(1.0);
  RegionMap none = RegionMap::uniform(0.0);
  CHECK(thin_stream(s, all, BaseNoise(5)).size() == 200);
  CHECK(thin_stream(s, none, BaseNoise(5)).size() == 0);
}

TEST_CASE("thinning matches the binomial oracle at rate one half") {
  EventStream s = uniform_events(10000, 9.0, 2);
  RegionMap half = RegionMap::uniform(0.5);
  double kept = static_cast<double>(thin_stream(s, half, BaseNoise(6)).size());
  CHECK(std::abs(kept - 5000.0) <= 3.0 * std::sqrt(10000.0 * 0.25));
}

TEST_CASE("a thinned stream is a subsequence; removed events can be kept flagged") {
  EventStream s = uniform_events(300, 9.0, 3);
  RegionMap map = two_region_map();
  EventStream thinned = thin_stream(s, map, BaseNoise(7));
  std::size_t cursor = 0;
  for (const auto& e : thinned.events) {
    while (cursor < s.size() && s.events[cursor].t != e.t) ++cursor;
    REQUIRE(cursor < s.size());  // every survivor appears in the original order
    CHECK(s.events[cursor].x == e.x);
  }

  EventStream flagged = thin_stream(s, map, BaseNoise(7), true);
  CHECK(flagged.size() == s.size());
  REQUIRE(flagged.retained.size() == s.size());
  std::size_t kept = 0;
  for (std::size_t i = 0; i < flagged.retained.size(); ++i)
    if (flagged.retained[i]) ++kept;
  CHECK(kept == thinned.size());
}

TEST_CASE("index-keyed thinning commutes with prefix time restriction") {
  EventStream s = uniform_events(400, 9.0, 4);
  RegionMap map = two_region_map();
  double cut = s.events[200].t;

  auto restrict_stream = [&](const EventStream& in) {
    EventStream out;
    out.horizon = cut;
    for (const auto& e : in.events)
      if (e.t <= cut) out.events.push_back(e);
    return out;
  };

  EventStream thin_then_restrict = restrict_stream(thin_stream(s, map, BaseNoise(8)));
  EventStream restrict_then_thin = thin_stream(restrict_stream(s), map, BaseNoise(8));
  REQUIRE(thin_then_restrict.size() == restrict_then_thin.size());
  for (std::size_t i = 0; i < thin_then_restrict.size(); ++i)
    CHECK(thin_then_restrict.events[i].t == restrict_then_thin.events[i].t);
}

TEST_CASE("victimization step: identity above one, halving in one region, empty input") {
  EventStream s = uniform_events(8000, 9.0, 5);
  RegionMap map = two_region_map();
  map.regions[0].retention_base = 2.0;  // min(1, 2) = 1
  map.regions[1].retention_base = 2.0;
  CHECK(victimization_subsample(s, map, 1.0, BaseNoise(9)).size() == s.size());

  map.regions[0].retention_base = 0.5;
  std::size_t west_n = 0;
  for (const auto& e : s.events)
    if (e.x <= 0.0) ++west_n;
  EventStream out = victimization_subsample(s, map, 1.0, BaseNoise(9));
  std::size_t west_kept = 0, east_kept = 0;
  for (const auto& e : out.events)
    (e.x <= 0.0 ? west_kept : east_kept) += 1;
  CHECK(east_kept == s.size() - west_n);  // untouched region keeps everything
  CHECK(std::abs(static_cast<double>(west_kept) - 0.5 * static_cast<double>(west_n)) <=
        3.0 * std::sqrt(static_cast<double>(west_n) * 0.25));

  EventStream empty;
  CHECK(victimization_subsample(empty, map, 1.0, BaseNoise(9)).size() == 0);

  // Undefined retention metadata is a configuration error.
  RegionMap missing = two_region_map();
  CHECK_THROWS_AS((void)victimization_subsample(s, missing, 1.0, BaseNoise(9)), ConfigError);
}

TEST_CASE("two-stage composition: each stage is the identity at unit rates") {
  EventStream s = uniform_events(500, 9.0, 6);
  RegionMap map = two_region_map();
  map.regions[0].retention_base = 1.0;
  map.regions[1].retention_base = 1.0;
  map.regions[0].reporting_rate = 1.0;
  map.regions[1].reporting_rate = 1.0;
  EventStream staged =
      thin_stream(victimization_subsample(s, map, 1.0, BaseNoise(10)), map, BaseNoise(10));
  CHECK(staged.size() == s.size());
}
