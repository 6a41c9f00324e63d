#include <doctest.h>

#include <cmath>

#include "hawkes/generator.hpp"
#include "hawkes/model.hpp"
#include "hawkes/rng.hpp"
#include "hawkes/stats.hpp"
#include "oracles.hpp"

using namespace hawkes;

namespace {

EventStream make_stream(std::initializer_list<Event> events, double horizon = 0.0) {
  EventStream s;
  s.events = events;
  s.horizon = horizon;
  return s;
}

const ModelParams kTheta0(100.0, 3.0, 0.2, 0.01);

}  // namespace

TEST_CASE("keyed noise: determinism, channel separation, range") {
  BaseNoise a(42), b(42), c(43);
  for (std::uint64_t i = 0; i < 100; ++i) {
    double u = a.uniform(Channel::BgTime, i);
    CHECK(u == b.uniform(Channel::BgTime, i));
    CHECK(u != c.uniform(Channel::BgTime, i));
    CHECK(u > 0.0);
    CHECK(u < 1.0);
    // Disjoint channels: same index, different values.
    CHECK(u != a.uniform(Channel::OffDelay, i));
  }
}

TEST_CASE("noise budget is enforced, never silently re-drawn") {
  BaseNoise noise(1);
  noise.set_budget(10);
  CHECK_NOTHROW((void)noise.uniform(Channel::BgTime, 9));
  CHECK_THROWS_AS((void)noise.uniform(Channel::BgTime, 10), NumericalError);
}

TEST_CASE("normal quantile inverts the normal cdf") {
  for (double p : {1e-9, 1e-4, 0.01, 0.3, 0.5, 0.7, 0.99, 1 - 1e-6}) {
    CHECK(normal_cdf(normal_quantile(p)) == doctest::Approx(p).epsilon(1e-10));
  }
  CHECK(normal_quantile(0.5) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK_THROWS_AS((void)normal_quantile(0.0), NumericalError);
}

TEST_CASE("poisson quantile has the right mean on a uniform grid") {
  for (double lambda : {0.3, 0.9425, 4.0}) {
    double meanv = 0.0;
    const int n = 20000;
    for (int i = 0; i < n; ++i)
      meanv += poisson_quantile((i + 0.5) / n, lambda);
    meanv /= n;
    CHECK(meanv == doctest::Approx(lambda).epsilon(0.002));
  }
}

TEST_CASE("parameter round trips and the branching ratio") {
  ModelParams p = ModelParams::from_branching(15.0, 0.2, 100.0, 0.01);
  CHECK(p.alpha == doctest::Approx(3.0));
  CHECK(p.beta == 0.2);
  CHECK(p.theta_br() == doctest::Approx(15.0));
  CHECK(p.omega() == 0.2);
  // B = 2 pi sigma^2 and A*B = (alpha/beta) * B.
  CHECK(p.spatial_mass() == doctest::Approx(0.0628318530717958).epsilon(1e-12));
  CHECK(p.branching_ratio() == doctest::Approx(0.942477796076938).epsilon(1e-12));
  CHECK(p.subcritical());
  p.alpha = 3.4;  // pushes A*B past 1
  CHECK(!p.subcritical());

  CHECK_THROWS_AS(ModelParams(0.0, 1, 1, 1).validate(), NumericalError);
  CHECK_THROWS_AS(ModelParams(1, 1, -2, 1).validate(), NumericalError);
}

TEST_CASE("default background geometry") {
  BackgroundConfig bg = BackgroundConfig::default_config();
  CHECK(bg.centers.size() == 14);
  CHECK(bg.sigma0 == 4.5);
  int on_grid = 0;
  for (const auto& c : bg.centers) {
    CHECK(std::abs(c.x) == 6.0);
    for (double y : {0.0, 10.0, 20.0, 30.0})
      if (std::abs(c.y) == y) ++on_grid;
  }
  CHECK(on_grid == 14);
  CHECK_THROWS_AS(BackgroundConfig().validate(), ConfigError);
}

TEST_CASE("stream validation rejects corrupt input") {
  CHECK_NOTHROW(make_stream({{0.5, 0, 0}, {1.0, 1, 1}}).validate());
  CHECK_THROWS_AS(make_stream({{1.0, 0, 0}, {1.0, 1, 1}}).validate(), DataError);  // exact tie
  CHECK_THROWS_AS(make_stream({{2.0, 0, 0}, {1.0, 1, 1}}).validate(), DataError);
  CHECK_THROWS_AS(make_stream({{-1.0, 0, 0}}).validate(), DataError);
  CHECK_THROWS_AS(make_stream({{0.0, 1.0 / 0.0, 0}}).validate(), DataError);
}

TEST_CASE("background intensity: zero scale, summation oracle, symmetry") {
  BackgroundConfig bg = BackgroundConfig::default_config();
  CHECK(background_intensity({3.0, -7.0}, 0.0, bg) == 0.0);

  // Independent 14-term summation.
  Point p{6.0, 20.0};
  double expected = 0.0;
  for (const auto& c : bg.centers) {
    double d2 = (p.x - c.x) * (p.x - c.x) + (p.y - c.y) * (p.y - c.y);
    expected += std::exp(-d2 / (2.0 * 4.5 * 4.5)) / (2.0 * M_PI * 4.5 * 4.5);
  }
  expected *= 100.0;
  CHECK(background_intensity(p, 100.0, bg) == doctest::Approx(expected).epsilon(1e-14));

  // The center layout is symmetric under point reflection.
  CHECK(background_intensity({6, 20}, 100.0, bg) ==
        doctest::Approx(background_intensity({-6, -20}, 100.0, bg)).epsilon(1e-14));
}

TEST_CASE("triggering kernel: peak, hand value, zero amplitude, causality") {
  ModelParams p(1.0, 3.0, 0.2, 0.01);
  CHECK(triggering_kernel(1e-13, 0, 0, p) == doctest::Approx(3.0).epsilon(1e-10));
  CHECK(triggering_kernel(5.0, 0, 0, p) == doctest::Approx(3.0 * std::exp(-1.0)).epsilon(1e-14));
  ModelParams zero_amp = p;
  zero_amp.alpha = 0.0;
  CHECK(triggering_kernel(2.0, 0.3, -0.4, zero_amp) == 0.0);
  CHECK_THROWS_AS((void)triggering_kernel(0.0, 0, 0, p), NumericalError);
  CHECK_THROWS_AS((void)triggering_kernel(-1.0, 0, 0, p), NumericalError);

  ModelParams aniso = p;
  aniso.sigma_x_sq = 0.04;
  aniso.sigma_y_sq = 0.01;
  CHECK(triggering_kernel(5.0, 0.2, 0.1, aniso) ==
        doctest::Approx(3.0 * std::exp(-1.0 - 0.04 / 0.08 - 0.01 / 0.02)).epsilon(1e-12));
}

TEST_CASE("conditional intensity: empty history, single term, decay limit") {
  BackgroundConfig bg = BackgroundConfig::default_config();
  ModelParams p(1.0, 3.0, 0.2, 0.01);
  EventStream empty;
  Point q{0.0, 0.0};
  CHECK(conditional_intensity(2.0, q, empty, p, bg) ==
        doctest::Approx(background_intensity(q, p.mu, bg)).epsilon(1e-14));

  EventStream one = make_stream({{1.0, 0.0, 0.0}});
  double expected = background_intensity(q, p.mu, bg) + 3.0 * std::exp(-0.2);
  CHECK(conditional_intensity(2.0, q, one, p, bg) == doctest::Approx(expected).epsilon(1e-13));

  // After 25 decay constants the triggering term is below 1e-9.
  double t_far = 1.0 + 26.0 / p.beta;
  CHECK(std::abs(conditional_intensity(t_far, q, one, p, bg) -
                 background_intensity(q, p.mu, bg)) < 1e-9);

  // Events at or after the query time never contribute.
  CHECK(conditional_intensity(1.0, q, one, p, bg) ==
        doctest::Approx(background_intensity(q, p.mu, bg)).epsilon(1e-14));
}

TEST_CASE("conditional intensity dominates the background and is additive in history") {
  BackgroundConfig bg = BackgroundConfig::default_config();
  ModelParams p = kTheta0;
  EventStream h1 = make_stream({{0.3, 5.8, 19.7}, {0.9, 6.1, 20.2}});
  EventStream h2 = make_stream({{0.5, -6.0, -10.0}});
  EventStream both = make_stream({{0.3, 5.8, 19.7}, {0.5, -6.0, -10.0}, {0.9, 6.1, 20.2}});

  BaseNoise noise(7);
  for (int i = 0; i < 50; ++i) {
    Point q{21.0 * noise.uniform(Channel::Generic, 2 * i) - 10.5,
            72.0 * noise.uniform(Channel::Generic, 2 * i + 1) - 36.0};
    double t = 1.0 + i * 0.01;
    double bg_val = background_intensity(q, p.mu, bg);
    double l1 = conditional_intensity(t, q, h1, p, bg);
    double l2 = conditional_intensity(t, q, h2, p, bg);
    double l12 = conditional_intensity(t, q, both, p, bg);
    CHECK(l12 >= bg_val);
    CHECK(l12 == doctest::Approx(bg_val + (l1 - bg_val) + (l2 - bg_val)).epsilon(1e-12));
  }
}

TEST_CASE("temporal projection: hand values and quadrature oracle") {
  BackgroundConfig bg = BackgroundConfig::all_containing(
      BackgroundConfig::default_config().centers, 4.5);
  ModelParams p(1.0, 3.0, 0.2, 0.01);

  EventStream empty;
  CHECK(temporal_projection_intensity(1.0, empty, p, bg) == doctest::Approx(14.0 * p.mu));

  // 2D quadrature of the full conditional intensity over a box that contains
  // essentially all mass agrees with the projection formula.  A wider
  // triggering kernel keeps the bumps resolvable on a global Simpson grid.
  ModelParams wide = p;
  wide.sigma_sq = 0.25;
  EventStream h = make_stream({{0.2, 6.0, 20.0}, {0.5, -6.0, 0.0}, {0.8, 6.1, 20.1}});
  double t = 1.0;
  double numeric = oracle::simpson2d(
      [&](double x, double y) { return conditional_intensity(t, {x, y}, h, wide, bg); },
      -80.0, 80.0, -110.0, 110.0, 1200, 1600);
  double closed = temporal_projection_intensity(t, h, wide, bg);
  CHECK(std::abs(numeric - closed) / closed < 0.005);
}

TEST_CASE("temporal compensator: trivial values and quadrature oracle") {
  BackgroundConfig bg = BackgroundConfig::all_containing(
      BackgroundConfig::default_config().centers, 4.5);
  ModelParams p(1.0, 3.0, 0.2, 0.01);
  EventStream empty;
  CHECK(temporal_compensator(0.0, empty, p, bg) == 0.0);
  CHECK(temporal_compensator(2.0, empty, p, bg) == doctest::Approx(2.0 * 14.0 * p.mu));

  EventStream h = make_stream({{0.2, 6.0, 20.0}, {0.5, -6.0, 0.0}, {0.8, 6.1, 20.1}});
  double t_end = 3.0;
  double numeric = oracle::adaptive_simpson(
      [&](double u) { return temporal_projection_intensity(u, h, p, bg); }, 0.0, t_end, 1e-12);
  double closed = temporal_compensator(t_end, h, p, bg);
  CHECK(std::abs(numeric - closed) / closed < 1e-6);
}

TEST_CASE("compensator derivative equals the projection intensity") {
  BackgroundConfig bg = BackgroundConfig::default_config();
  ModelParams p = kTheta0;
  EventStream h = make_stream({{0.1, 6, 20}, {0.35, -6, -10}, {0.9, 6, 0}, {1.4, -6, 30}});
  BaseNoise noise(13);
  const double h_step = 1e-6;
  int checked = 0;
  for (int i = 0; checked < 100 && i < 1000; ++i) {
    double t = 0.01 + 2.5 * noise.uniform(Channel::Generic, i);
    bool near_event = false;
    for (const auto& e : h.events) near_event |= std::abs(t - e.t) < 1e-3;
    if (near_event) continue;
    double fd = (temporal_compensator(t + h_step, h, p, bg) -
                 temporal_compensator(t - h_step, h, p, bg)) /
                (2.0 * h_step);
    double val = temporal_projection_intensity(t, h, p, bg);
    CHECK(std::abs(fd - val) / val < 1e-5);
    ++checked;
  }
  CHECK(checked == 100);

  // Monotone nondecreasing in t.
  double prev = 0.0;
  for (double t = 0.0; t <= 3.0; t += 0.05) {
    double v = temporal_compensator(t, h, p, bg);
    CHECK(v >= prev);
    prev = v;
  }
}

TEST_CASE("compensator residuals of simulated streams are Exp(1)") {
  // Count-limited streams: the first-N residuals carry no window censoring.
  BackgroundConfig bg = BackgroundConfig::all_containing(
      BackgroundConfig::default_config().centers, 4.5);
  ModelParams p = kTheta0;
  GenConfig gen;
  gen.mode = GenConfig::Mode::CountLimited;
  gen.max_events = 40;

  std::vector<double> residuals;
  for (int k = 0; k < 40; ++k) {
    EventStream s = simulate_stream(p, bg, BaseNoise(900 + k), gen);
    auto r = compensator_residuals(s, p, bg);
    residuals.insert(residuals.end(), r.begin(), r.end());
  }
  CHECK(residuals.size() == 40u * 40u);
  KsResult ks = ks_test_exp1(residuals);
  CHECK(ks.p_value > 0.01);
}
