#include <doctest.h>

#include <cmath>

#include "hawkes/em.hpp"
#include "hawkes/generator.hpp"

using namespace hawkes;

namespace {

BackgroundConfig one_center_bg() {
  return BackgroundConfig::all_containing({{0.0, 0.0}}, 4.5);
}

EventStream fixture_stream(const ModelParams& p, const BackgroundConfig& bg, double horizon,
                           std::uint64_t seed) {
  GenConfig gen;
  gen.horizon = horizon;
  return simulate_stream(p, bg, BaseNoise(seed), gen);
}

}  // namespace

TEST_CASE("single event: background with probability one") {
  BackgroundConfig bg = one_center_bg();
  ModelParams p(2.0, 1.0, 0.5, 0.01);
  EventStream s;
  s.events = {{0.5, 0.1, -0.2}};
  s.horizon = 1.0;
  Responsibilities r = e_step(s, p, bg);
  CHECK(r.background[0] == 1.0);
  CHECK(r.parents[0].empty());
}

TEST_CASE("two events: hand-computed parentage posterior") {
  BackgroundConfig bg = one_center_bg();
  ModelParams p(2.0, 1.5, 0.5, 0.01);
  EventStream s;
  s.events = {{0.5, 0.05, -0.02}, {0.9, 0.11, 0.03}};
  s.horizon = 1.0;
  Responsibilities r = e_step(s, p, bg);

  double g = triggering_kernel(0.4, 0.06, 0.05, p);
  double bg2 = background_intensity({0.11, 0.03}, p.mu, bg);
  double want = g / (bg2 + g);
  REQUIRE(r.parents[1].size() == 1);
  CHECK(r.parents[1][0].first == 0);
  CHECK(r.parents[1][0].second == doctest::Approx(want).epsilon(1e-12));
  CHECK(r.background[1] == doctest::Approx(1.0 - want).epsilon(1e-12));
}

TEST_CASE("zero amplitude: every event is background") {
  BackgroundConfig bg = one_center_bg();
  ModelParams p(2.0, 1.0, 0.5, 0.01);
  EventStream s = fixture_stream(p, bg, 2.0, 31);
  REQUIRE(s.size() >= 3);
  ModelParams degenerate = p;
  degenerate.alpha = 0.0;
  Responsibilities r = e_step(s, degenerate, bg);
  for (std::size_t i = 0; i < r.size(); ++i) CHECK(r.background[i] == 1.0);
}

TEST_CASE("responsibility rows sum to one") {
  BackgroundConfig bg = one_center_bg();
  ModelParams p(20.0, 3.0, 0.8, 0.01);
  EventStream s = fixture_stream(p, bg, 2.0, 32);
  REQUIRE(s.size() > 30);
  Responsibilities r = e_step(s, p, bg);
  for (std::size_t i = 0; i < r.size(); ++i) {
    double total = r.background[i];
    for (const auto& [j, q] : r.parents[i]) {
      CHECK(q >= 0.0);
      CHECK(j < static_cast<int>(i));
      total += q;
    }
    CHECK(std::abs(total - 1.0) < 1e-12);
  }
}

TEST_CASE("all-background responsibilities drive alpha to zero and mu to the count rate") {
  BackgroundConfig bg = one_center_bg();
  ModelParams p(2.0, 1.0, 0.5, 0.01);
  EventStream s = fixture_stream(p, bg, 3.0, 33);
  Responsibilities all_bg;
  all_bg.background.assign(s.size(), 1.0);
  all_bg.parents.resize(s.size());
  ModelParams next = m_step({s}, {all_bg}, p, bg);
  CHECK(next.alpha <= 1e-12);
  double expect_mu = static_cast<double>(s.size()) / (3.0 * bg.domain_mass());
  CHECK(next.mu == doctest::Approx(expect_mu).epsilon(1e-9));
}

TEST_CASE("decay-rate update matches a brute-force profile grid search") {
  BackgroundConfig bg = one_center_bg();
  ModelParams truth(5.0, 2.0, 0.7, 0.01);
  EventStream s = fixture_stream(truth, bg, 4.0, 34);
  REQUIRE(s.size() >= 20);
  Responsibilities r = e_step(s, truth, bg);
  EmStats stats = responsibilities_stats(s, r, s.window_end());
  ModelParams updated = m_step({s}, {r}, truth, bg);

  // Independent route: profiled expected complete-data objective in beta,
  // with alpha eliminated and sigma^2 at its closed-form update.
  auto profile = [&](double beta) {
    double e = 0.0;
    for (double tau : stats.censor_tau) e += 1.0 - std::exp(-beta * tau);
    double w = stats.trig_weight;
    double sigma_sq = (stats.trig_dx2 + stats.trig_dy2) / (2.0 * w);
    double big = 2.0 * M_PI * sigma_sq;
    double alpha = w * beta / (big * e);
    return w * std::log(alpha) - beta * stats.trig_delay - w;
  };
  double best_beta = 0.0, best_val = -1e300;
  for (double b = 0.005; b < 20.0; b *= 1.0005) {
    double v = profile(b);
    if (v > best_val) {
      best_val = v;
      best_beta = b;
    }
  }
  CHECK(std::abs(updated.beta - best_beta) / best_beta < 1e-3);
}

TEST_CASE("one EM iteration increases the observed-data log-likelihood") {
  BackgroundConfig bg = one_center_bg();
  ModelParams truth(30.0, 3.0, 0.8, 0.01);
  std::vector<EventStream> streams;
  for (int k = 0; k < 5; ++k) streams.push_back(fixture_stream(truth, bg, 2.0, 40 + k));

  ModelParams init(20.0, 2.0, 1.2, 0.02);
  double before = observed_loglik(streams, init, bg);
  EmConfig cfg;
  cfg.max_iters = 1;
  EmResult res = fit_em(streams, init, bg, cfg);
  double after = observed_loglik(streams, res.params, bg);
  CHECK(after > before);
}

TEST_CASE("log-likelihood is nondecreasing over twenty iterations on three fixtures") {
  for (std::uint64_t fixture = 0; fixture < 3; ++fixture) {
    BackgroundConfig bg = one_center_bg();
    ModelParams truth(25.0 + 5.0 * static_cast<double>(fixture), 3.0, 0.8, 0.01);
    std::vector<EventStream> streams;
    for (int k = 0; k < 4; ++k)
      streams.push_back(fixture_stream(truth, bg, 2.0, 100 * (fixture + 1) + k));
    ModelParams init(truth.mu * 1.7, truth.alpha * 0.4, truth.beta * 2.0, truth.sigma_sq * 3.0);
    EmConfig cfg;
    cfg.max_iters = 20;
    cfg.tol = 0.0;  // run all iterations
    EmResult res = fit_em(streams, init, bg, cfg);
    REQUIRE(res.loglik_trace.size() == 20);
    for (std::size_t i = 1; i < res.loglik_trace.size(); ++i)
      CHECK(res.loglik_trace[i] >=
            res.loglik_trace[i - 1] - 1e-8 * (1.0 + std::abs(res.loglik_trace[i - 1])));
  }
}

TEST_CASE("starting at the truth on complete data, the first iteration barely moves") {
  BackgroundConfig bg = one_center_bg();
  ModelParams truth(40.0, 3.0, 0.8, 0.01);
  std::vector<EventStream> streams;
  for (int k = 0; k < 100; ++k) streams.push_back(fixture_stream(truth, bg, 2.5, 200 + k));
  EmConfig cfg;
  cfg.max_iters = 1;
  EmResult res = fit_em(streams, truth, bg, cfg);
  CHECK(std::abs(res.params.mu - truth.mu) / truth.mu < 0.05);
  CHECK(std::abs(res.params.alpha - truth.alpha) / truth.alpha < 0.05);
  CHECK(std::abs(res.params.beta - truth.beta) / truth.beta < 0.05);
  CHECK(std::abs(res.params.sigma_sq - truth.sigma_sq) / truth.sigma_sq < 0.05);
}

TEST_CASE("posterior mass lands on the true parent more than on a fixed wrong baseline") {
  BackgroundConfig bg = one_center_bg();
  ModelParams truth(30.0, 3.0, 0.8, 0.01);
  double p_true_sum = 0.0, p_baseline_sum = 0.0;
  int counted = 0;
  for (int k = 0; k < 30 && counted < 1000; ++k) {
    EventStream s = fixture_stream(truth, bg, 2.0, 300 + k);
    Responsibilities r = e_step(s, truth, bg);
    for (std::size_t i = 0; i < s.size(); ++i) {
      int true_parent = s.events[i].parent_index;
      if (true_parent < 0) continue;
      // Baseline: the immediately preceding event, unless it is the truth.
      int baseline = static_cast<int>(i) - 1;
      if (baseline == true_parent) baseline -= 1;
      if (baseline < 0) continue;
      double p_true = 0.0, p_base = 0.0;
      for (const auto& [j, q] : r.parents[i]) {
        if (j == true_parent) p_true = q;
        if (j == baseline) p_base = q;
      }
      p_true_sum += p_true;
      p_baseline_sum += p_base;
      ++counted;
    }
  }
  REQUIRE(counted >= 200);
  CHECK(p_true_sum / counted > p_baseline_sum / counted);
}

TEST_CASE("exact (uncut) and cutoff e-steps agree to double precision") {
  BackgroundConfig bg = one_center_bg();
  ModelParams p(20.0, 3.0, 0.8, 0.01);
  EventStream s = fixture_stream(p, bg, 1.0, 35);
  Responsibilities cut = e_step(s, p, bg, 8.0);
  Responsibilities exact = e_step(s, p, bg, 0.0);
  REQUIRE(cut.size() == exact.size());
  for (std::size_t i = 0; i < cut.size(); ++i)
    CHECK(std::abs(cut.background[i] - exact.background[i]) < 1e-12);
}

TEST_CASE("anisotropic M-step recovers distinct axis variances") {
  BackgroundConfig bg = one_center_bg();
  ModelParams truth(40.0, 3.0, 0.8, 0.01);
  truth.sigma_x_sq = 0.04;
  truth.sigma_y_sq = 0.01;
  std::vector<EventStream> streams;
  GenConfig gen;
  gen.horizon = 2.0;
  for (int k = 0; k < 40; ++k)
    streams.push_back(simulate_stream(truth, bg, BaseNoise(400 + k), gen));
  EmConfig cfg;
  cfg.anisotropic = true;
  cfg.max_iters = 30;
  ModelParams init(30.0, 2.0, 1.0, 0.02);
  EmResult res = fit_em(streams, init, bg, cfg);
  REQUIRE(res.params.anisotropic());
  CHECK(std::abs(*res.params.sigma_x_sq - 0.04) / 0.04 < 0.2);
  CHECK(std::abs(*res.params.sigma_y_sq - 0.01) / 0.01 < 0.2);
  CHECK(*res.params.sigma_x_sq > 2.0 * *res.params.sigma_y_sq);
}
