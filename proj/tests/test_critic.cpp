#include <doctest.h>

#include <cmath>

#include "hawkes/critic.hpp"
#include "hawkes/generator.hpp"
#include "hawkes/rng.hpp"

using namespace hawkes;

namespace {

EventStream stream_of(std::initializer_list<Event> events) {
  EventStream s;
  s.events = events;
  return s;
}

std::vector<EventStream> toy_streams() {
  return {
      stream_of({{0.4, 1.0, -0.5}, {1.1, 0.2, 0.3}, {2.0, -1.0, 0.8}}),
      stream_of({{0.7, -0.3, 0.9}}),
      stream_of({}),
      stream_of({{0.2, 0.0, 0.1}, {0.5, 0.4, -0.2}}),
  };
}

}  // namespace

TEST_CASE("padded batch construction and validation") {
  PaddedBatch b = PaddedBatch::from_streams(toy_streams());
  CHECK(b.streams() == 4);
  CHECK(b.width() == 3);
  CHECK(b.lengths == std::vector<int>{3, 1, 0, 2});
  CHECK(b.mask(0, 2) == 1.0);
  CHECK(b.mask(1, 1) == 0.0);
  CHECK(b.t(1, 1) == 0.0);  // padding is exactly zero
  CHECK_NOTHROW(b.validate());

  PaddedBatch broken = b;
  broken.t(2, 2) = 1.0;  // nonzero under padding
  CHECK_THROWS_AS(broken.validate(), DataError);
  broken = b;
  broken.mask(1, 2) = 1.0;  // not a prefix mask
  CHECK_THROWS_AS(broken.validate(), DataError);
}

TEST_CASE("critic parameters flatten round-trip") {
  CriticParams w = CriticParams::init(8, 42);
  Eigen::VectorXd flat = w.flatten();
  CHECK(flat.size() == w.n_params());
  CriticParams w2 = CriticParams::zeros(8);
  w2.unflatten(flat);
  CHECK((w2.flatten() - flat).norm() == 0.0);
  CHECK(w2.w_h[2](3, 4) == w.w_h[2](3, 4));
}

TEST_CASE("an all-padding stream scores the empty sum, zero") {
  CriticParams w = CriticParams::init(8, 1);
  PaddedBatch b = PaddedBatch::from_streams(toy_streams());
  Eigen::VectorXd scores = critic_forward(b, w);
  CHECK(scores(2) == 0.0);
  CHECK(scores(0) != 0.0);
}

TEST_CASE("scores are invariant to padding width") {
  CriticParams w = CriticParams::init(16, 2);
  PaddedBatch b = PaddedBatch::from_streams(toy_streams());
  Eigen::VectorXd base = critic_forward(b, w);
  for (long extra : {1L, 4L, 9L}) {
    Eigen::VectorXd wider = critic_forward(b.repad(b.width() + extra), w);
    for (long j = 0; j < base.size(); ++j) CHECK(wider(j) == base(j));
  }
}

TEST_CASE("scores depend on event order") {
  CriticParams w = CriticParams::init(16, 3);
  std::vector<EventStream> streams = {
      stream_of({{0.5, 1.0, 0.0}, {1.0, -1.0, 0.5}, {1.5, 0.3, -0.3}})};
  PaddedBatch b = PaddedBatch::from_streams(streams);
  double before = critic_forward(b, w)(0);
  // Swap the spatial payload of two events (times stay sorted).
  std::swap(b.x(0, 0), b.x(0, 1));
  std::swap(b.y(0, 0), b.y(0, 1));
  double after = critic_forward(b, w)(0);
  CHECK(before != after);
}

TEST_CASE("input gradients vanish exactly at padded positions") {
  CriticParams w = CriticParams::init(8, 4);
  PaddedBatch b = PaddedBatch::from_streams(toy_streams());
  InputGrads g = critic_input_gradients(b, w);
  for (long j = 0; j < b.streams(); ++j)
    for (long i = 0; i < b.width(); ++i) {
      if (b.mask(j, i) == 1.0) continue;
      CHECK(g.t(j, i) == 0.0);
      CHECK(g.x(j, i) == 0.0);
      CHECK(g.y(j, i) == 0.0);
    }
  // And are mostly nonzero at real positions.
  CHECK(g.t(0, 0) != 0.0);
  CHECK(g.x(3, 1) != 0.0);
}

TEST_CASE("input gradients match finite differences") {
  CriticParams w = CriticParams::init(8, 5);
  PaddedBatch b = PaddedBatch::from_streams(toy_streams());
  InputGrads g = critic_input_gradients(b, w);
  const double h = 1e-6;
  for (long j = 0; j < b.streams(); ++j)
    for (long i = 0; i < b.lengths[static_cast<std::size_t>(j)]; ++i) {
      PaddedBatch plus = b, minus = b;
      plus.x(j, i) += h;
      minus.x(j, i) -= h;
      double fd = (critic_forward(plus, w)(j) - critic_forward(minus, w)(j)) / (2.0 * h);
      CHECK(std::abs(fd - g.x(j, i)) <= 1e-6 * std::max(1.0, std::abs(fd)));
    }
}

TEST_CASE("interpolation intersects masks and stays sorted") {
  auto real = PaddedBatch::from_streams(
      {stream_of({{1.0, 0.0, 0.0}, {2.0, 1.0, 1.0}, {3.0, 2.0, 2.0}})});
  auto fake = PaddedBatch::from_streams({stream_of({{0.5, 4.0, -1.0}, {1.5, 5.0, -2.0}})});
  PaddedBatch interp = interpolate_batches(real, fake, {0.25});
  CHECK(interp.lengths == std::vector<int>{2});
  CHECK(interp.t(0, 0) == doctest::Approx(0.25 * 1.0 + 0.75 * 0.5));
  CHECK(interp.x(0, 1) == doctest::Approx(0.25 * 1.0 + 0.75 * 5.0));
  CHECK(interp.t(0, 2) == 0.0);  // beyond the common prefix
  CHECK_NOTHROW(interp.validate());
  CHECK(interp.t(0, 1) > interp.t(0, 0));
}

TEST_CASE("constant critic has unit penalty") {
  CriticParams w = CriticParams::zeros(8);
  auto streams = toy_streams();
  PaddedBatch real = PaddedBatch::from_streams(streams);
  PaddedBatch fake = PaddedBatch::from_streams(streams);
  double pen = gradient_penalty(real, fake, {0.3, 0.6, 0.9, 0.2}, w);
  CHECK(pen == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("penalty equals the norm formula computed through an independent pass") {
  CriticParams w = CriticParams::init(12, 6);
  auto streams = toy_streams();
  PaddedBatch real = PaddedBatch::from_streams(streams);
  std::vector<EventStream> other = {
      stream_of({{0.3, 0.5, 0.5}, {0.9, -0.2, 0.4}}),
      stream_of({{0.6, 0.1, -0.8}, {1.2, 0.7, 0.1}}),
      stream_of({{0.1, 0.0, 0.0}}),
      stream_of({{0.2, 0.3, 0.3}, {0.8, -0.4, 0.2}, {1.5, 0.6, -0.6}}),
  };
  PaddedBatch fake = PaddedBatch::from_streams(other);
  std::vector<double> eps{0.5, 0.1, 0.8, 0.4};
  double pen = gradient_penalty(real, fake, eps, w);

  PaddedBatch interp = interpolate_batches(real, fake, eps);
  InputGrads g = critic_input_gradients(interp, w);
  double expect = 0.0;
  for (long j = 0; j < interp.streams(); ++j) {
    double norm_sq = 1e-12;
    for (long i = 0; i < interp.width(); ++i)
      norm_sq += g.t(j, i) * g.t(j, i) + g.x(j, i) * g.x(j, i) + g.y(j, i) * g.y(j, i);
    double dev = std::sqrt(norm_sq) - 1.0;
    expect += dev * dev;
  }
  expect /= static_cast<double>(interp.streams());
  CHECK(pen == doctest::Approx(expect).epsilon(1e-12));
  CHECK(pen >= 0.0);
}

TEST_CASE("gradient norms match a finite-difference directional derivative on a 2-event toy") {
  CriticParams w = CriticParams::init(8, 7);
  PaddedBatch b = PaddedBatch::from_streams({stream_of({{0.4, 0.6, -0.1}, {1.3, -0.2, 0.5}})});
  InputGrads g = critic_input_gradients(b, w);
  double norm = 0.0;
  for (long i = 0; i < b.width(); ++i)
    norm += g.t(0, i) * g.t(0, i) + g.x(0, i) * g.x(0, i) + g.y(0, i) * g.y(0, i);
  norm = std::sqrt(norm);
  REQUIRE(norm > 0.0);

  // Step along the normalized gradient direction; the directional derivative
  // reconstructs the norm.
  const double h = 1e-6;
  PaddedBatch plus = b, minus = b;
  for (long i = 0; i < b.width(); ++i) {
    plus.t(0, i) += h * g.t(0, i) / norm;
    plus.x(0, i) += h * g.x(0, i) / norm;
    plus.y(0, i) += h * g.y(0, i) / norm;
    minus.t(0, i) -= h * g.t(0, i) / norm;
    minus.x(0, i) -= h * g.x(0, i) / norm;
    minus.y(0, i) -= h * g.y(0, i) / norm;
  }
  double fd = (critic_forward(plus, w)(0) - critic_forward(minus, w)(0)) / (2.0 * h);
  CHECK(std::abs(fd - norm) / norm < 1e-3);
}

TEST_CASE("penalty parameter gradient (double backward) matches finite differences") {
  CriticParams w = CriticParams::init(4, 8);
  PaddedBatch real = PaddedBatch::from_streams(
      {stream_of({{0.5, 0.2, -0.4}, {1.0, -0.6, 0.3}}), stream_of({{0.8, 0.9, 0.1}})});
  PaddedBatch fake = PaddedBatch::from_streams(
      {stream_of({{0.3, -0.1, 0.2}, {0.9, 0.5, -0.7}}), stream_of({{0.4, -0.5, 0.6}})});
  std::vector<double> eps{0.35, 0.75};
  PaddedBatch interp = interpolate_batches(real, fake, eps);

  CriticLeaves leaves = make_critic_leaves(w);
  ad::Var pen = gradient_penalty_node(interp, leaves);
  std::vector<ad::Var> grads = ad::backward(pen, leaves.vars);

  Eigen::VectorXd analytic(w.n_params());
  long pos = 0;
  for (const auto& g : grads) {
    const Eigen::MatrixXd& m = g->value;
    for (long c = 0; c < m.cols(); ++c)
      for (long r = 0; r < m.rows(); ++r) analytic(pos++) = m(r, c);
  }

  Eigen::VectorXd flat = w.flatten();
  const double h = 1e-6;
  int checked = 0;
  for (long k = 0; k < flat.size(); k += 7) {  // spot-check a spread of weights
    Eigen::VectorXd fp = flat, fm = flat;
    fp(k) += h;
    fm(k) -= h;
    CriticParams wp = CriticParams::zeros(4), wm = CriticParams::zeros(4);
    wp.unflatten(fp);
    wm.unflatten(fm);
    double fd = (gradient_penalty(real, fake, eps, wp) - gradient_penalty(real, fake, eps, wm)) /
                (2.0 * h);
    CHECK(std::abs(fd - analytic(k)) <= 1e-4 * std::max(1.0, std::abs(fd)));
    ++checked;
  }
  CHECK(checked >= 15);
}

TEST_CASE("shape mismatches in batch assembly are structural errors") {
  auto real = PaddedBatch::from_streams(toy_streams());
  auto fake = PaddedBatch::from_streams({stream_of({{0.1, 0, 0}})});
  CHECK_THROWS_AS((void)interpolate_batches(real, fake, {0.5, 0.5, 0.5, 0.5}), DataError);
  CHECK_THROWS_AS((void)interpolate_batches(real, real, {0.5}), DataError);
}
