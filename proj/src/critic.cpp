#include "hawkes/critic.hpp"

#include <cmath>

#include "hawkes/rng.hpp"

namespace hawkes {

using ad::Var;

PaddedBatch PaddedBatch::from_streams(const std::vector<EventStream>& streams) {
  long l = static_cast<long>(streams.size());
  long n = 0;
  for (const auto& s : streams) n = std::max<long>(n, static_cast<long>(s.size()));
  PaddedBatch b;
  b.t = Eigen::MatrixXd::Zero(l, n);
  b.x = Eigen::MatrixXd::Zero(l, n);
  b.y = Eigen::MatrixXd::Zero(l, n);
  b.mask = Eigen::MatrixXd::Zero(l, n);
  b.lengths.resize(streams.size());
  for (long j = 0; j < l; ++j) {
    const auto& ev = streams[static_cast<std::size_t>(j)].events;
    b.lengths[static_cast<std::size_t>(j)] = static_cast<int>(ev.size());
    for (long i = 0; i < static_cast<long>(ev.size()); ++i) {
      b.t(j, i) = ev[static_cast<std::size_t>(i)].t;
      b.x(j, i) = ev[static_cast<std::size_t>(i)].x;
      b.y(j, i) = ev[static_cast<std::size_t>(i)].y;
      b.mask(j, i) = 1.0;
    }
  }
  return b;
}

PaddedBatch PaddedBatch::repad(long n) const {
  if (n <= width()) {
    if (n < width()) {
      // Only allowed when the dropped columns are pure padding.
      for (long j = 0; j < streams(); ++j)
        if (lengths[static_cast<std::size_t>(j)] > n)
          throw DataError("PaddedBatch::repad: would drop real events");
    } else {
      return *this;
    }
  }
  PaddedBatch b;
  long l = streams();
  b.t = Eigen::MatrixXd::Zero(l, n);
  b.x = Eigen::MatrixXd::Zero(l, n);
  b.y = Eigen::MatrixXd::Zero(l, n);
  b.mask = Eigen::MatrixXd::Zero(l, n);
  long keep = std::min(n, width());
  b.t.leftCols(keep) = t.leftCols(keep);
  b.x.leftCols(keep) = x.leftCols(keep);
  b.y.leftCols(keep) = y.leftCols(keep);
  b.mask.leftCols(keep) = mask.leftCols(keep);
  b.lengths = lengths;
  return b;
}

void PaddedBatch::validate() const {
  long l = streams(), n = width();
  auto same = [&](const Eigen::MatrixXd& m) { return m.rows() == l && m.cols() == n; };
  if (!same(x) || !same(y) || !same(mask) || lengths.size() != static_cast<std::size_t>(l))
    throw DataError("PaddedBatch: inconsistent shapes");
  for (long j = 0; j < l; ++j) {
    int len = lengths[static_cast<std::size_t>(j)];
    if (len < 0 || len > n) throw DataError("PaddedBatch: length out of range");
    for (long i = 0; i < n; ++i) {
      double m = mask(j, i);
      if (m != 0.0 && m != 1.0) throw DataError("PaddedBatch: non-boolean mask");
      bool real = i < len;
      if (real != (m == 1.0)) throw DataError("PaddedBatch: mask is not a prefix mask");
      if (!real && (t(j, i) != 0.0 || x(j, i) != 0.0 || y(j, i) != 0.0))
        throw DataError("PaddedBatch: padded positions must be exactly zero");
    }
  }
}

namespace {

Eigen::MatrixXd glorot(long rows, long cols, const BaseNoise& noise, std::uint64_t& idx) {
  double a = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Eigen::MatrixXd m(rows, cols);
  for (long r = 0; r < rows; ++r)
    for (long c = 0; c < cols; ++c)
      m(r, c) = a * (2.0 * noise.uniform(Channel::CriticInit, idx++) - 1.0);
  return m;
}

}  // namespace

CriticParams CriticParams::init(int hidden, std::uint64_t seed) {
  CriticParams w;
  w.hidden = hidden;
  BaseNoise noise(seed);
  std::uint64_t idx = 0;
  for (int g = 0; g < 4; ++g) {
    w.w_t[g] = glorot(1, hidden, noise, idx);
    w.w_x[g] = glorot(1, hidden, noise, idx);
    w.w_y[g] = glorot(1, hidden, noise, idx);
    w.w_h[g] = glorot(hidden, hidden, noise, idx);
    w.b[g] = Eigen::MatrixXd::Zero(1, hidden);
  }
  w.w_out = glorot(hidden, 1, noise, idx);
  w.b_out = Eigen::MatrixXd::Zero(1, 1);
  return w;
}

CriticParams CriticParams::zeros(int hidden) {
  CriticParams w;
  w.hidden = hidden;
  for (int g = 0; g < 4; ++g) {
    w.w_t[g] = Eigen::MatrixXd::Zero(1, hidden);
    w.w_x[g] = Eigen::MatrixXd::Zero(1, hidden);
    w.w_y[g] = Eigen::MatrixXd::Zero(1, hidden);
    w.w_h[g] = Eigen::MatrixXd::Zero(hidden, hidden);
    w.b[g] = Eigen::MatrixXd::Zero(1, hidden);
  }
  w.w_out = Eigen::MatrixXd::Zero(hidden, 1);
  w.b_out = Eigen::MatrixXd::Zero(1, 1);
  return w;
}

long CriticParams::n_params() const {
  long h = hidden;
  return 4 * (3 * h + h * h + h) + h + 1;
}

namespace {

template <typename Fn>
void for_each_matrix(CriticParams& w, Fn fn) {
  for (int g = 0; g < 4; ++g) {
    fn(w.w_t[g]);
    fn(w.w_x[g]);
    fn(w.w_y[g]);
    fn(w.w_h[g]);
    fn(w.b[g]);
  }
  fn(w.w_out);
  fn(w.b_out);
}

template <typename Fn>
void for_each_matrix(const CriticParams& w, Fn fn) {
  for (int g = 0; g < 4; ++g) {
    fn(w.w_t[g]);
    fn(w.w_x[g]);
    fn(w.w_y[g]);
    fn(w.w_h[g]);
    fn(w.b[g]);
  }
  fn(w.w_out);
  fn(w.b_out);
}

}  // namespace

Eigen::VectorXd CriticParams::flatten() const {
  Eigen::VectorXd v(n_params());
  long pos = 0;
  for_each_matrix(*this, [&](const Eigen::MatrixXd& m) {
    for (long c = 0; c < m.cols(); ++c)
      for (long r = 0; r < m.rows(); ++r) v(pos++) = m(r, c);
  });
  return v;
}

void CriticParams::unflatten(const Eigen::VectorXd& v) {
  if (v.size() != n_params()) throw DataError("CriticParams::unflatten: size mismatch");
  long pos = 0;
  for_each_matrix(*this, [&](Eigen::MatrixXd& m) {
    for (long c = 0; c < m.cols(); ++c)
      for (long r = 0; r < m.rows(); ++r) m(r, c) = v(pos++);
  });
}

void CriticParams::validate() const {
  bool ok = true;
  for_each_matrix(*this, [&](const Eigen::MatrixXd& m) { ok = ok && m.allFinite(); });
  if (!ok) throw NumericalError("CriticParams: non-finite weights");
}

CriticLeaves make_critic_leaves(const CriticParams& w) {
  w.validate();
  CriticLeaves out;
  out.hidden = w.hidden;
  for_each_matrix(w, [&](const Eigen::MatrixXd& m) { out.vars.push_back(ad::leaf(m)); });
  return out;
}

CriticGraph build_critic_graph(const PaddedBatch& batch, const CriticLeaves& leaves,
                               bool inputs_require_grad) {
  batch.validate();
  const long l = batch.streams();
  const long n = batch.width();
  const long h = leaves.hidden;
  if (leaves.vars.size() != 22) throw DataError("critic graph: bad parameter leaves");

  // Leaves in flatten order: per gate (w_t, w_x, w_y, w_h, b), then head.
  auto wt = [&](int g) { return leaves.vars[static_cast<std::size_t>(5 * g + 0)]; };
  auto wx = [&](int g) { return leaves.vars[static_cast<std::size_t>(5 * g + 1)]; };
  auto wy = [&](int g) { return leaves.vars[static_cast<std::size_t>(5 * g + 2)]; };
  auto wh = [&](int g) { return leaves.vars[static_cast<std::size_t>(5 * g + 3)]; };
  auto bb = [&](int g) { return leaves.vars[static_cast<std::size_t>(5 * g + 4)]; };
  Var w_out = leaves.vars[20];
  Var b_out = leaves.vars[21];

  CriticGraph graph;
  Var prev_h = ad::constant(Eigen::MatrixXd::Zero(l, h));
  Var prev_c = prev_h;
  Var score = ad::constant(Eigen::MatrixXd::Zero(l, 1));
  Var prev_t;

  for (long step = 0; step < n; ++step) {
    Var tt = inputs_require_grad ? ad::leaf(batch.t.col(step)) : ad::constant(batch.t.col(step));
    Var xt = inputs_require_grad ? ad::leaf(batch.x.col(step)) : ad::constant(batch.x.col(step));
    Var yt = inputs_require_grad ? ad::leaf(batch.y.col(step)) : ad::constant(batch.y.col(step));
    graph.t_in.push_back(tt);
    graph.x_in.push_back(xt);
    graph.y_in.push_back(yt);

    Var dt = prev_t ? ad::sub(tt, prev_t) : tt;
    prev_t = tt;

    auto pre = [&](int g) {
      Var s = ad::add(ad::add(ad::matmul(dt, wt(g)), ad::matmul(xt, wx(g))),
                      ad::add(ad::matmul(yt, wy(g)), ad::matmul(prev_h, wh(g))));
      return ad::add_row(s, bb(g));
    };
    Var gi = ad::sigmoid(pre(0));
    Var gf = ad::sigmoid(pre(1));
    Var gc = ad::tanh_(pre(2));
    Var go = ad::sigmoid(pre(3));

    Var c_new = ad::add(ad::cmul(gf, prev_c), ad::cmul(gi, gc));
    Var h_new = ad::cmul(go, ad::tanh_(c_new));

    Eigen::MatrixXd mcol = batch.mask.col(step);
    Var mask_h = ad::constant(mcol.replicate(1, h));
    Var inv_mask_h = ad::constant((1.0 - mcol.array()).matrix().replicate(1, h));
    prev_c = ad::add(ad::cmul(mask_h, c_new), ad::cmul(inv_mask_h, prev_c));
    prev_h = ad::add(ad::cmul(mask_h, h_new), ad::cmul(inv_mask_h, prev_h));

    Var contrib = ad::cmul(ad::constant(mcol), ad::add_row(ad::matmul(prev_h, w_out), b_out));
    score = ad::add(score, contrib);
  }
  graph.scores = score;
  return graph;
}

Eigen::VectorXd critic_forward(const PaddedBatch& batch, const CriticParams& w) {
  CriticLeaves leaves = make_critic_leaves(w);
  CriticGraph g = build_critic_graph(batch, leaves, false);
  return g.scores->value.col(0);
}

InputGrads critic_input_gradients(const PaddedBatch& batch, const CriticParams& w) {
  CriticLeaves leaves = make_critic_leaves(w);
  CriticGraph g = build_critic_graph(batch, leaves, true);
  std::vector<Var> wrt;
  for (long s = 0; s < batch.width(); ++s) {
    wrt.push_back(g.t_in[static_cast<std::size_t>(s)]);
    wrt.push_back(g.x_in[static_cast<std::size_t>(s)]);
    wrt.push_back(g.y_in[static_cast<std::size_t>(s)]);
  }
  std::vector<Var> grads = ad::backward(ad::sum_all(g.scores), wrt);
  InputGrads out;
  out.t = Eigen::MatrixXd::Zero(batch.streams(), batch.width());
  out.x = out.t;
  out.y = out.t;
  for (long s = 0; s < batch.width(); ++s) {
    out.t.col(s) = grads[static_cast<std::size_t>(3 * s + 0)]->value;
    out.x.col(s) = grads[static_cast<std::size_t>(3 * s + 1)]->value;
    out.y.col(s) = grads[static_cast<std::size_t>(3 * s + 2)]->value;
  }
  return out;
}

PaddedBatch interpolate_batches(const PaddedBatch& real, const PaddedBatch& fake,
                                const std::vector<double>& eps) {
  if (real.streams() != fake.streams())
    throw DataError("interpolate_batches: stream count mismatch");
  if (eps.size() != static_cast<std::size_t>(real.streams()))
    throw DataError("interpolate_batches: eps size mismatch");
  long n = std::max(real.width(), fake.width());
  PaddedBatch a = real.repad(n);
  PaddedBatch b = fake.repad(n);
  PaddedBatch out;
  long l = a.streams();
  out.t = Eigen::MatrixXd::Zero(l, n);
  out.x = Eigen::MatrixXd::Zero(l, n);
  out.y = Eigen::MatrixXd::Zero(l, n);
  out.mask = Eigen::MatrixXd::Zero(l, n);
  out.lengths.resize(static_cast<std::size_t>(l));
  for (long j = 0; j < l; ++j) {
    double e = eps[static_cast<std::size_t>(j)];
    if (!(e >= 0.0 && e <= 1.0)) throw DataError("interpolate_batches: eps outside [0,1]");
    // Masks intersected: active where both streams have a real event.
    int len = std::min(a.lengths[static_cast<std::size_t>(j)],
                       b.lengths[static_cast<std::size_t>(j)]);
    out.lengths[static_cast<std::size_t>(j)] = len;
    for (long i = 0; i < len; ++i) {
      out.t(j, i) = e * a.t(j, i) + (1.0 - e) * b.t(j, i);
      out.x(j, i) = e * a.x(j, i) + (1.0 - e) * b.x(j, i);
      out.y(j, i) = e * a.y(j, i) + (1.0 - e) * b.y(j, i);
      out.mask(j, i) = 1.0;
    }
  }
  return out;
}

ad::Var gradient_penalty_node(const PaddedBatch& interp, const CriticLeaves& leaves) {
  CriticGraph g = build_critic_graph(interp, leaves, true);
  std::vector<Var> wrt;
  for (long s = 0; s < interp.width(); ++s) {
    wrt.push_back(g.t_in[static_cast<std::size_t>(s)]);
    wrt.push_back(g.x_in[static_cast<std::size_t>(s)]);
    wrt.push_back(g.y_in[static_cast<std::size_t>(s)]);
  }
  std::vector<Var> grads = ad::backward(ad::sum_all(g.scores), wrt);

  long l = interp.streams();
  Var norm_sq = ad::constant(Eigen::MatrixXd::Zero(l, 1));
  for (const auto& gv : grads) norm_sq = ad::add(norm_sq, ad::cmul(gv, gv));
  // The epsilon keeps sqrt differentiable when a stream's gradient vanishes.
  Var norm = ad::sqrt_(ad::add_scalar(norm_sq, 1e-12));
  Var dev = ad::add_scalar(norm, -1.0);
  return ad::scale(ad::sum_all(ad::cmul(dev, dev)), 1.0 / static_cast<double>(l));
}

double gradient_penalty(const PaddedBatch& real, const PaddedBatch& fake,
                        const std::vector<double>& eps, const CriticParams& w) {
  PaddedBatch interp = interpolate_batches(real, fake, eps);
  CriticLeaves leaves = make_critic_leaves(w);
  return gradient_penalty_node(interp, leaves)->value(0, 0);
}

}  // namespace hawkes
