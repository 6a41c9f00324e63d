#include "hawkes/wgan.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include "hawkes/parallel.hpp"

namespace hawkes {

void TrainConfig::validate() const {
  if (lambda_gp < 0.0) throw ConfigError("TrainConfig: lambda_gp must be nonnegative");
  if (n_critic <= 0) throw ConfigError("TrainConfig: n_critic must be positive");
  if (!(lr > 0.0)) throw ConfigError("TrainConfig: lr must be positive");
  if (batch_size <= 0) throw ConfigError("TrainConfig: batch_size must be positive");
  if (hidden <= 0) throw ConfigError("TrainConfig: hidden must be positive");
  if (max_epochs < 0) throw ConfigError("TrainConfig: max_epochs must be nonnegative");
  if (convergence_window <= 0 || convergence_patience <= 0)
    throw ConfigError("TrainConfig: convergence window/patience must be positive");
  gen.validate();
}

void AdamState::init(long n) {
  m = Eigen::VectorXd::Zero(n);
  v = Eigen::VectorXd::Zero(n);
  t = 0;
}

void adam_step(Eigen::VectorXd& x, AdamState& s, const Eigen::VectorXd& grad, double lr,
               double b1, double b2) {
  if (s.m.size() != grad.size()) s.init(grad.size());
  ++s.t;
  s.m = b1 * s.m + (1.0 - b1) * grad;
  s.v = b2 * s.v.array().matrix() + (1.0 - b2) * grad.array().square().matrix();
  double mc = 1.0 - std::pow(b1, static_cast<double>(s.t));
  double vc = 1.0 - std::pow(b2, static_cast<double>(s.t));
  x -= (lr * (s.m / mc).array() / ((s.v / vc).array().sqrt() + 1e-8)).matrix();
}

FakeBatch generate_fakes(const ModelParams& theta, const BackgroundConfig& bg,
                         const RegionMap& map, const GenConfig& gen, int count,
                         std::uint64_t batch_seed, bool with_grads) {
  FakeBatch out;
  out.streams.resize(static_cast<std::size_t>(count));
  out.grads.resize(static_cast<std::size_t>(count));
  GenConfig cfg = gen;
  cfg.with_gradients = with_grads;
  for (int j = 0; j < count; ++j) {
    BaseNoise noise(mix_key(batch_seed, static_cast<std::uint64_t>(Channel::Generic),
                            static_cast<std::uint64_t>(j)));
    SimResult sim = simulate_stream_traced(theta, bg, noise, cfg);
    std::vector<std::uint8_t> mask = thinning_mask(sim.stream, map, noise);
    EventStream thinned;
    thinned.horizon = sim.stream.horizon;
    thinned.truncation_count = sim.stream.truncation_count;
    std::vector<EventGrad> kept;
    for (std::size_t i = 0; i < sim.stream.events.size(); ++i) {
      if (!mask[i]) continue;
      Event ev = sim.stream.events[i];
      ev.parent_index = -1;  // ancestry is meaningless on reported-only data
      thinned.events.push_back(ev);
      if (with_grads) kept.push_back(sim.grads[i]);
    }
    out.streams[static_cast<std::size_t>(j)] = std::move(thinned);
    out.grads[static_cast<std::size_t>(j)] = std::move(kept);
  }
  return out;
}

double critic_step(const PaddedBatch& real, const ModelParams& theta, CriticParams& w,
                   AdamState& opt, const BackgroundConfig& bg, const RegionMap& map,
                   const TrainConfig& cfg, std::uint64_t step_seed, double* wasserstein_out) {
  const long l = real.streams();
  FakeBatch fakes = generate_fakes(theta, bg, map, cfg.gen, static_cast<int>(l), step_seed,
                                   false);
  PaddedBatch fake = PaddedBatch::from_streams(fakes.streams);
  long n = std::max(real.width(), fake.width());
  PaddedBatch real2 = real.repad(n);
  PaddedBatch fake2 = fake.repad(n);

  BaseNoise noise(step_seed);
  std::vector<double> eps(static_cast<std::size_t>(l));
  for (long j = 0; j < l; ++j)
    eps[static_cast<std::size_t>(j)] = noise.uniform(Channel::Interp, static_cast<std::uint64_t>(j));
  PaddedBatch interp = interpolate_batches(real2, fake2, eps);

  CriticLeaves leaves = make_critic_leaves(w);
  CriticGraph g_fake = build_critic_graph(fake2, leaves, false);
  CriticGraph g_real = build_critic_graph(real2, leaves, false);
  ad::Var penalty = gradient_penalty_node(interp, leaves);

  double inv_l = 1.0 / static_cast<double>(l);
  ad::Var loss = ad::add(
      ad::sub(ad::scale(ad::sum_all(g_fake.scores), inv_l),
              ad::scale(ad::sum_all(g_real.scores), inv_l)),
      ad::scale(penalty, cfg.lambda_gp));

  double loss_value = loss->value(0, 0);
  if (!std::isfinite(loss_value)) throw NumericalError("critic_step: non-finite loss");
  if (wasserstein_out)
    *wasserstein_out =
        (g_real.scores->value.mean()) - (g_fake.scores->value.mean());

  std::vector<ad::Var> grads = ad::backward(loss, leaves.vars);
  Eigen::VectorXd flat_grad(w.n_params());
  long pos = 0;
  for (const auto& gv : grads) {
    const Eigen::MatrixXd& m = gv->value;
    for (long c = 0; c < m.cols(); ++c)
      for (long r = 0; r < m.rows(); ++r) flat_grad(pos++) = m(r, c);
  }
  if (!flat_grad.allFinite()) throw NumericalError("critic_step: non-finite gradient");

  Eigen::VectorXd flat = w.flatten();
  adam_step(flat, opt, flat_grad, cfg.lr, cfg.beta1, cfg.beta2);
  w.unflatten(flat);
  return loss_value;
}

ModelParams generator_step(const ModelParams& theta, const CriticParams& w, AdamState& opt,
                           const BackgroundConfig& bg, const RegionMap& map,
                           const TrainConfig& cfg, std::uint64_t step_seed,
                           double* objective_out) {
  const int l = cfg.batch_size;
  FakeBatch fakes = generate_fakes(theta, bg, map, cfg.gen, l, step_seed, true);
  PaddedBatch batch = PaddedBatch::from_streams(fakes.streams);
  InputGrads in_grads = critic_input_gradients(batch, w);

  if (objective_out) *objective_out = critic_forward(batch, w).mean();

  // Chain rule: d mean f / d log theta_k = (1/L) sum_j sum_i grad . jacobian.
  Eigen::VectorXd glog = Eigen::VectorXd::Zero(4);
  for (std::size_t j = 0; j < fakes.streams.size(); ++j) {
    const auto& grads = fakes.grads[j];
    for (std::size_t i = 0; i < grads.size(); ++i) {
      long jj = static_cast<long>(j), ii = static_cast<long>(i);
      for (int k = 0; k < 4; ++k)
        glog(k) += in_grads.t(jj, ii) * grads[i].dt[k] + in_grads.x(jj, ii) * grads[i].dx[k] +
                   in_grads.y(jj, ii) * grads[i].dy[k];
    }
  }
  glog /= static_cast<double>(l);
  if (!glog.allFinite()) throw NumericalError("generator_step: non-finite gradient");

  // Descend -mean f(fake) in log space; clamped coordinates stay put.
  Eigen::VectorXd log_theta(4);
  log_theta << std::log(theta.mu), std::log(theta.alpha), std::log(theta.beta),
      std::log(theta.sigma_sq);
  Eigen::VectorXd obj_grad = -glog;
  for (int k = 0; k < 4; ++k)
    if (!cfg.free_mask[static_cast<std::size_t>(k)]) obj_grad(k) = 0.0;
  adam_step(log_theta, opt, obj_grad, cfg.generator_lr(), cfg.beta1, cfg.beta2);
  for (int k = 0; k < 4; ++k)
    if (!cfg.free_mask[static_cast<std::size_t>(k)])
      log_theta(k) = (k == 0   ? std::log(theta.mu)
                      : k == 1 ? std::log(theta.alpha)
                      : k == 2 ? std::log(theta.beta)
                               : std::log(theta.sigma_sq));

  return ModelParams(std::exp(log_theta(0)), std::exp(log_theta(1)), std::exp(log_theta(2)),
                     std::exp(log_theta(3)));
}

namespace {

// Epoch-keyed shuffled cursor over the training streams: without replacement
// within a pass, reshuffled on exhaustion.
class BatchCursor {
 public:
  BatchCursor(std::size_t count, std::uint64_t seed) : seed_(seed), order_(count) {
    reshuffle();
  }

  std::vector<std::size_t> next(std::size_t l) {
    std::vector<std::size_t> out;
    out.reserve(l);
    while (out.size() < l) {
      if (pos_ == order_.size()) reshuffle();
      out.push_back(order_[pos_++]);
    }
    return out;
  }

 private:
  void reshuffle() {
    for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = i;
    BaseNoise noise(seed_);
    for (std::size_t i = order_.size(); i > 1; --i) {
      std::uint64_t key = splitmix64(round_) ^ static_cast<std::uint64_t>(i);
      auto j = static_cast<std::size_t>(noise.uniform(Channel::Shuffle, key) *
                                        static_cast<double>(i));
      if (j >= i) j = i - 1;
      std::swap(order_[i - 1], order_[j]);
    }
    ++round_;
    pos_ = 0;
  }

  std::uint64_t seed_;
  std::uint64_t round_ = 0;
  std::vector<std::size_t> order_;
  std::size_t pos_ = 0;
};

double window_mean(const std::vector<EpochStats>& h, std::size_t end, std::size_t w,
                   double EpochStats::*field) {
  double s = 0.0;
  for (std::size_t i = end + 1 - w; i <= end; ++i) s += h[i].*field;
  return s / static_cast<double>(w);
}

}  // namespace

TrainRun train(const std::vector<EventStream>& data, const RegionMap& map,
               const BackgroundConfig& bg, const ModelParams& theta_init,
               const TrainConfig& cfg, std::uint64_t seed, const TrainState* resume,
               const CheckpointFn& on_checkpoint) {
  cfg.validate();
  theta_init.validate();
  map.validate();
  if (data.empty()) throw DataError("train: empty training data");

  auto t_start = std::chrono::steady_clock::now();

  TrainRun run;
  ModelParams theta = theta_init;
  CriticParams w = CriticParams::init(cfg.hidden, mix_key(seed, 7, 0));
  AdamState opt_w, opt_theta;
  long start_epoch = 0;

  if (resume) {
    theta = ModelParams(std::exp(resume->log_theta[0]), std::exp(resume->log_theta[1]),
                        std::exp(resume->log_theta[2]), std::exp(resume->log_theta[3]));
    w = resume->critic;
    opt_w = resume->opt_w;
    opt_theta = resume->opt_theta;
    start_epoch = resume->epoch;
    run = resume->partial;
  } else {
    run.theta_init = theta_init;
    run.seed = seed;
  }
  run.status = "max_epochs";

  // The cursor replays every epoch from the start so resumed runs see the
  // same batch sequence as uninterrupted ones.
  BatchCursor cursor(data.size(), mix_key(seed, 11, 0));
  if (start_epoch > 0) {
    for (long e = 0; e < start_epoch; ++e)
      for (int k = 0; k < cfg.n_critic; ++k) cursor.next(static_cast<std::size_t>(cfg.batch_size));
  }

  double best_metric = std::numeric_limits<double>::infinity();
  ModelParams theta_best = theta;
  int conv_streak = 0;
  double prev_window_loss = std::numeric_limits<double>::quiet_NaN();
  // Recover best/convergence bookkeeping over resumed history.
  const std::size_t wnd = static_cast<std::size_t>(cfg.convergence_window);

  auto scan_epoch = [&](std::size_t e) {
    if (e + 1 >= wnd) {
      double wavg = window_mean(run.history, e, wnd, &EpochStats::wasserstein);
      if (wavg < best_metric) {
        best_metric = wavg;
        run.best_epoch = static_cast<int>(e);
        theta_best = run.history[e].theta;
      }
    }
    if ((e + 1) % wnd == 0) {
      double lavg = window_mean(run.history, e, wnd, &EpochStats::critic_loss);
      if (!std::isnan(prev_window_loss)) {
        double rel = std::abs(lavg - prev_window_loss) / std::max(std::abs(prev_window_loss), 1e-12);
        conv_streak = rel < cfg.convergence_tol ? conv_streak + 1 : 0;
      }
      prev_window_loss = lavg;
    }
  };
  for (std::size_t e = 0; e < run.history.size(); ++e) scan_epoch(e);

  long epoch = start_epoch;
  try {
    for (; epoch < cfg.max_epochs; ++epoch) {
      EpochStats stats;
      double loss_sum = 0.0;
      for (int k = 0; k < cfg.n_critic; ++k) {
        std::vector<std::size_t> idx = cursor.next(static_cast<std::size_t>(cfg.batch_size));
        std::vector<EventStream> real_streams;
        real_streams.reserve(idx.size());
        for (std::size_t id : idx) real_streams.push_back(data[id]);
        PaddedBatch real = PaddedBatch::from_streams(real_streams);
        std::uint64_t step_seed =
            mix_key(seed, 101, static_cast<std::uint64_t>(epoch) *
                                       static_cast<std::uint64_t>(cfg.n_critic + 1) +
                                   static_cast<std::uint64_t>(k));
        double wass = 0.0;
        loss_sum += critic_step(real, theta, w, opt_w, bg, map, cfg, step_seed, &wass);
        stats.wasserstein = wass;
        ++run.critic_steps;
      }
      std::uint64_t gen_seed =
          mix_key(seed, 102, static_cast<std::uint64_t>(epoch));
      theta = generator_step(theta, w, opt_theta, bg, map, cfg, gen_seed, &stats.gen_objective);
      ++run.generator_steps;

      for (double v : {std::log(theta.mu), std::log(theta.alpha), std::log(theta.beta),
                       std::log(theta.sigma_sq)})
        if (!std::isfinite(v) || std::abs(v) > cfg.log_theta_box)
          throw NumericalError("train: theta left the sanity box");

      stats.critic_loss = loss_sum / cfg.n_critic;
      stats.theta = theta;
      run.history.push_back(stats);
      scan_epoch(run.history.size() - 1);

      if (on_checkpoint && cfg.checkpoint_every > 0 &&
          (epoch + 1) % cfg.checkpoint_every == 0) {
        TrainState st;
        st.log_theta = {std::log(theta.mu), std::log(theta.alpha), std::log(theta.beta),
                        std::log(theta.sigma_sq)};
        st.critic = w;
        st.opt_w = opt_w;
        st.opt_theta = opt_theta;
        st.epoch = epoch + 1;
        st.partial = run;
        on_checkpoint(st);
      }

      if (conv_streak >= cfg.convergence_patience && epoch + 1 >= cfg.min_epochs) {
        run.status = "converged";
        ++epoch;
        break;
      }
    }
  } catch (const std::exception& ex) {
    run.status = std::string("aborted: ") + ex.what() + " (epoch " + std::to_string(epoch) + ")";
  }

  run.theta_hat = run.best_epoch >= 0 ? theta_best : theta;
  run.critic = w;
  run.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();

  if (on_checkpoint) {
    TrainState st;
    st.log_theta = {std::log(theta.mu), std::log(theta.alpha), std::log(theta.beta),
                    std::log(theta.sigma_sq)};
    st.critic = w;
    st.opt_w = opt_w;
    st.opt_theta = opt_theta;
    st.epoch = epoch;
    st.partial = run;
    on_checkpoint(st);
  }
  return run;
}

std::vector<TrainRun> multi_start(const std::vector<EventStream>& data, const RegionMap& map,
                                  const BackgroundConfig& bg,
                                  const std::vector<ModelParams>& inits, const TrainConfig& cfg,
                                  std::uint64_t seed, int jobs) {
  std::vector<TrainRun> runs(inits.size());
  parallel_for(inits.size(), jobs, [&](std::size_t i) {
    try {
      runs[i] = train(data, map, bg, inits[i], cfg, seed);
    } catch (const std::exception& ex) {
      runs[i].theta_init = inits[i];
      runs[i].theta_hat = inits[i];
      runs[i].seed = seed;
      runs[i].status = std::string("aborted: ") + ex.what();
    }
  });
  return runs;
}

std::vector<ModelParams> default_init_grid(const ModelParams& center,
                                           const std::array<bool, 4>& free_mask) {
  const std::array<double, 3> scales{{0.5, 1.0, 2.0}};
  std::vector<ModelParams> grid;
  auto levels = [&](int k) { return free_mask[static_cast<std::size_t>(k)] ? 3 : 1; };
  for (int a = 0; a < levels(0); ++a)
    for (int b = 0; b < levels(1); ++b)
      for (int c = 0; c < levels(2); ++c)
        for (int d = 0; d < levels(3); ++d) {
          ModelParams p = center;
          if (free_mask[0]) p.mu *= scales[static_cast<std::size_t>(a)];
          if (free_mask[1]) p.alpha *= scales[static_cast<std::size_t>(b)];
          if (free_mask[2]) p.beta *= scales[static_cast<std::size_t>(c)];
          if (free_mask[3]) p.sigma_sq *= scales[static_cast<std::size_t>(d)];
          grid.push_back(p);
        }
  return grid;
}

}  // namespace hawkes
