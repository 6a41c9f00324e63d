#ifndef HAWKES_WGAN_HPP
#define HAWKES_WGAN_HPP

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "hawkes/critic.hpp"
#include "hawkes/generator.hpp"
#include "hawkes/thinning.hpp"

namespace hawkes {

/// Hyperparameters of the minimax loop.  Defaults follow the gradient-penalty
/// training recipe: lambda = 10, n_critic = 5, Adam(1e-4, 0, 0.9), L = 256.
struct TrainConfig {
  double lambda_gp = 10.0;
  int n_critic = 5;
  double lr = 1e-4;
  double beta1 = 0.0;
  double beta2 = 0.9;
  double theta_lr = 0.0;  // 0 = same as lr
  int batch_size = 256;
  int hidden = 64;
  int max_epochs = 1000;
  int min_epochs = 0;
  // Stop once the window-averaged critic loss changes by less than tol
  // (relatively) over `patience` consecutive windows.
  int convergence_window = 50;
  double convergence_tol = 1e-3;
  int convergence_patience = 3;
  GenConfig gen;  // shape of generated streams, before thinning
  // Which of (log mu, log alpha, log beta, log sigma_sq) the generator
  // updates; clamped coordinates keep their initial values.
  std::array<bool, 4> free_mask{{true, true, true, true}};
  double log_theta_box = 30.0;  // divergence guard on |log theta|
  int checkpoint_every = 0;     // epochs between checkpoint callbacks, 0 = end only

  double generator_lr() const { return theta_lr > 0.0 ? theta_lr : lr; }
  void validate() const;
};

struct EpochStats {
  double critic_loss = 0.0;    // mean penalized critic loss over the epoch
  double wasserstein = 0.0;    // mean f(real) - mean f(fake), last critic step
  double gen_objective = 0.0;  // mean f(fake) seen by the generator step
  ModelParams theta;           // after the epoch's generator update
};

struct TrainRun {
  ModelParams theta_init;
  ModelParams theta_hat;
  std::vector<EpochStats> history;
  double wall_time_s = 0.0;
  std::uint64_t seed = 0;
  int best_epoch = -1;
  long critic_steps = 0;
  long generator_steps = 0;
  std::string status;  // converged | max_epochs | aborted: <reason>
  CriticParams critic;

  bool ok() const { return status == "converged" || status == "max_epochs"; }
};

struct AdamState {
  Eigen::VectorXd m, v;
  long t = 0;
  void init(long n);
};

/// One Adam update, x <- x - lr * mhat / (sqrt(vhat) + 1e-8).
void adam_step(Eigen::VectorXd& x, AdamState& s, const Eigen::VectorXd& grad, double lr,
               double b1, double b2);

/// Snapshot from which training resumes bit-exactly.
struct TrainState {
  std::array<double, 4> log_theta{};
  CriticParams critic;
  AdamState opt_w, opt_theta;
  long epoch = 0;
  TrainRun partial;
};

/// Generated streams with per-event log-parameter Jacobians, after the
/// missingness mechanism (thinning decisions frozen).
struct FakeBatch {
  std::vector<EventStream> streams;
  std::vector<std::vector<EventGrad>> grads;
};
FakeBatch generate_fakes(const ModelParams& theta, const BackgroundConfig& bg,
                         const RegionMap& map, const GenConfig& gen, int count,
                         std::uint64_t batch_seed, bool with_grads);

/// One Adam update of the critic on the penalized loss
/// mean f(fake) - mean f(real) + lambda (||grad f(interp)|| - 1)^2.
/// Returns the loss; optionally reports the Wasserstein estimate.
double critic_step(const PaddedBatch& real, const ModelParams& theta, CriticParams& w,
                   AdamState& opt, const BackgroundConfig& bg, const RegionMap& map,
                   const TrainConfig& cfg, std::uint64_t step_seed,
                   double* wasserstein_out = nullptr);

/// One Adam update of log-theta ascending the critic score of fresh fakes;
/// the critic is untouched.  Gradients are pathwise through the frozen
/// branching structure and thinning masks.
ModelParams generator_step(const ModelParams& theta, const CriticParams& w, AdamState& opt,
                           const BackgroundConfig& bg, const RegionMap& map,
                           const TrainConfig& cfg, std::uint64_t step_seed,
                           double* objective_out = nullptr);

using CheckpointFn = std::function<void(const TrainState&)>;

/// Full alternating loop.  Fresh generator noise every step; real batches
/// sampled without replacement per epoch and reshuffled between epochs;
/// returns the theta snapshot with the best window-averaged Wasserstein
/// estimate.  Divergence (non-finite loss, theta outside the sanity box)
/// aborts with the partial run record instead of throwing.
TrainRun train(const std::vector<EventStream>& data, const RegionMap& map,
               const BackgroundConfig& bg, const ModelParams& theta_init,
               const TrainConfig& cfg, std::uint64_t seed,
               const TrainState* resume = nullptr, const CheckpointFn& on_checkpoint = nullptr);

/// Independent train() per initialization under a shared seed policy.
/// Per-run failures are recorded in the run, not fatal to the sweep.
std::vector<TrainRun> multi_start(const std::vector<EventStream>& data, const RegionMap& map,
                                  const BackgroundConfig& bg,
                                  const std::vector<ModelParams>& inits, const TrainConfig& cfg,
                                  std::uint64_t seed, int jobs = 1);

/// The default initialization grid: {0.5x, 1x, 2x} of a center point, per
/// free coordinate (full factorial over free coordinates only).
std::vector<ModelParams> default_init_grid(const ModelParams& center,
                                           const std::array<bool, 4>& free_mask);

}  // namespace hawkes

#endif
