#ifndef HAWKES_CRITIC_HPP
#define HAWKES_CRITIC_HPP

#include <array>
#include <cstdint>
#include <vector>

#include "hawkes/autodiff.hpp"
#include "hawkes/model.hpp"

namespace hawkes {

/// Fixed-shape batch of L streams padded to a common length with a prefix
/// mask.  Padded positions hold exact zeros and never influence scores.
struct PaddedBatch {
  Eigen::MatrixXd t, x, y;  // L x N
  Eigen::MatrixXd mask;     // L x N, one for real events
  std::vector<int> lengths;

  long streams() const { return t.rows(); }
  long width() const { return t.cols(); }

  static PaddedBatch from_streams(const std::vector<EventStream>& streams);
  /// Same content padded to at least n columns.
  PaddedBatch repad(long n) const;
  void validate() const;
};

/// Recurrent critic f_w: a gated (LSTM) cell over per-step inputs
/// (t_i - t_{i-1}, x_i, y_i) with an affine output head summed over real
/// positions.  The head stays affine so scores are unbounded.
struct CriticParams {
  int hidden = 64;
  // Gate order: input, forget, candidate, output.
  std::array<Eigen::MatrixXd, 4> w_t, w_x, w_y;  // 1 x H
  std::array<Eigen::MatrixXd, 4> w_h;            // H x H
  std::array<Eigen::MatrixXd, 4> b;              // 1 x H
  Eigen::MatrixXd w_out;  // H x 1
  Eigen::MatrixXd b_out;  // 1 x 1

  static CriticParams init(int hidden, std::uint64_t seed);
  static CriticParams zeros(int hidden);

  long n_params() const;
  Eigen::VectorXd flatten() const;
  void unflatten(const Eigen::VectorXd& v);
  void validate() const;
};

/// Parameter leaves shared across the graphs of one optimization step, in
/// flatten() order.
struct CriticLeaves {
  std::vector<ad::Var> vars;
  int hidden = 0;
};
CriticLeaves make_critic_leaves(const CriticParams& w);

struct CriticGraph {
  ad::Var scores;                                   // L x 1
  std::vector<ad::Var> t_in, x_in, y_in;            // per-step L x 1 leaves
};

/// Builds the recurrent scoring graph over a batch.  Hidden state is not
/// updated on padded steps and padded contributions are exactly zero.
CriticGraph build_critic_graph(const PaddedBatch& batch, const CriticLeaves& leaves,
                               bool inputs_require_grad);

/// Scores only (one scalar per stream).
Eigen::VectorXd critic_forward(const PaddedBatch& batch, const CriticParams& w);

struct InputGrads {
  Eigen::MatrixXd t, x, y;  // L x N, zero at padded positions
};

/// d(sum of scores)/d(inputs); rows are per-stream score gradients.
InputGrads critic_input_gradients(const PaddedBatch& batch, const CriticParams& w);

/// Position-wise interpolation eps*real + (1-eps)*fake on the per-stream
/// common mask prefix.
PaddedBatch interpolate_batches(const PaddedBatch& real, const PaddedBatch& fake,
                                const std::vector<double>& eps);

/// Gradient-penalty node mean((||grad f_w||_2 - 1)^2) over the batch, built
/// with a differentiable inner backward pass so its parameter gradient is
/// available via a second backward.
ad::Var gradient_penalty_node(const PaddedBatch& interp, const CriticLeaves& leaves);

/// Numeric penalty for an interpolated pair.
double gradient_penalty(const PaddedBatch& real, const PaddedBatch& fake,
                        const std::vector<double>& eps, const CriticParams& w);

}  // namespace hawkes

#endif
