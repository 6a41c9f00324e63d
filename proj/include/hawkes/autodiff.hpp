#ifndef HAWKES_AUTODIFF_HPP
#define HAWKES_AUTODIFF_HPP

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <unordered_map>
#include <vector>

namespace hawkes::ad {

using Matrix = Eigen::MatrixXd;

struct Node;
using Var = std::shared_ptr<Node>;

/// One value in a define-by-run computation graph.  Values are computed
/// eagerly; vjp builds the parents' gradient contributions *as graph nodes*,
/// so a gradient can itself be differentiated (double backprop, which the
/// gradient-penalty parameter update needs).
struct Node {
  Matrix value;
  bool requires_grad = false;
  std::vector<Var> parents;
  std::function<std::vector<Var>(const Var& upstream)> vjp;
  long id = 0;
};

Var constant(Matrix value);
Var leaf(Matrix value);
Var scalar(double v);

Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var neg(const Var& a);
Var matmul(const Var& a, const Var& b);
Var transpose(const Var& a);
Var cmul(const Var& a, const Var& b);  // elementwise
Var cdiv(const Var& a, const Var& b);  // elementwise
Var scale(const Var& a, double c);
Var add_scalar(const Var& a, double c);
Var sigmoid(const Var& a);
Var tanh_(const Var& a);
Var sqrt_(const Var& a);
Var sum_all(const Var& a);                    // -> 1x1
Var broadcast(const Var& a, long r, long c);  // 1x1 -> r x c
Var row_sum(const Var& a);                    // L x N -> L x 1
Var col_sum(const Var& a);                    // L x N -> 1 x N
Var broadcast_cols(const Var& a, long n);     // L x 1 -> L x n
Var broadcast_rows(const Var& a, long n);     // 1 x N -> n x N
Var add_row(const Var& a, const Var& row);    // L x H + 1 x H

/// Reverse-mode pass from a scalar root.  Returns one gradient Var per
/// requested node (zeros where the root does not depend on it).  The
/// returned Vars live in the same graph and can be differentiated again.
std::vector<Var> backward(const Var& root, const std::vector<Var>& wrt);

}  // namespace hawkes::ad

#endif
