#include "hawkes/autodiff.hpp"

#include <algorithm>
#include <atomic>

#include "hawkes/errors.hpp"

namespace hawkes::ad {

namespace {

std::atomic<long> g_next_id{1};

Var make_node(Matrix value, std::vector<Var> parents,
              std::function<std::vector<Var>(const Var&)> vjp) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->parents = std::move(parents);
  n->vjp = std::move(vjp);
  n->id = g_next_id.fetch_add(1);
  for (const auto& p : n->parents)
    if (p && p->requires_grad) n->requires_grad = true;
  return n;
}

void check_same_shape(const Var& a, const Var& b, const char* op) {
  if (a->value.rows() != b->value.rows() || a->value.cols() != b->value.cols())
    throw DataError(std::string(op) + ": shape mismatch");
}

}  // namespace

Var constant(Matrix value) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->id = g_next_id.fetch_add(1);
  return n;
}

Var leaf(Matrix value) {
  auto n = constant(std::move(value));
  n->requires_grad = true;
  return n;
}

Var scalar(double v) {
  Matrix m(1, 1);
  m(0, 0) = v;
  return constant(std::move(m));
}

Var add(const Var& a, const Var& b) {
  check_same_shape(a, b, "add");
  return make_node(a->value + b->value, {a, b},
                   [](const Var& g) { return std::vector<Var>{g, g}; });
}

Var sub(const Var& a, const Var& b) {
  check_same_shape(a, b, "sub");
  return make_node(a->value - b->value, {a, b},
                   [](const Var& g) { return std::vector<Var>{g, neg(g)}; });
}

Var neg(const Var& a) {
  return make_node(-a->value, {a}, [](const Var& g) { return std::vector<Var>{neg(g)}; });
}

Var matmul(const Var& a, const Var& b) {
  if (a->value.cols() != b->value.rows()) throw DataError("matmul: inner dimension mismatch");
  return make_node(a->value * b->value, {a, b}, [a, b](const Var& g) {
    return std::vector<Var>{matmul(g, transpose(b)), matmul(transpose(a), g)};
  });
}

Var transpose(const Var& a) {
  return make_node(a->value.transpose(), {a},
                   [](const Var& g) { return std::vector<Var>{transpose(g)}; });
}

Var cmul(const Var& a, const Var& b) {
  check_same_shape(a, b, "cmul");
  return make_node(a->value.cwiseProduct(b->value), {a, b}, [a, b](const Var& g) {
    return std::vector<Var>{cmul(g, b), cmul(g, a)};
  });
}

Var cdiv(const Var& a, const Var& b) {
  check_same_shape(a, b, "cdiv");
  return make_node(a->value.cwiseQuotient(b->value), {a, b}, [a, b](const Var& g) {
    return std::vector<Var>{cdiv(g, b), neg(cdiv(cmul(g, a), cmul(b, b)))};
  });
}

Var scale(const Var& a, double c) {
  return make_node(a->value * c, {a},
                   [c](const Var& g) { return std::vector<Var>{scale(g, c)}; });
}

Var add_scalar(const Var& a, double c) {
  return make_node((a->value.array() + c).matrix(), {a},
                   [](const Var& g) { return std::vector<Var>{g}; });
}

Var sigmoid(const Var& a) {
  Matrix v = (1.0 / (1.0 + (-a->value.array()).exp())).matrix();
  auto out = make_node(std::move(v), {a}, nullptr);
  std::weak_ptr<Node> self = out;
  out->vjp = [self](const Var& g) {
    Var s = self.lock();
    // s * (1 - s) * g
    return std::vector<Var>{cmul(g, cmul(s, add_scalar(neg(s), 1.0)))};
  };
  return out;
}

Var tanh_(const Var& a) {
  auto out = make_node(a->value.array().tanh().matrix(), {a}, nullptr);
  std::weak_ptr<Node> self = out;
  out->vjp = [self](const Var& g) {
    Var s = self.lock();
    return std::vector<Var>{cmul(g, add_scalar(neg(cmul(s, s)), 1.0))};
  };
  return out;
}

Var sqrt_(const Var& a) {
  auto out = make_node(a->value.array().sqrt().matrix(), {a}, nullptr);
  std::weak_ptr<Node> self = out;
  out->vjp = [self](const Var& g) {
    Var s = self.lock();
    return std::vector<Var>{cdiv(scale(g, 0.5), s)};
  };
  return out;
}

Var sum_all(const Var& a) {
  Matrix m(1, 1);
  m(0, 0) = a->value.sum();
  long r = a->value.rows(), c = a->value.cols();
  return make_node(std::move(m), {a}, [r, c](const Var& g) {
    return std::vector<Var>{broadcast(g, r, c)};
  });
}

Var broadcast(const Var& a, long r, long c) {
  if (a->value.rows() != 1 || a->value.cols() != 1) throw DataError("broadcast: expected 1x1");
  return make_node(Matrix::Constant(r, c, a->value(0, 0)), {a},
                   [](const Var& g) { return std::vector<Var>{sum_all(g)}; });
}

Var row_sum(const Var& a) {
  long n = a->value.cols();
  return make_node(a->value.rowwise().sum(), {a}, [n](const Var& g) {
    return std::vector<Var>{broadcast_cols(g, n)};
  });
}

Var col_sum(const Var& a) {
  long n = a->value.rows();
  return make_node(a->value.colwise().sum(), {a}, [n](const Var& g) {
    return std::vector<Var>{broadcast_rows(g, n)};
  });
}

Var broadcast_cols(const Var& a, long n) {
  if (a->value.cols() != 1) throw DataError("broadcast_cols: expected column vector");
  return make_node(a->value.replicate(1, n), {a},
                   [](const Var& g) { return std::vector<Var>{row_sum(g)}; });
}

Var broadcast_rows(const Var& a, long n) {
  if (a->value.rows() != 1) throw DataError("broadcast_rows: expected row vector");
  return make_node(a->value.replicate(n, 1), {a},
                   [](const Var& g) { return std::vector<Var>{col_sum(g)}; });
}

Var add_row(const Var& a, const Var& row) {
  if (row->value.rows() != 1 || row->value.cols() != a->value.cols())
    throw DataError("add_row: shape mismatch");
  return make_node(a->value.rowwise() + row->value.row(0), {a, row},
                   [](const Var& g) { return std::vector<Var>{g, col_sum(g)}; });
}

std::vector<Var> backward(const Var& root, const std::vector<Var>& wrt) {
  if (root->value.rows() != 1 || root->value.cols() != 1)
    throw DataError("backward: root must be scalar");

  // Reachable grad-requiring subgraph, then reverse order of creation.
  std::vector<Node*> order;
  std::unordered_map<Node*, Var> keep_alive;
  {
    std::vector<Var> stack{root};
    while (!stack.empty()) {
      Var n = stack.back();
      stack.pop_back();
      if (!n || !n->requires_grad) continue;
      if (keep_alive.count(n.get())) continue;
      keep_alive.emplace(n.get(), n);
      order.push_back(n.get());
      for (const auto& p : n->parents) stack.push_back(p);
    }
  }
  std::sort(order.begin(), order.end(), [](Node* a, Node* b) { return a->id > b->id; });

  std::unordered_map<Node*, Var> grads;
  grads[root.get()] = constant(Matrix::Ones(1, 1));
  for (Node* n : order) {
    auto it = grads.find(n);
    if (it == grads.end()) continue;  // root does not depend on this node
    if (!n->vjp) continue;            // leaf or constant
    std::vector<Var> contrib = n->vjp(it->second);
    for (std::size_t i = 0; i < n->parents.size(); ++i) {
      const Var& p = n->parents[i];
      if (!p || !p->requires_grad || !contrib[i]) continue;
      auto g = grads.find(p.get());
      if (g == grads.end())
        grads[p.get()] = contrib[i];
      else
        g->second = add(g->second, contrib[i]);
    }
  }

  std::vector<Var> out;
  out.reserve(wrt.size());
  for (const auto& w : wrt) {
    auto it = grads.find(w.get());
    if (it != grads.end())
      out.push_back(it->second);
    else
      out.push_back(constant(Matrix::Zero(w->value.rows(), w->value.cols())));
  }
  return out;
}

}  // namespace hawkes::ad
