#include "mgcn/tensor.hpp"

#include <cmath>
#include <string>
#include <unordered_set>
#include <utility>

#include "mgcn/errors.hpp"

namespace mgcn {

namespace {

void check(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError(msg);
}

std::string shape_of(const DiffValue& v) {
  return std::to_string(v.rows()) + "x" + std::to_string(v.cols());
}

}  // namespace

DiffValue DiffValue::leaf(Mat data, bool requires_grad) {
  auto n = std::make_shared<detail::Node>();
  n->data = std::move(data);
  n->requires_grad = requires_grad;
  return DiffValue(std::move(n));
}

DiffValue DiffValue::scalar(double v, bool requires_grad) {
  Mat m(1, 1);
  m(0, 0) = v;
  return leaf(std::move(m), requires_grad);
}

DiffValue DiffValue::make_op(Mat data, std::vector<DiffValue> parents,
                             std::function<void(detail::Node&)> backward_fn) {
  auto n = std::make_shared<detail::Node>();
  n->data = std::move(data);
  bool needs_grad = false;
  for (const auto& p : parents) needs_grad = needs_grad || p.requires_grad();
  n->requires_grad = needs_grad;
  if (needs_grad) {
    n->parents.reserve(parents.size());
    for (auto& p : parents) n->parents.push_back(p.node());
    n->backward_fn = std::move(backward_fn);
  }
  // else: constant result; drop the links so the subgraph can be freed.
  return DiffValue(std::move(n));
}

double DiffValue::scalar_value() const {
  check(rows() == 1 && cols() == 1, "scalar_value on non-scalar " + shape_of(*this));
  return node_->data(0, 0);
}

const Mat& DiffValue::grad_view() const {
  check(has_grad(), "gradient was never accumulated");
  return node_->grad;
}

void DiffValue::zero_grad() {
  if (node_->grad.size() != 0) node_->grad.setZero();
  node_->backward_ran = false;
}

DiffValue matmul(const DiffValue& a, const DiffValue& b) {
  check(a.cols() == b.rows(),
        "matmul inner dimensions disagree: " + shape_of(a) + " vs " + shape_of(b));
  return DiffValue::make_op(a.data() * b.data(), {a, b}, [](detail::Node& self) {
    auto& pa = self.parents[0];
    auto& pb = self.parents[1];
    if (pa->requires_grad) pa->accumulate(self.grad * pb->data.transpose());
    if (pb->requires_grad) pb->accumulate(pa->data.transpose() * self.grad);
  });
}

DiffValue matmul_nt(const DiffValue& a, const DiffValue& b) {
  check(a.cols() == b.cols(),
        "matmul_nt column counts disagree: " + shape_of(a) + " vs " + shape_of(b));
  return DiffValue::make_op(a.data() * b.data().transpose(), {a, b},
                            [](detail::Node& self) {
                              auto& pa = self.parents[0];
                              auto& pb = self.parents[1];
                              if (pa->requires_grad) pa->accumulate(self.grad * pb->data);
                              if (pb->requires_grad) {
                                pb->accumulate(self.grad.transpose() * pa->data);
                              }
                            });
}

DiffValue add(const DiffValue& a, const DiffValue& b) {
  bool same = a.rows() == b.rows() && a.cols() == b.cols();
  bool bias = b.rows() == 1 && a.cols() == b.cols();
  check(same || bias, "add shapes incompatible: " + shape_of(a) + " vs " + shape_of(b));
  Mat out = same ? Mat(a.data() + b.data())
                 : Mat(a.data().rowwise() + b.data().row(0));
  return DiffValue::make_op(std::move(out), {a, b}, [same](detail::Node& self) {
    auto& pa = self.parents[0];
    auto& pb = self.parents[1];
    if (pa->requires_grad) pa->accumulate(self.grad);
    if (pb->requires_grad) {
      if (same) {
        pb->accumulate(self.grad);
      } else {
        pb->ensure_grad().row(0) += self.grad.colwise().sum();
      }
    }
  });
}

DiffValue scale(const DiffValue& x, double c) {
  return DiffValue::make_op(Mat(c * x.data()), {x}, [c](detail::Node& self) {
    if (self.parents[0]->requires_grad) self.parents[0]->accumulate(c * self.grad);
  });
}

DiffValue relu(const DiffValue& x) {
  return DiffValue::make_op(Mat(x.data().cwiseMax(0.0)), {x}, [](detail::Node& self) {
    auto& p = self.parents[0];
    if (p->requires_grad) {
      // Subgradient 0 at the kink: pass gradient only where the output is > 0.
      p->accumulate((self.data.array() > 0.0).cast<double>().matrix().cwiseProduct(self.grad));
    }
  });
}

DiffValue dropout(const DiffValue& x, double rate, Rng& rng, bool train) {
  check(rate >= 0.0 && rate < 1.0, "dropout rate must lie in [0,1)");
  if (!train || rate == 0.0) return x;
  double keep_scale = 1.0 / (1.0 - rate);
  Mat mask(x.rows(), x.cols());
  for (Index i = 0; i < mask.rows(); ++i) {
    for (Index j = 0; j < mask.cols(); ++j) {
      mask(i, j) = rng.uniform() >= rate ? keep_scale : 0.0;
    }
  }
  // Materialize before the call: the capture below moves `mask`, and
  // argument evaluation order is unspecified.
  Mat masked = x.data().cwiseProduct(mask);
  return DiffValue::make_op(std::move(masked), {x},
                            [mask = std::move(mask)](detail::Node& self) {
                              auto& p = self.parents[0];
                              if (p->requires_grad) {
                                p->accumulate(self.grad.cwiseProduct(mask));
                              }
                            });
}

DiffValue row_l2_normalize(const DiffValue& x) {
  Index n = x.rows();
  Vec inv_scale(n);
  Mat out(n, x.cols());
  for (Index i = 0; i < n; ++i) {
    double norm = x.data().row(i).norm();
    inv_scale(i) = 1.0 / std::max(norm, kEpsNorm);
    out.row(i) = x.data().row(i) * inv_scale(i);
  }
  return DiffValue::make_op(
      std::move(out), {x}, [inv_scale = std::move(inv_scale)](detail::Node& self) {
        auto& p = self.parents[0];
        if (!p->requires_grad) return;
        Mat& g = p->ensure_grad();
        for (Index i = 0; i < self.data.rows(); ++i) {
          double s = inv_scale(i);
          double norm = p->data.row(i).norm();
          if (norm > kEpsNorm) {
            // y = r/‖r‖ ⇒ dy/dr = (I − y·yᵀ)/‖r‖.
            double dot = self.data.row(i).dot(self.grad.row(i));
            g.row(i) += s * (self.grad.row(i) - dot * self.data.row(i));
          } else {
            // Below the guard the map is linear: y = r/ε.
            g.row(i) += s * self.grad.row(i);
          }
        }
      });
}

DiffValue softmax_rows(const DiffValue& x) {
  Mat out(x.rows(), x.cols());
  for (Index i = 0; i < x.rows(); ++i) {
    double m = x.data().row(i).maxCoeff();
    out.row(i) = (x.data().row(i).array() - m).exp();
    out.row(i) /= out.row(i).sum();
  }
  return DiffValue::make_op(std::move(out), {x}, [](detail::Node& self) {
    auto& p = self.parents[0];
    if (!p->requires_grad) return;
    Mat& g = p->ensure_grad();
    for (Index i = 0; i < self.data.rows(); ++i) {
      double dot = self.grad.row(i).dot(self.data.row(i));
      g.row(i) += self.data.row(i).cwiseProduct(
          (self.grad.row(i).array() - dot).matrix());
    }
  });
}

DiffValue cross_entropy(const DiffValue& pred, const Mat& target) {
  check(pred.rows() == target.rows() && pred.cols() == target.cols(),
        "cross_entropy shape mismatch: " + shape_of(pred) + " vs " +
            std::to_string(target.rows()) + "x" + std::to_string(target.cols()));
  check(pred.rows() > 0, "cross_entropy on empty input");
  double inv_t = 1.0 / static_cast<double>(pred.rows());
  double value =
      -inv_t * (target.array() * (pred.data().array() + kEpsLog).log()).sum();
  Mat out(1, 1);
  out(0, 0) = value;
  return DiffValue::make_op(std::move(out), {pred},
                            [target, inv_t](detail::Node& self) {
                              auto& p = self.parents[0];
                              if (!p->requires_grad) return;
                              double g = self.grad(0, 0);
                              p->ensure_grad().array() -=
                                  g * inv_t * target.array() /
                                  (p->data.array() + kEpsLog);
                            });
}

DiffValue select_rows(const DiffValue& x, std::vector<int> ids) {
  Mat out(static_cast<Index>(ids.size()), x.cols());
  for (std::size_t k = 0; k < ids.size(); ++k) {
    check(ids[k] >= 0 && ids[k] < x.rows(), "select_rows id out of range");
    out.row(static_cast<Index>(k)) = x.data().row(ids[k]);
  }
  return DiffValue::make_op(std::move(out), {x},
                            [ids = std::move(ids)](detail::Node& self) {
                              auto& p = self.parents[0];
                              if (!p->requires_grad) return;
                              Mat& g = p->ensure_grad();
                              for (std::size_t k = 0; k < ids.size(); ++k) {
                                g.row(ids[k]) += self.grad.row(static_cast<Index>(k));
                              }
                            });
}

DiffValue sum_all(const DiffValue& x) {
  Mat out(1, 1);
  out(0, 0) = x.data().sum();
  return DiffValue::make_op(std::move(out), {x}, [](detail::Node& self) {
    auto& p = self.parents[0];
    if (p->requires_grad) p->ensure_grad().array() += self.grad(0, 0);
  });
}

Mat spmm_mat(const NormAdj& adj, const Mat& x) {
  Mat y = Mat::Zero(adj.num_nodes, x.cols());
  for (int i = 0; i < adj.num_nodes; ++i) {
    auto row = y.row(i);
    for (int k = adj.row_offsets[i]; k < adj.row_offsets[i + 1]; ++k) {
      row += adj.values[k] * x.row(adj.col_indices[k]);
    }
  }
  return y;
}

DiffValue spmm(const NormAdj& adj, const DiffValue& x) {
  check(x.rows() == adj.num_nodes,
        "spmm: adjacency is " + std::to_string(adj.num_nodes) + " nodes but input has " +
            std::to_string(x.rows()) + " rows");
  return DiffValue::make_op(spmm_mat(adj, x.data()), {x},
                            [&adj](detail::Node& self) {
                              auto& p = self.parents[0];
                              // The matrix is symmetric, so the transposed
                              // product is the same kernel.
                              if (p->requires_grad) {
                                p->accumulate(spmm_mat(adj, self.grad));
                              }
                            });
}

void backward(const DiffValue& loss) {
  check(loss.valid(), "backward on empty value");
  check(loss.rows() == 1 && loss.cols() == 1,
        "backward requires a scalar, got " + shape_of(loss));
  detail::Node* root = loss.node().get();
  check(!root->backward_ran, "backward called twice without a gradient reset");
  root->backward_ran = true;
  if (!root->requires_grad) return;  // constant graph: nothing to accumulate

  // Iterative post-order DFS; reversing the order yields consumers-first.
  std::vector<detail::Node*> order;
  std::unordered_set<detail::Node*> visited;
  std::vector<std::pair<detail::Node*, std::size_t>> stack;
  stack.emplace_back(root, 0);
  visited.insert(root);
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      detail::Node* parent = node->parents[next++].get();
      if (parent->requires_grad && visited.insert(parent).second) {
        stack.emplace_back(parent, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  root->ensure_grad()(0, 0) += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    detail::Node* node = *it;
    if (node->backward_fn && node->grad.size() != 0) node->backward_fn(*node);
  }
}

}  // namespace mgcn
