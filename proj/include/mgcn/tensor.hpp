#pragma once

#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "mgcn/graph.hpp"
#include "mgcn/rng.hpp"
#include "mgcn/types.hpp"

namespace mgcn {

constexpr double kEpsLog = 1e-12;   // guard inside logarithms
constexpr double kEpsNorm = 1e-12;  // guard inside row-norm divisions

namespace detail {

// One node of a reverse-mode computation graph.
struct Node {
  Mat data;
  Mat grad;  // lazily allocated on first accumulation; same shape as data
  bool requires_grad = false;
  bool backward_ran = false;
  std::vector<std::shared_ptr<Node>> parents;
  // Reads this->grad and accumulates into the parents' grads. Null for leaves.
  std::function<void(Node&)> backward_fn;

  Mat& ensure_grad() {
    if (grad.size() == 0) grad = Mat::Zero(data.rows(), data.cols());
    return grad;
  }
  void accumulate(const Mat& g) { ensure_grad() += g; }
};

}  // namespace detail

// Shared handle to a graph node. Copies alias the same node; the graph is
// freed when the last handle to its sink goes away.
class DiffValue {
 public:
  DiffValue() = default;

  static DiffValue leaf(Mat data, bool requires_grad = false);
  static DiffValue scalar(double v, bool requires_grad = false);

  // Extension point used by the model-level fused operations: wraps freshly
  // computed data as a node whose backward_fn distributes the incoming
  // gradient to `parents`. requires_grad is inherited from the parents; if
  // none of them needs gradients the links are dropped entirely.
  static DiffValue make_op(Mat data, std::vector<DiffValue> parents,
                           std::function<void(detail::Node&)> backward_fn);

  bool valid() const { return node_ != nullptr; }
  Index rows() const { return node_->data.rows(); }
  Index cols() const { return node_->data.cols(); }
  const Mat& data() const { return node_->data; }
  Mat& data() { return node_->data; }
  double scalar_value() const;

  bool requires_grad() const { return node_->requires_grad; }
  bool has_grad() const { return node_->grad.size() != 0; }
  Mat& grad() { return node_->ensure_grad(); }
  const Mat& grad_view() const;  // throws if never accumulated
  void zero_grad();

  std::shared_ptr<detail::Node> node() const { return node_; }

 private:
  explicit DiffValue(std::shared_ptr<detail::Node> n) : node_(std::move(n)) {}
  std::shared_ptr<detail::Node> node_;
};

// Dense a(m×k) · b(k×n).
DiffValue matmul(const DiffValue& a, const DiffValue& b);
// Dense a(m×k) · b(n×k)ᵀ.
DiffValue matmul_nt(const DiffValue& a, const DiffValue& b);
// Same-shape elementwise sum, or bias broadcast when b is 1×d and a is N×d.
DiffValue add(const DiffValue& a, const DiffValue& b);
DiffValue scale(const DiffValue& x, double c);
DiffValue relu(const DiffValue& x);
// Training mode zeroes entries with probability `rate` and rescales survivors
// by 1/(1-rate); eval mode (or rate 0) is the identity and draws nothing.
// Mask draws consume one uniform per entry in row-major order.
DiffValue dropout(const DiffValue& x, double rate, Rng& rng, bool train);
// Each row divided by max(‖row‖₂, kEpsNorm).
DiffValue row_l2_normalize(const DiffValue& x);
DiffValue softmax_rows(const DiffValue& x);
// −(1/T)·Σ target·log(pred + kEpsLog); target rows may be soft labels.
DiffValue cross_entropy(const DiffValue& pred, const Mat& target);
// Gathers rows; duplicate ids accumulate gradient.
DiffValue select_rows(const DiffValue& x, std::vector<int> ids);
DiffValue sum_all(const DiffValue& x);

// Sparse(normalized adjacency) × dense. `adj` is captured by reference and
// must outlive the computation graph.
DiffValue spmm(const NormAdj& adj, const DiffValue& x);
// The non-differentiable kernel behind spmm, usable on plain matrices.
Mat spmm_mat(const NormAdj& adj, const Mat& x);

// Runs reverse-mode accumulation from a scalar loss. Each ancestor is visited
// exactly once; a second call on the same node without a grad reset throws.
void backward(const DiffValue& loss);

}  // namespace mgcn
