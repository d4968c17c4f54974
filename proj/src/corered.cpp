#include "mgcn/correlation.hpp"

#include <numeric>
#include <string>
#include <utility>

#include "mgcn/errors.hpp"

namespace mgcn {

CorrelationMatrix correlation_matrix(const DiffValue& h1, const DiffValue& h2) {
  if (h1.rows() != h2.rows() || h1.cols() != h2.cols()) {
    throw ConfigError("correlation views must share a shape");
  }
  if (h1.rows() < 1) throw ConfigError("correlation needs at least one row");
  return {matmul_nt(row_l2_normalize(h1), row_l2_normalize(h2))};
}

DiffValue correlation_reduction_loss(const CorrelationMatrix& z,
                                     CorrelationLossForm form) {
  const DiffValue& zv = z.z;
  if (zv.rows() != zv.cols()) throw ConfigError("correlation matrix must be square");
  Index b = zv.rows();
  double inv_b = 1.0 / static_cast<double>(b);
  double off_coef = b > 1 ? 1.0 / static_cast<double>(b * (b - 1)) : 0.0;

  double value = 0.0;
  if (form == CorrelationLossForm::kDecomposed) {
    double diag = 0.0, off = 0.0;
    for (Index i = 0; i < b; ++i) {
      for (Index j = 0; j < b; ++j) {
        double e = zv.data()(i, j);
        if (i == j) {
          diag += (e - 1.0) * (e - 1.0);
        } else {
          off += e * e;
        }
      }
    }
    value = inv_b * diag + off_coef * off;
  } else {
    double total = 0.0;
    for (Index i = 0; i < b; ++i) {
      for (Index j = 0; j < b; ++j) {
        double e = zv.data()(i, j) - (i == j ? 1.0 : 0.0);
        total += e * e;
      }
    }
    value = total * inv_b * inv_b;
  }

  Mat out(1, 1);
  out(0, 0) = value;
  return DiffValue::make_op(
      std::move(out), {zv}, [form, inv_b, off_coef](detail::Node& self) {
        auto& p = self.parents[0];
        if (!p->requires_grad) return;
        double g = self.grad(0, 0);
        Mat& gz = p->ensure_grad();
        Index b = p->data.rows();
        if (form == CorrelationLossForm::kDecomposed) {
          for (Index i = 0; i < b; ++i) {
            for (Index j = 0; j < b; ++j) {
              double e = p->data(i, j);
              gz(i, j) += i == j ? g * 2.0 * inv_b * (e - 1.0)
                                 : g * 2.0 * off_coef * e;
            }
          }
        } else {
          double c = 2.0 * inv_b * inv_b;
          for (Index i = 0; i < b; ++i) {
            for (Index j = 0; j < b; ++j) {
              gz(i, j) += g * c * (p->data(i, j) - (i == j ? 1.0 : 0.0));
            }
          }
        }
      });
}

DiffValue correlation_reduction_loss(const DiffValue& h1, const DiffValue& h2,
                                     CorrelationLossForm form) {
  if (h1.rows() != h2.rows() || h1.cols() != h2.cols()) {
    throw ConfigError("correlation views must share a shape");
  }
  Index b = h1.rows();
  if (b < 1) throw ConfigError("correlation needs at least one row");

  DiffValue n1 = row_l2_normalize(h1);
  DiffValue n2 = row_l2_normalize(h2);
  const Mat& a = n1.data();
  const Mat& c = n2.data();

  Mat gram1 = a.transpose() * a;  // d×d
  Mat gram2 = c.transpose() * c;
  Vec diag(b);
  for (Index i = 0; i < b; ++i) diag(i) = a.row(i).dot(c.row(i));
  double frob_sq = gram1.cwiseProduct(gram2).sum();  // Σ_ij Z_ij²
  double diag_sq = diag.squaredNorm();

  double inv_b = 1.0 / static_cast<double>(b);
  double off_coef = b > 1 ? 1.0 / static_cast<double>(b * (b - 1)) : 0.0;
  double value;
  if (form == CorrelationLossForm::kDecomposed) {
    value = inv_b * (diag.array() - 1.0).square().sum() +
            off_coef * (frob_sq - diag_sq);
  } else {
    value = inv_b * inv_b * (frob_sq - 2.0 * diag.sum() + static_cast<double>(b));
  }

  Mat out(1, 1);
  out(0, 0) = value;
  return DiffValue::make_op(
      std::move(out), {n1, n2},
      [form, inv_b, off_coef, gram1 = std::move(gram1),
       gram2 = std::move(gram2), diag = std::move(diag)](detail::Node& self) {
        auto& p1 = self.parents[0];
        auto& p2 = self.parents[1];
        double g = self.grad(0, 0);
        Index b = p1->data.rows();
        // dL/dZ = full_coef·Z + diag(d_i); multiplying by the views turns
        // Z·n2 into n1·gram2 and Zᵀ·n1 into n2·gram1.
        double full_coef;
        Vec d(b);
        if (form == CorrelationLossForm::kDecomposed) {
          full_coef = 2.0 * off_coef;
          for (Index i = 0; i < b; ++i) {
            d(i) = 2.0 * inv_b * (diag(i) - 1.0) - full_coef * diag(i);
          }
        } else {
          full_coef = 2.0 * inv_b * inv_b;
          d.setConstant(-full_coef);
        }
        Vec gd = g * d;
        if (p1->requires_grad) {
          Mat& g1 = p1->ensure_grad();
          g1.noalias() += (g * full_coef) * (p1->data * gram2);
          g1 += gd.asDiagonal() * p2->data;
        }
        if (p2->requires_grad) {
          Mat& g2 = p2->ensure_grad();
          g2.noalias() += (g * full_coef) * (p2->data * gram1);
          g2 += gd.asDiagonal() * p1->data;
        }
      });
}

std::vector<int> correlation_batch(int num_nodes, int batch_size, Rng& rng) {
  if (num_nodes < 1) throw ConfigError("correlation_batch needs nodes");
  if (batch_size > num_nodes) {
    throw ConfigError("correlation batch " + std::to_string(batch_size) +
                      " exceeds node count " + std::to_string(num_nodes));
  }
  std::vector<int> ids(num_nodes);
  std::iota(ids.begin(), ids.end(), 0);
  if (batch_size <= 0 || batch_size == num_nodes) return ids;

  // Partial Fisher-Yates: the first batch_size slots become the sample.
  for (int k = 0; k < batch_size; ++k) {
    int j = k + static_cast<int>(rng.bounded(static_cast<std::uint64_t>(num_nodes - k)));
    std::swap(ids[k], ids[j]);
  }
  ids.resize(batch_size);
  std::sort(ids.begin(), ids.end());
  return ids;
}

}  // namespace mgcn
