#include "mgcn/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "mgcn/errors.hpp"

namespace mgcn {

GradCheckResult finite_diff_check(const std::function<DiffValue()>& loss_fn,
                                  std::vector<Parameter>& params, double eps,
                                  double analytic_scale) {
  if (!(eps > 0.0)) throw ConfigError("finite_diff_check needs eps > 0");

  for (auto& p : params) p.value.zero_grad();
  DiffValue loss = loss_fn();
  backward(loss);
  std::vector<Mat> analytic;
  analytic.reserve(params.size());
  for (auto& p : params) {
    analytic.push_back(p.value.has_grad()
                           ? p.value.grad()
                           : Mat::Zero(p.value.rows(), p.value.cols()));
  }

  GradCheckResult result;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    auto& p = params[pi];
    if (!p.trainable) continue;
    Mat& theta = p.value.data();
    for (Index i = 0; i < theta.rows(); ++i) {
      for (Index j = 0; j < theta.cols(); ++j) {
        double saved = theta(i, j);
        theta(i, j) = saved + eps;
        double f_plus = loss_fn().scalar_value();
        theta(i, j) = saved - eps;
        double f_minus = loss_fn().scalar_value();
        theta(i, j) = saved;

        double numeric = (f_plus - f_minus) / (2.0 * eps);
        double a = analytic_scale * analytic[pi](i, j);
        double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
        double rel = std::abs(a - numeric) / denom;
        if (rel > result.max_rel_error) {
          result.max_rel_error = rel;
          result.worst_param = p.name;
        }
      }
    }
  }
  for (auto& p : params) p.value.zero_grad();
  return result;
}

}  // namespace mgcn
