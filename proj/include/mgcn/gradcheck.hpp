#pragma once

#include <functional>
#include <string>
#include <vector>

#include "mgcn/optim.hpp"

namespace mgcn {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_param;  // name of the parameter holding the worst entry
};

// Central-difference gradient verification. `loss_fn` must rebuild the full
// forward pass from the parameters' current data on every call and be
// deterministic (dropout disabled). For every coordinate of every trainable
// parameter the analytic gradient is compared against
// (f(θ+eps) − f(θ−eps)) / (2·eps) with relative error
// |a − n| / max(|a|, |n|, 1e-8). `analytic_scale` deliberately mis-scales the
// analytic side so tests can confirm the detector fires; leave it at 1.
GradCheckResult finite_diff_check(const std::function<DiffValue()>& loss_fn,
                                  std::vector<Parameter>& params, double eps,
                                  double analytic_scale = 1.0);

}  // namespace mgcn
