#include "mgcn/optim.hpp"

#include <cmath>
#include <set>

#include "mgcn/errors.hpp"

namespace mgcn {

void check_unique_names(const std::vector<Parameter>& params) {
  std::set<std::string> names;
  for (const auto& p : params) {
    if (!names.insert(p.name).second) {
      throw ConfigError("duplicate parameter name '" + p.name + "'");
    }
  }
}

void AdamState::step(std::vector<Parameter>& params, double lr,
                     double weight_decay) {
  ++t_;
  double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (auto& p : params) {
    if (!p.trainable || !p.value.has_grad()) continue;
    Mat& theta = p.value.data();
    Mat g = p.value.grad();
    if (p.decay && weight_decay != 0.0) g += weight_decay * theta;

    auto [it, inserted] = moments_.try_emplace(p.name);
    Moments& mo = it->second;
    if (inserted) {
      mo.m = Mat::Zero(theta.rows(), theta.cols());
      mo.v = Mat::Zero(theta.rows(), theta.cols());
    }
    mo.m = beta1_ * mo.m + (1.0 - beta1_) * g;
    mo.v = beta2_ * mo.v + (1.0 - beta2_) * g.cwiseProduct(g);
    theta.array() -=
        lr * (mo.m.array() / bc1) / ((mo.v.array() / bc2).sqrt() + eps_);
    p.value.zero_grad();
  }
}

}  // namespace mgcn
