#pragma once

#include <map>
#include <string>
#include <vector>

#include "mgcn/tensor.hpp"

namespace mgcn {

struct Parameter {
  std::string name;
  DiffValue value;
  bool trainable = true;
  bool decay = true;  // weight decay opt-out for propagation weights
};

// Throws if two parameters share a name.
void check_unique_names(const std::vector<Parameter>& params);

// Adam with bias correction. Weight decay is added to the raw gradient
// (coupled form), moments are kept per parameter name, and gradients are
// zeroed after the update. Parameters whose gradient was never accumulated
// are left untouched.
class AdamState {
 public:
  explicit AdamState(double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(std::vector<Parameter>& params, double lr, double weight_decay);

  long step_count() const { return t_; }

 private:
  struct Moments {
    Mat m, v;
  };
  std::map<std::string, Moments> moments_;
  long t_ = 0;
  double beta1_, beta2_, eps_;
};

}  // namespace mgcn
