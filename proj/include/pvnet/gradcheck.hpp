#pragma once

#include <functional>
#include <string>
#include <vector>

#include "pvnet/tensor.hpp"

namespace pvnet::nn {

// Central-difference gradient estimate. The callable must be a deterministic
// scalar function of the current contents of the listed tensors (stochastic
// layers run in eval mode).
std::vector<Tensor> finite_diff_grad(const std::function<double()>& loss, const std::vector<Tensor*>& params,
                                     double h = 1e-5);

// max over coordinates of |a - n| / max(|a|, |n|, floor)
double max_rel_error(const Tensor& analytic, const Tensor& numeric, double floor = 1e-6);

// One named gradient check: analytic vs finite-difference, worst error kept.
struct GradCheckResult {
  std::string name;
  double max_error = 0.0;
  bool pass = false;
};

}  // namespace pvnet::nn
