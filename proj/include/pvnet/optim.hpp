#pragma once

#include "pvnet/tensor.hpp"

namespace pvnet::nn {

// Bias-corrected Adam, one state per parameter tensor.
struct AdamState {
  Tensor m;
  Tensor v;
  int64_t step_count = 0;
  double lr = 0.0015;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static AdamState for_param(const Tensor& param, double lr = 0.0015);
};

// In-place update: param -= lr * m_hat / (sqrt(v_hat) + eps).
void adam_update(Tensor& param, const Tensor& grad, AdamState& state);

}  // namespace pvnet::nn
