#include "pvnet/optim.hpp"

#include <cmath>

namespace pvnet::nn {

AdamState AdamState::for_param(const Tensor& param, double lr) {
  AdamState s;
  s.m = Tensor(param.shape());
  s.v = Tensor(param.shape());
  s.lr = lr;
  return s;
}

void adam_update(Tensor& param, const Tensor& grad, AdamState& state) {
  if (!param.same_shape(grad) || !param.same_shape(state.m) || !param.same_shape(state.v))
    throw DimensionError("adam_update: shape mismatch between param " + shape_str(param.shape()) + ", grad " +
                         shape_str(grad.shape()) + " and state");
  state.step_count += 1;
  const double b1 = state.beta1, b2 = state.beta2;
  const double bc1 = 1.0 - std::pow(b1, static_cast<double>(state.step_count));
  const double bc2 = 1.0 - std::pow(b2, static_cast<double>(state.step_count));
  for (int64_t i = 0; i < param.numel(); ++i) {
    const double g = grad[i];
    state.m[i] = b1 * state.m[i] + (1.0 - b1) * g;
    state.v[i] = b2 * state.v[i] + (1.0 - b2) * g * g;
    const double m_hat = state.m[i] / bc1;
    const double v_hat = state.v[i] / bc2;
    param[i] -= state.lr * m_hat / (std::sqrt(v_hat) + state.epsilon);
  }
}

}  // namespace pvnet::nn
