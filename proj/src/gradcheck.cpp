#include "pvnet/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace pvnet::nn {

std::vector<Tensor> finite_diff_grad(const std::function<double()>& loss, const std::vector<Tensor*>& params,
                                     double h) {
  if (h <= 0.0) throw ParameterError("finite_diff_grad: step must be positive");
  std::vector<Tensor> grads;
  grads.reserve(params.size());
  for (Tensor* p : params) {
    Tensor g(p->shape());
    for (int64_t i = 0; i < p->numel(); ++i) {
      const double saved = (*p)[i];
      (*p)[i] = saved + h;
      const double up = loss();
      (*p)[i] = saved - h;
      const double down = loss();
      (*p)[i] = saved;
      g[i] = (up - down) / (2.0 * h);
    }
    grads.push_back(std::move(g));
  }
  return grads;
}

double max_rel_error(const Tensor& analytic, const Tensor& numeric, double floor) {
  if (!analytic.same_shape(numeric))
    throw DimensionError("max_rel_error: shape mismatch " + shape_str(analytic.shape()) + " vs " +
                         shape_str(numeric.shape()));
  double worst = 0.0;
  for (int64_t i = 0; i < analytic.numel(); ++i) {
    const double a = analytic[i], n = numeric[i];
    const double denom = std::max({std::abs(a), std::abs(n), floor});
    worst = std::max(worst, std::abs(a - n) / denom);
  }
  return worst;
}

}  // namespace pvnet::nn
