#pragma once

#include <utility>
#include <vector>

#include "pvnet/tensor.hpp"

namespace pvnet::nn {

// LSTM cell with hard-sigmoid gate activation and tanh cell/output squash.
// Gate weights are packed row-wise in fixed block order (forget, input,
// output, candidate), so w is [4u, d], u is [4u, u], b is [4u].
struct LstmParams {
  Tensor w;
  Tensor u;
  Tensor b;

  int units() const { return u.ndim() == 2 ? u.dim(1) : 0; }
  int input_dim() const { return w.ndim() == 2 ? w.dim(1) : 0; }
  void validate() const;
};

// Per-step stash used by the analytic backward pass.
struct LstmStepCtx {
  Tensor x, h_prev, c_prev;
  Tensor pre;     // [4u] pre-activations
  Tensor gates;   // [4u] post-activations f,i,o,g
  Tensor c_t;     // [u]
  Tensor tanh_c;  // [u]
};

// One recurrence step: returns (h_t, c_t).
std::pair<Tensor, Tensor> lstm_cell_step(const Tensor& x, const Tensor& h_prev, const Tensor& c_prev,
                                         const LstmParams& params, LstmStepCtx* ctx = nullptr);

struct LstmGrads {
  Tensor dw, du, db;
  void init_like(const LstmParams& p);
};

struct LstmStepGrads {
  Tensor dx, dh_prev, dc_prev;
};

// Backward through one step. dh/dc are gradients w.r.t. h_t and c_t; parameter
// gradients accumulate into acc.
LstmStepGrads lstm_cell_backward(const LstmParams& params, const LstmStepCtx& ctx, const Tensor& dh,
                                 const Tensor& dc, LstmGrads& acc);

// Bidirectional pass over a sequence of input vectors. Both directions start
// from zero states; the backward direction is the forward recurrence applied
// to the reversed sequence, then re-reversed. output[t] = [h_fwd[t]; h_bwd[t]].
struct BilstmCtx {
  std::vector<LstmStepCtx> fwd, bwd;
};

std::vector<Tensor> bilstm_forward(const std::vector<Tensor>& seq, const LstmParams& fwd_params,
                                   const LstmParams& bwd_params, BilstmCtx* ctx = nullptr);

// Backward through the bidirectional pass; returns d(seq[t]) and accumulates
// parameter gradients per direction.
std::vector<Tensor> bilstm_backward(const LstmParams& fwd_params, const LstmParams& bwd_params,
                                    const BilstmCtx& ctx, const std::vector<Tensor>& grad_out,
                                    LstmGrads& fwd_acc, LstmGrads& bwd_acc);

}  // namespace pvnet::nn
