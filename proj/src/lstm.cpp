#include "pvnet/lstm.hpp"

#include <cmath>
#include <cstring>

#include "pvnet/gemm.hpp"
#include "pvnet/layers.hpp"

namespace pvnet::nn {

void LstmParams::validate() const {
  if (w.ndim() != 2 || u.ndim() != 2 || b.ndim() != 1)
    throw DimensionError("lstm: w must be [4u,d], u [4u,u], b [4u]");
  const int n = u.dim(1);
  if (w.dim(0) != 4 * n || u.dim(0) != 4 * n || b.dim(0) != 4 * n)
    throw DimensionError("lstm: gate dimension mismatch, units=" + std::to_string(n) + " w=" + shape_str(w.shape()) +
                         " u=" + shape_str(u.shape()) + " b=" + shape_str(b.shape()));
}

void LstmGrads::init_like(const LstmParams& p) {
  dw = Tensor(p.w.shape());
  du = Tensor(p.u.shape());
  db = Tensor(p.b.shape());
}

std::pair<Tensor, Tensor> lstm_cell_step(const Tensor& x, const Tensor& h_prev, const Tensor& c_prev,
                                         const LstmParams& params, LstmStepCtx* ctx) {
  params.validate();
  const int n = params.units();
  const int d = params.input_dim();
  if (x.numel() != d) throw DimensionError("lstm: input length " + std::to_string(x.numel()) + " != " + std::to_string(d));
  if (h_prev.numel() != n || c_prev.numel() != n)
    throw DimensionError("lstm: state length mismatch, units=" + std::to_string(n));

  Tensor pre = params.b;  // [4u]
  matvec(params.w.ptr(), x.ptr(), pre.ptr(), 4 * n, d);
  matvec(params.u.ptr(), h_prev.ptr(), pre.ptr(), 4 * n, n);

  Tensor gates({4 * n});
  for (int j = 0; j < 3 * n; ++j) gates[j] = hard_sigmoid(pre[j]);
  for (int j = 3 * n; j < 4 * n; ++j) gates[j] = std::tanh(pre[j]);

  Tensor c_t({n}), h_t({n}), tanh_c({n});
  for (int j = 0; j < n; ++j) {
    const double f = gates[j], i = gates[n + j], o = gates[2 * n + j], g = gates[3 * n + j];
    c_t[j] = f * c_prev[j] + i * g;
    tanh_c[j] = std::tanh(c_t[j]);
    h_t[j] = o * tanh_c[j];
  }

  if (ctx) {
    ctx->x = x;
    ctx->h_prev = h_prev;
    ctx->c_prev = c_prev;
    ctx->pre = std::move(pre);
    ctx->gates = std::move(gates);
    ctx->c_t = c_t;
    ctx->tanh_c = std::move(tanh_c);
  }
  return {std::move(h_t), std::move(c_t)};
}

LstmStepGrads lstm_cell_backward(const LstmParams& params, const LstmStepCtx& ctx, const Tensor& dh,
                                 const Tensor& dc, LstmGrads& acc) {
  const int n = params.units();
  const int d = params.input_dim();

  Tensor da({4 * n});
  Tensor dc_total({n});
  for (int j = 0; j < n; ++j) {
    const double i = ctx.gates[n + j], o = ctx.gates[2 * n + j], g = ctx.gates[3 * n + j];
    const double tc = ctx.tanh_c[j];
    const double dct = dh[j] * o * (1.0 - tc * tc) + dc[j];
    dc_total[j] = dct;
    da[j] = dct * ctx.c_prev[j] * hard_sigmoid_deriv(ctx.pre[j]);                  // forget
    da[n + j] = dct * g * hard_sigmoid_deriv(ctx.pre[n + j]);                      // input
    da[2 * n + j] = dh[j] * tc * hard_sigmoid_deriv(ctx.pre[2 * n + j]);           // output
    da[3 * n + j] = dct * i * (1.0 - g * g);                                       // candidate
  }

  // accumulate parameter gradients: dW += da x^T, dU += da h_prev^T, db += da
  for (int r = 0; r < 4 * n; ++r) {
    const double v = da[r];
    acc.db[r] += v;
    double* wrow = acc.dw.ptr() + static_cast<int64_t>(r) * d;
    for (int j = 0; j < d; ++j) wrow[j] += v * ctx.x[j];
    double* urow = acc.du.ptr() + static_cast<int64_t>(r) * n;
    for (int j = 0; j < n; ++j) urow[j] += v * ctx.h_prev[j];
  }

  LstmStepGrads g;
  g.dx = Tensor({d});
  g.dh_prev = Tensor({n});
  g.dc_prev = Tensor({n});
  matvec_t(params.w.ptr(), da.ptr(), g.dx.ptr(), 4 * n, d);
  matvec_t(params.u.ptr(), da.ptr(), g.dh_prev.ptr(), 4 * n, n);
  for (int j = 0; j < n; ++j) g.dc_prev[j] = dc_total[j] * ctx.gates[j];
  return g;
}

namespace {

// One recurrence step given a precomputed input projection (b + W x).
void step_from_projection(const Tensor& x, const Tensor& h_prev, const Tensor& c_prev, const Tensor& pre_in,
                          const LstmParams& params, Tensor& h_t, Tensor& c_t, LstmStepCtx* ctx) {
  const int n = params.units();
  Tensor pre = pre_in;
  matvec(params.u.ptr(), h_prev.ptr(), pre.ptr(), 4 * n, n);

  Tensor gates({4 * n});
  for (int j = 0; j < 3 * n; ++j) gates[j] = hard_sigmoid(pre[j]);
  for (int j = 3 * n; j < 4 * n; ++j) gates[j] = std::tanh(pre[j]);

  h_t = Tensor({n});
  c_t = Tensor({n});
  Tensor tanh_c({n});
  for (int j = 0; j < n; ++j) {
    const double f = gates[j], i = gates[n + j], o = gates[2 * n + j], g = gates[3 * n + j];
    c_t[j] = f * c_prev[j] + i * g;
    tanh_c[j] = std::tanh(c_t[j]);
    h_t[j] = o * tanh_c[j];
  }
  if (ctx) {
    ctx->x = x;
    ctx->h_prev = h_prev;
    ctx->c_prev = c_prev;
    ctx->pre = std::move(pre);
    ctx->gates = std::move(gates);
    ctx->c_t = c_t;
    ctx->tanh_c = std::move(tanh_c);
  }
}

// b + X W^T for the whole sequence in one pass; row t belongs to seq[t].
Tensor input_projections(const std::vector<Tensor>& seq, const LstmParams& params) {
  const int t_len = static_cast<int>(seq.size());
  const int n = params.units();
  const int d = params.input_dim();
  Tensor x_mat({t_len, d});
  for (int t = 0; t < t_len; ++t)
    std::memcpy(x_mat.ptr() + static_cast<int64_t>(t) * d, seq[static_cast<size_t>(t)].ptr(), sizeof(double) * d);
  Tensor pre({t_len, 4 * n});
  for (int t = 0; t < t_len; ++t)
    std::memcpy(pre.ptr() + static_cast<int64_t>(t) * 4 * n, params.b.ptr(), sizeof(double) * 4 * n);
  gemm_nt(x_mat.ptr(), params.w.ptr(), pre.ptr(), t_len, d, 4 * n);
  return pre;
}

Tensor pre_row(const Tensor& pre, int t, int width) {
  Tensor row({width});
  std::memcpy(row.ptr(), pre.ptr() + static_cast<int64_t>(t) * width, sizeof(double) * width);
  return row;
}

}  // namespace

std::vector<Tensor> bilstm_forward(const std::vector<Tensor>& seq, const LstmParams& fwd_params,
                                   const LstmParams& bwd_params, BilstmCtx* ctx) {
  if (seq.empty()) throw ParameterError("bilstm: empty sequence");
  fwd_params.validate();
  bwd_params.validate();
  const int t_len = static_cast<int>(seq.size());
  const int n = fwd_params.units();
  if (bwd_params.units() != n) throw DimensionError("bilstm: direction unit counts differ");
  for (const Tensor& x : seq)
    if (x.numel() != fwd_params.input_dim())
      throw DimensionError("bilstm: input length " + std::to_string(x.numel()) + " != " +
                           std::to_string(fwd_params.input_dim()));

  if (ctx) {
    ctx->fwd.assign(static_cast<size_t>(t_len), {});
    ctx->bwd.assign(static_cast<size_t>(t_len), {});
  }

  const Tensor pre_fwd = input_projections(seq, fwd_params);
  const Tensor pre_bwd = input_projections(seq, bwd_params);

  std::vector<Tensor> h_fwd(static_cast<size_t>(t_len)), h_bwd(static_cast<size_t>(t_len));
  Tensor h = Tensor({n}), c = Tensor({n});
  for (int t = 0; t < t_len; ++t) {
    Tensor h_t, c_t;
    step_from_projection(seq[static_cast<size_t>(t)], h, c, pre_row(pre_fwd, t, 4 * n), fwd_params, h_t, c_t,
                         ctx ? &ctx->fwd[static_cast<size_t>(t)] : nullptr);
    h_fwd[static_cast<size_t>(t)] = h_t;
    h = std::move(h_t);
    c = std::move(c_t);
  }
  h = Tensor({n});
  c = Tensor({n});
  for (int t = t_len - 1; t >= 0; --t) {
    Tensor h_t, c_t;
    step_from_projection(seq[static_cast<size_t>(t)], h, c, pre_row(pre_bwd, t, 4 * n), bwd_params, h_t, c_t,
                         ctx ? &ctx->bwd[static_cast<size_t>(t)] : nullptr);
    h_bwd[static_cast<size_t>(t)] = h_t;
    h = std::move(h_t);
    c = std::move(c_t);
  }

  std::vector<Tensor> out(static_cast<size_t>(t_len));
  for (int t = 0; t < t_len; ++t) {
    Tensor o({2 * n});
    std::memcpy(o.ptr(), h_fwd[static_cast<size_t>(t)].ptr(), sizeof(double) * n);
    std::memcpy(o.ptr() + n, h_bwd[static_cast<size_t>(t)].ptr(), sizeof(double) * n);
    out[static_cast<size_t>(t)] = std::move(o);
  }
  return out;
}

namespace {

// BPTT over one direction. Per-step gate gradients land in DA rows; the
// parameter gradients then reduce to three matrix products over the sequence.
void direction_backward(const LstmParams& params, const std::vector<LstmStepCtx>& steps,
                        const std::vector<Tensor>& grad_out, int gate_offset, bool reverse_time, LstmGrads& acc,
                        Tensor& dx_mat) {
  const int t_len = static_cast<int>(steps.size());
  const int n = params.units();
  const int d = params.input_dim();

  Tensor da_mat({t_len, 4 * n});
  Tensor dh_next({n}), dc_next({n});
  for (int step = 0; step < t_len; ++step) {
    const int t = reverse_time ? step : t_len - 1 - step;
    const LstmStepCtx& sc = steps[static_cast<size_t>(t)];
    double* da = da_mat.ptr() + static_cast<int64_t>(t) * 4 * n;
    Tensor dc_prev({n});
    for (int j = 0; j < n; ++j) {
      const double dh = grad_out[static_cast<size_t>(t)][gate_offset + j] + dh_next[j];
      const double i = sc.gates[n + j], o = sc.gates[2 * n + j], g = sc.gates[3 * n + j];
      const double tc = sc.tanh_c[j];
      const double dct = dh * o * (1.0 - tc * tc) + dc_next[j];
      da[j] = dct * sc.c_prev[j] * hard_sigmoid_deriv(sc.pre[j]);
      da[n + j] = dct * g * hard_sigmoid_deriv(sc.pre[n + j]);
      da[2 * n + j] = dh * tc * hard_sigmoid_deriv(sc.pre[2 * n + j]);
      da[3 * n + j] = dct * i * (1.0 - g * g);
      dc_prev[j] = dct * sc.gates[j];
    }
    dh_next.fill(0.0);
    matvec_t(params.u.ptr(), da, dh_next.ptr(), 4 * n, n);
    dc_next = std::move(dc_prev);
  }

  // dW += DA^T X, dU += DA^T H_prev, db += column sums, dX += DA W
  Tensor x_mat({t_len, d}), h_mat({t_len, n});
  for (int t = 0; t < t_len; ++t) {
    std::memcpy(x_mat.ptr() + static_cast<int64_t>(t) * d, steps[static_cast<size_t>(t)].x.ptr(), sizeof(double) * d);
    std::memcpy(h_mat.ptr() + static_cast<int64_t>(t) * n, steps[static_cast<size_t>(t)].h_prev.ptr(),
                sizeof(double) * n);
  }
  gemm_tn(da_mat.ptr(), x_mat.ptr(), acc.dw.ptr(), 4 * n, t_len, d);
  gemm_tn(da_mat.ptr(), h_mat.ptr(), acc.du.ptr(), 4 * n, t_len, n);
  for (int t = 0; t < t_len; ++t) {
    const double* da = da_mat.ptr() + static_cast<int64_t>(t) * 4 * n;
    for (int j = 0; j < 4 * n; ++j) acc.db[j] += da[j];
  }
  gemm_nn(da_mat.ptr(), params.w.ptr(), dx_mat.ptr(), t_len, 4 * n, d);
}

}  // namespace

std::vector<Tensor> bilstm_backward(const LstmParams& fwd_params, const LstmParams& bwd_params,
                                    const BilstmCtx& ctx, const std::vector<Tensor>& grad_out,
                                    LstmGrads& fwd_acc, LstmGrads& bwd_acc) {
  const int t_len = static_cast<int>(ctx.fwd.size());
  if (static_cast<int>(grad_out.size()) != t_len) throw DimensionError("bilstm backward: grad_out length mismatch");
  const int n = fwd_params.units();
  const int d = fwd_params.input_dim();

  Tensor dx_mat({t_len, d});
  direction_backward(fwd_params, ctx.fwd, grad_out, 0, false, fwd_acc, dx_mat);
  direction_backward(bwd_params, ctx.bwd, grad_out, n, true, bwd_acc, dx_mat);

  std::vector<Tensor> dx(static_cast<size_t>(t_len));
  for (int t = 0; t < t_len; ++t) {
    Tensor row({d});
    std::memcpy(row.ptr(), dx_mat.ptr() + static_cast<int64_t>(t) * d, sizeof(double) * d);
    dx[static_cast<size_t>(t)] = std::move(row);
  }
  return dx;
}

}  // namespace pvnet::nn
