#include "pvnet/layers.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "pvnet/gemm.hpp"

namespace pvnet::nn {

namespace {

// Interprets shape [C,H,W] as one frame and [C,F,H,W] as F frames.
struct FrameDims {
  int c, f, h, w;
  int64_t hw() const { return static_cast<int64_t>(h) * w; }
  int64_t fhw() const { return static_cast<int64_t>(f) * h * w; }
};

FrameDims frame_dims(const Tensor& t, const char* what) {
  if (t.ndim() == 3) return {t.dim(0), 1, t.dim(1), t.dim(2)};
  if (t.ndim() == 4) return {t.dim(0), t.dim(1), t.dim(2), t.dim(3)};
  throw DimensionError(std::string(what) + ": expected [C,H,W] or [C,F,H,W], got " + shape_str(t.shape()));
}

// col[(c*9 + ky*3 + kx), f*HW + y*W + x] = input[c, f, y+ky-1, x+kx-1], zero outside.
void im2col_3x3(const Tensor& input, const FrameDims& d, std::vector<double>& col) {
  const int64_t n = d.fhw();
  col.resize(static_cast<size_t>(d.c) * 9 * n);
  const int w = d.w, h = d.h;
  for (int c = 0; c < d.c; ++c) {
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        double* row = col.data() + (static_cast<size_t>(c) * 9 + ky * 3 + kx) * n;
        const int dy = ky - 1, dx = kx - 1;
        const int x_lo = std::max(0, -dx), x_hi = std::min(w, w - dx);
        for (int f = 0; f < d.f; ++f) {
          const double* src = input.ptr() + (static_cast<size_t>(c) * d.f + f) * d.hw();
          double* dst = row + static_cast<int64_t>(f) * d.hw();
          for (int y = 0; y < h; ++y, dst += w) {
            const int sy = y + dy;
            if (sy < 0 || sy >= h) {
              std::memset(dst, 0, sizeof(double) * w);
              continue;
            }
            if (x_lo > 0) std::memset(dst, 0, sizeof(double) * x_lo);
            if (x_hi < w) std::memset(dst + x_hi, 0, sizeof(double) * (w - x_hi));
            if (x_hi > x_lo) std::memcpy(dst + x_lo, src + static_cast<int64_t>(sy) * w + x_lo + dx,
                                         sizeof(double) * (x_hi - x_lo));
          }
        }
      }
    }
  }
}

// scatter-add transpose of im2col_3x3
void col2im_3x3(const std::vector<double>& col, const FrameDims& d, Tensor& dinput) {
  const int64_t n = d.fhw();
  const int w = d.w, h = d.h;
  for (int c = 0; c < d.c; ++c) {
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        const double* row = col.data() + (static_cast<size_t>(c) * 9 + ky * 3 + kx) * n;
        const int dy = ky - 1, dx = kx - 1;
        const int x_lo = std::max(0, -dx), x_hi = std::min(w, w - dx);
        for (int f = 0; f < d.f; ++f) {
          double* dst = dinput.ptr() + (static_cast<size_t>(c) * d.f + f) * d.hw();
          const double* src = row + static_cast<int64_t>(f) * d.hw();
          for (int y = 0; y < h; ++y, src += w) {
            const int sy = y + dy;
            if (sy < 0 || sy >= h) continue;
            double* drow = dst + static_cast<int64_t>(sy) * w + dx;
            for (int x = x_lo; x < x_hi; ++x) drow[x] += src[x];
          }
        }
      }
    }
  }
}

void check_conv_args(const FrameDims& d, const Tensor& kernels, const Tensor& bias) {
  if (kernels.ndim() != 4 || kernels.dim(2) != 3 || kernels.dim(3) != 3)
    throw DimensionError("conv2d: kernels must be [C_out,C_in,3,3], got " + shape_str(kernels.shape()));
  if (kernels.dim(1) != d.c)
    throw DimensionError("conv2d: kernel C_in " + std::to_string(kernels.dim(1)) + " does not match input C " +
                         std::to_string(d.c));
  if (bias.ndim() != 1 || bias.dim(0) != kernels.dim(0))
    throw DimensionError("conv2d: bias must be [C_out], got " + shape_str(bias.shape()));
  if (d.h < 1 || d.w < 1) throw DimensionError("conv2d: empty spatial dims");
}

int channels_of(const Tensor& t, const Tensor& slope, const char* what) {
  const FrameDims d = frame_dims(t, what);
  if (slope.ndim() != 1 || slope.dim(0) != d.c)
    throw DimensionError(std::string(what) + ": slope must have one entry per channel, got " +
                         shape_str(slope.shape()) + " for C=" + std::to_string(d.c));
  return d.c;
}

}  // namespace

Tensor conv2d_forward(const Tensor& input, const Tensor& kernels, const Tensor& bias, ConvScratch* scratch) {
  const FrameDims d = frame_dims(input, "conv2d");
  check_conv_args(d, kernels, bias);
  const int c_out = kernels.dim(0);
  const int64_t n = d.fhw();

  ConvScratch local;
  ConvScratch& ws = scratch ? *scratch : local;
  im2col_3x3(input, d, ws.col);
  ws.rows = d.c * 9;
  ws.cols = n;

  std::vector<int> out_shape = input.ndim() == 3 ? std::vector<int>{c_out, d.h, d.w}
                                                 : std::vector<int>{c_out, d.f, d.h, d.w};
  Tensor out(std::move(out_shape));
  for (int co = 0; co < c_out; ++co)
    std::fill_n(out.ptr() + static_cast<int64_t>(co) * n, n, bias[co]);
  gemm_nn(kernels.ptr(), ws.col.data(), out.ptr(), c_out, d.c * 9, static_cast<int>(n));
  return out;
}

Tensor conv2d_backward_into(const Tensor& input, const Tensor& kernels, const Tensor& grad_out,
                            bool want_input_grad, ConvScratch* scratch, Tensor& dkernels_acc, Tensor& dbias_acc) {
  const FrameDims d = frame_dims(input, "conv2d backward");
  const int c_out = kernels.dim(0);
  const int64_t n = d.fhw();
  if (grad_out.numel() != static_cast<int64_t>(c_out) * n)
    throw DimensionError("conv2d backward: grad_out shape " + shape_str(grad_out.shape()) + " does not match output");
  if (!dkernels_acc.same_shape(kernels) || dbias_acc.numel() != c_out)
    throw DimensionError("conv2d backward: accumulator shapes do not match the kernels");

  ConvScratch local;
  ConvScratch& ws = scratch ? *scratch : local;
  if (ws.rows != d.c * 9 || ws.cols != n) {
    im2col_3x3(input, d, ws.col);
    ws.rows = d.c * 9;
    ws.cols = n;
  }

  for (int co = 0; co < c_out; ++co) {
    const double* row = grad_out.ptr() + static_cast<int64_t>(co) * n;
    double s = 0.0;
    for (int64_t i = 0; i < n; ++i) s += row[i];
    dbias_acc[co] += s;
  }

  gemm_nt(grad_out.ptr(), ws.col.data(), dkernels_acc.ptr(), c_out, static_cast<int>(n), d.c * 9);

  Tensor dinput;
  if (want_input_grad) {
    // dcol = K^T * grad_out, overwriting the reused col buffer
    gemm_tn(kernels.ptr(), grad_out.ptr(), ws.col.data(), d.c * 9, c_out, static_cast<int>(n), false);
    dinput = Tensor(input.shape());
    col2im_3x3(ws.col, d, dinput);
    ws.rows = 0;  // buffer no longer holds the forward col
    ws.cols = 0;
  }
  return dinput;
}

Conv2dGrads conv2d_backward(const Tensor& input, const Tensor& kernels, const Tensor& grad_out,
                            bool want_input_grad, ConvScratch* scratch) {
  Conv2dGrads g;
  g.dkernels = Tensor(kernels.shape());
  g.dbias = Tensor({kernels.dim(0)});
  g.dinput = conv2d_backward_into(input, kernels, grad_out, want_input_grad, scratch, g.dkernels, g.dbias);
  return g;
}

Tensor prelu_forward(const Tensor& input, const Tensor& slope) {
  const int c = channels_of(input, slope, "prelu");
  const int64_t per_channel = input.numel() / c;
  Tensor out(input.shape());
  for (int ch = 0; ch < c; ++ch) {
    const double s = slope[ch];
    const double* x = input.ptr() + static_cast<int64_t>(ch) * per_channel;
    double* y = out.ptr() + static_cast<int64_t>(ch) * per_channel;
    for (int64_t i = 0; i < per_channel; ++i) y[i] = x[i] > 0.0 ? x[i] : s * x[i];
  }
  return out;
}

PreluGrads prelu_backward(const Tensor& input, const Tensor& slope, const Tensor& grad_out) {
  const int c = channels_of(input, slope, "prelu backward");
  if (!grad_out.same_shape(input))
    throw DimensionError("prelu backward: grad_out shape mismatch " + shape_str(grad_out.shape()));
  const int64_t per_channel = input.numel() / c;
  PreluGrads g{Tensor({c}), Tensor(input.shape())};
  for (int ch = 0; ch < c; ++ch) {
    const double s = slope[ch];
    const double* x = input.ptr() + static_cast<int64_t>(ch) * per_channel;
    const double* dy = grad_out.ptr() + static_cast<int64_t>(ch) * per_channel;
    double* dx = g.dinput.ptr() + static_cast<int64_t>(ch) * per_channel;
    double ds = 0.0;
    for (int64_t i = 0; i < per_channel; ++i) {
      if (x[i] > 0.0) {
        dx[i] = dy[i];
      } else {
        dx[i] = dy[i] * s;
        ds += dy[i] * x[i];
      }
    }
    g.dslope[ch] = ds;
  }
  return g;
}

PoolResult maxpool2x2_forward(const Tensor& input) {
  const FrameDims d = frame_dims(input, "maxpool2x2");
  if (d.h % 2 != 0 || d.w % 2 != 0)
    throw DimensionError("maxpool2x2: spatial dims must be even, got " + shape_str(input.shape()));
  const int oh = d.h / 2, ow = d.w / 2;
  std::vector<int> out_shape = input.ndim() == 3 ? std::vector<int>{d.c, oh, ow}
                                                 : std::vector<int>{d.c, d.f, oh, ow};
  PoolResult r{Tensor(std::move(out_shape)), {}};
  r.argmax.resize(static_cast<size_t>(r.output.numel()));
  int64_t oi = 0;
  for (int c = 0; c < d.c; ++c) {
    for (int f = 0; f < d.f; ++f) {
      const double* plane = input.ptr() + (static_cast<size_t>(c) * d.f + f) * d.hw();
      const int64_t plane_off = (static_cast<int64_t>(c) * d.f + f) * d.hw();
      for (int y = 0; y < oh; ++y) {
        for (int x = 0; x < ow; ++x, ++oi) {
          const int64_t base = static_cast<int64_t>(2 * y) * d.w + 2 * x;
          int64_t best = base;
          double best_v = plane[base];
          const int64_t cand[3] = {base + 1, base + d.w, base + d.w + 1};
          for (int64_t idx : cand) {
            if (plane[idx] > best_v) {
              best_v = plane[idx];
              best = idx;
            }
          }
          r.output[oi] = best_v;
          r.argmax[static_cast<size_t>(oi)] = static_cast<int32_t>(plane_off + best);
        }
      }
    }
  }
  return r;
}

Tensor maxpool2x2_backward(const std::vector<int32_t>& argmax, const Tensor& grad_out,
                           const std::vector<int>& input_shape) {
  if (static_cast<int64_t>(argmax.size()) != grad_out.numel())
    throw DimensionError("maxpool2x2 backward: argmax/grad_out length mismatch");
  Tensor dinput(input_shape);
  for (int64_t i = 0; i < grad_out.numel(); ++i) dinput[argmax[static_cast<size_t>(i)]] += grad_out[i];
  return dinput;
}

namespace {

// One hash word covers four mask entries at 16-bit resolution; forward and
// backward regenerate identical masks from the key alone.
inline bool drop_entry(uint64_t key, int64_t i, uint32_t threshold16) {
  const uint64_t word = mix64(key ^ mix64(static_cast<uint64_t>(i) >> 2));
  const uint32_t bits = static_cast<uint32_t>(word >> (16 * (i & 3))) & 0xffffu;
  return bits < threshold16;
}

Tensor dropout_apply(const Tensor& src, double rate, uint64_t key) {
  Tensor out(src.shape());
  const double scale = 1.0 / (1.0 - rate);
  const uint32_t threshold16 = static_cast<uint32_t>(rate * 65536.0);
  for (int64_t i = 0; i < src.numel(); ++i)
    out[i] = drop_entry(key, i, threshold16) ? 0.0 : src[i] * scale;
  return out;
}

}  // namespace

Tensor dropout_forward(const Tensor& input, double rate, Mode mode, uint64_t key) {
  if (rate < 0.0 || rate >= 1.0) throw ParameterError("dropout: rate must be in [0,1), got " + std::to_string(rate));
  if (mode == Mode::kEval || rate == 0.0) return input;
  return dropout_apply(input, rate, key);
}

Tensor dropout_backward(const Tensor& grad_out, double rate, Mode mode, uint64_t key) {
  if (rate < 0.0 || rate >= 1.0) throw ParameterError("dropout: rate must be in [0,1), got " + std::to_string(rate));
  if (mode == Mode::kEval || rate == 0.0) return grad_out;
  return dropout_apply(grad_out, rate, key);
}

Tensor dense_forward(const Tensor& input, const Tensor& weight, const Tensor& bias) {
  if (weight.ndim() != 2) throw DimensionError("dense: weight must be [d_out,d_in]");
  const int d_out = weight.dim(0), d_in = weight.dim(1);
  if (bias.ndim() != 1 || bias.dim(0) != d_out)
    throw DimensionError("dense: bias must be [d_out], got " + shape_str(bias.shape()));
  if (input.ndim() == 1) {
    if (input.dim(0) != d_in)
      throw DimensionError("dense: input length " + std::to_string(input.dim(0)) + " != d_in " + std::to_string(d_in));
    Tensor out({d_out});
    std::memcpy(out.ptr(), bias.ptr(), sizeof(double) * d_out);
    matvec(weight.ptr(), input.ptr(), out.ptr(), d_out, d_in);
    return out;
  }
  if (input.ndim() != 2 || input.dim(1) != d_in)
    throw DimensionError("dense: input shape " + shape_str(input.shape()) + " incompatible with d_in " +
                         std::to_string(d_in));
  const int f = input.dim(0);
  Tensor out({f, d_out});
  for (int i = 0; i < f; ++i) std::memcpy(out.ptr() + static_cast<int64_t>(i) * d_out, bias.ptr(), sizeof(double) * d_out);
  gemm_nt(input.ptr(), weight.ptr(), out.ptr(), f, d_in, d_out);
  return out;
}

Tensor dense_backward_into(const Tensor& input, const Tensor& weight, const Tensor& grad_out, bool want_input_grad,
                           Tensor& dweight_acc, Tensor& dbias_acc) {
  const int d_out = weight.dim(0), d_in = weight.dim(1);
  if (!dweight_acc.same_shape(weight) || dbias_acc.numel() != d_out)
    throw DimensionError("dense backward: accumulator shapes do not match the weight");
  Tensor dinput;
  if (input.ndim() == 1) {
    grad_out.require_shape({d_out}, "dense backward grad_out");
    for (int o = 0; o < d_out; ++o) {
      const double go = grad_out[o];
      dbias_acc[o] += go;
      double* drow = dweight_acc.ptr() + static_cast<int64_t>(o) * d_in;
      for (int i = 0; i < d_in; ++i) drow[i] += go * input[i];
    }
    if (want_input_grad) {
      dinput = Tensor({d_in});
      matvec_t(weight.ptr(), grad_out.ptr(), dinput.ptr(), d_out, d_in);
    }
    return dinput;
  }
  const int f = input.dim(0);
  grad_out.require_shape({f, d_out}, "dense backward grad_out");
  for (int i = 0; i < f; ++i) {
    const double* row = grad_out.ptr() + static_cast<int64_t>(i) * d_out;
    for (int o = 0; o < d_out; ++o) dbias_acc[o] += row[o];
  }
  gemm_tn(grad_out.ptr(), input.ptr(), dweight_acc.ptr(), d_out, f, d_in);
  if (want_input_grad) {
    dinput = Tensor({f, d_in});
    gemm_nn(grad_out.ptr(), weight.ptr(), dinput.ptr(), f, d_out, d_in, false);
  }
  return dinput;
}

DenseGrads dense_backward(const Tensor& input, const Tensor& weight, const Tensor& grad_out, bool want_input_grad) {
  DenseGrads g;
  g.dweight = Tensor(weight.shape());
  g.dbias = Tensor({weight.dim(0)});
  g.dinput = dense_backward_into(input, weight, grad_out, want_input_grad, g.dweight, g.dbias);
  return g;
}

MseResult mse_loss(const Tensor& pred, const Tensor& target) {
  if (pred.numel() == 0) throw ParameterError("mse_loss: empty prediction vector");
  if (!pred.same_shape(target))
    throw DimensionError("mse_loss: shape mismatch " + shape_str(pred.shape()) + " vs " + shape_str(target.shape()));
  const int64_t n = pred.numel();
  MseResult r{0.0, Tensor(pred.shape())};
  for (int64_t i = 0; i < n; ++i) {
    const double e = pred[i] - target[i];
    r.loss += e * e;
    r.dpred[i] = 2.0 * e / static_cast<double>(n);
  }
  r.loss /= static_cast<double>(n);
  return r;
}

double hard_sigmoid(double x) { return std::max(0.0, std::min(1.0, 0.2 * x + 0.5)); }

double hard_sigmoid_deriv(double x) {
  const double z = 0.2 * x + 0.5;
  return (z > 0.0 && z < 1.0) ? 0.2 : 0.0;
}

}  // namespace pvnet::nn
