#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "pvnet/tensor.hpp"

namespace pvnet::nn {

enum class Mode { kTrain, kEval };

// All layers accept activations in channel-major frame layout: [C, H, W] for a
// single frame or [C, F, H, W] for F frames sharing the same weights. The two
// are memory-identical at F=1. Every backward is an exact analytic gradient of
// the matching forward.

// ---------------------------------------------------------------------------
// conv2d: 3x3 kernels, stride 1, zero-fill same padding.

// Scratch carries the im2col buffer from forward to backward so training does
// not rebuild it. Pass nullptr for standalone use.
struct ConvScratch {
  std::vector<double> col;
  int rows = 0;
  int64_t cols = 0;
};

Tensor conv2d_forward(const Tensor& input, const Tensor& kernels, const Tensor& bias,
                      ConvScratch* scratch = nullptr);

struct Conv2dGrads {
  Tensor dkernels;
  Tensor dbias;
  Tensor dinput;  // empty unless requested
};

Conv2dGrads conv2d_backward(const Tensor& input, const Tensor& kernels, const Tensor& grad_out,
                            bool want_input_grad, ConvScratch* scratch = nullptr);

// Hot-path variant: parameter gradients accumulate straight into the given
// buffers (no temporaries); returns the input gradient when requested.
Tensor conv2d_backward_into(const Tensor& input, const Tensor& kernels, const Tensor& grad_out,
                            bool want_input_grad, ConvScratch* scratch, Tensor& dkernels_acc, Tensor& dbias_acc);

// ---------------------------------------------------------------------------
// PReLU, one learnable slope per channel.

Tensor prelu_forward(const Tensor& input, const Tensor& slope);

struct PreluGrads {
  Tensor dslope;
  Tensor dinput;
};

PreluGrads prelu_backward(const Tensor& input, const Tensor& slope, const Tensor& grad_out);

// ---------------------------------------------------------------------------
// 2x2 max pooling, stride 2. Argmax indices (flat into the input) are recorded
// for the backward routing; ties resolve to the first element in scan order.

struct PoolResult {
  Tensor output;
  std::vector<int32_t> argmax;
};

PoolResult maxpool2x2_forward(const Tensor& input);

Tensor maxpool2x2_backward(const std::vector<int32_t>& argmax, const Tensor& grad_out,
                           const std::vector<int>& input_shape);

// ---------------------------------------------------------------------------
// Inverted dropout. The mask is a pure function of (key, element index), so
// backward regenerates it instead of storing it.

Tensor dropout_forward(const Tensor& input, double rate, Mode mode, uint64_t key);
Tensor dropout_backward(const Tensor& grad_out, double rate, Mode mode, uint64_t key);

// ---------------------------------------------------------------------------
// Dense (fully connected): out = W x + b. Input [d_in] or row-stacked
// [F, d_in].

Tensor dense_forward(const Tensor& input, const Tensor& weight, const Tensor& bias);

struct DenseGrads {
  Tensor dweight;
  Tensor dbias;
  Tensor dinput;
};

DenseGrads dense_backward(const Tensor& input, const Tensor& weight, const Tensor& grad_out,
                          bool want_input_grad);

Tensor dense_backward_into(const Tensor& input, const Tensor& weight, const Tensor& grad_out, bool want_input_grad,
                           Tensor& dweight_acc, Tensor& dbias_acc);

// ---------------------------------------------------------------------------
// Mean squared error over equal-length vectors, with gradient w.r.t. pred.

struct MseResult {
  double loss;
  Tensor dpred;
};

MseResult mse_loss(const Tensor& pred, const Tensor& target);

// ---------------------------------------------------------------------------
// Activations shared with the LSTM.

double hard_sigmoid(double x);        // max(0, min(1, 0.2 x + 0.5))
double hard_sigmoid_deriv(double x);  // 0.2 on the linear segment, else 0

}  // namespace pvnet::nn
