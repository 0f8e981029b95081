#pragma once

#include <string>
#include <vector>

#include "pvnet/features.hpp"
#include "pvnet/io.hpp"
#include "pvnet/layers.hpp"
#include "pvnet/lstm.hpp"
#include "pvnet/optim.hpp"

namespace pvnet::model {

// Architecture: a shared-weight conv encoder per window frame (pairs of 3x3
// conv + PReLU + dropout, 2x2 max pool after each pair, flatten, dense to
// fc_dim, dropout), a bidirectional LSTM across the window, and a dense head
// over the concatenation of every bidirectional hidden output.
struct PVNetConfig {
  std::vector<int> conv_channels = {64, 64, 128, 128, 256, 256};
  int input_channels = 5;
  int grid_h = 16;
  int grid_w = 16;
  int window_len = 8;
  int fc_dim = 512;
  int lstm_units = 128;
  double dropout_conv = 0.20;
  double dropout_fc = 0.30;
  double lr = 0.0015;
  int batch_size = 32;
  int epochs = 60;
  uint64_t seed = 42;

  static PVNetConfig from_run_config(const io::RunConfig& rc);
  void validate() const;

  int n_conv() const { return static_cast<int>(conv_channels.size()); }
  int n_pools() const { return n_conv() / 2; }
  int final_h() const { return grid_h >> n_pools(); }
  int final_w() const { return grid_w >> n_pools(); }
  int flat_dim() const { return conv_channels.back() * final_h() * final_w(); }
  int head_dim() const { return window_len * 2 * lstm_units; }
};

struct ConvLayerParams {
  Tensor kernels;  // [C_out, C_in, 3, 3]
  Tensor bias;     // [C_out]
  Tensor slope;    // [C_out] PReLU
};

struct PVNetParams {
  PVNetConfig config;
  std::vector<ConvLayerParams> conv;
  Tensor fc_weight, fc_bias;
  nn::LstmParams lstm_fwd, lstm_bwd;
  Tensor head_weight, head_bias;  // [1, head_dim], [1]

  static PVNetParams init(const PVNetConfig& cfg);
  static PVNetParams zeros(const PVNetConfig& cfg);

  // Fixed enumeration order shared by the optimizer and the checkpoint format.
  std::vector<std::pair<std::string, Tensor*>> named();
  std::vector<std::pair<std::string, const Tensor*>> named() const;
  int64_t count() const;
  void quantize_f32_inplace();
};

// Gradients mirror the parameter tensors (same named order).
struct PVNetGrads {
  std::vector<Tensor> tensors;
  void init_like(PVNetParams& params);
  void zero();
};

// Reusable per-thread scratch for one window's forward/backward.
struct WindowWork;
WindowWork* new_window_work(const PVNetConfig& cfg);
void free_window_work(WindowWork* w);

struct WindowWorkPtr {
  WindowWork* p = nullptr;
  explicit WindowWorkPtr(const PVNetConfig& cfg) : p(new_window_work(cfg)) {}
  ~WindowWorkPtr() { free_window_work(p); }
  WindowWorkPtr(const WindowWorkPtr&) = delete;
  WindowWorkPtr& operator=(const WindowWorkPtr&) = delete;
};

// Encoder input accessor on the work buffer, laid out [C, T, H, W].
Tensor& encoder_input(WindowWork& work);

// Forward pass over the window held in encoder_input(work); returns the scalar
// prediction in normalized units. epoch/sample seed the dropout streams.
double forward_window(const PVNetParams& params, WindowWork& work, nn::Mode mode, int epoch = 0, int sample = 0);

// Backward from d(loss)/d(pred); accumulates parameter gradients.
void backward_window(const PVNetParams& params, WindowWork& work, double dpred, PVNetGrads& grads);

// Smallest distance of any pre-activation in the last forward pass to its
// nearest activation kink (PReLU at zero, pool argmax runner-up gap,
// hard-sigmoid saturation edges). Finite-difference checks resample instances
// whose margin is too small for the step size.
double kink_margin(const WindowWork& work);

// Shared-weight frame encoder (the g of the architecture), [C,H,W] -> [fc_dim].
Tensor encode_frame(const PVNetParams& params, const Tensor& frame, nn::Mode mode, uint64_t dropout_key = 0);

// Copies a [T,C,H,W] feature-window tensor into the work buffer's layout.
void load_feature_window(WindowWork& work, const Tensor& window_inputs);

// Eval-mode prediction for one materialized feature window ([T,C,H,W] layout),
// normalized units. Pass a work buffer to avoid per-call allocation.
double predict_window(const PVNetParams& params, const Tensor& window_inputs, WindowWork* work = nullptr);

// Eval-mode predictions over dataset windows [first, first+count), converted
// back to MW and clamped below at zero.
PowerSeries predict(const PVNetParams& params, const features::Dataset& ds, int first, int count);

struct TrainResult {
  PVNetParams params;  // best-validation parameters
  std::vector<double> train_mse, val_mse;
  int best_epoch = 0;
};

// Mini-batch Adam training on the chronological split; deterministic per seed.
TrainResult train(const features::Dataset& ds, const features::Split& split, const PVNetConfig& cfg);

// Loss-log serialization: "epoch train_mse val_mse" per line.
std::string format_loss_log(const TrainResult& r);

// Checkpoint glue: parameters plus the normalization statistics needed to run
// the model on rebuilt datasets.
io::Checkpoint to_checkpoint(const PVNetParams& params, const features::NormStats& stats,
                             const std::vector<std::string>& config_echo);

struct LoadedModel {
  PVNetParams params;
  features::NormStats stats;
  io::RunConfig run_config;  // reconstructed from the config echo
};
LoadedModel from_checkpoint(const io::Checkpoint& ckpt);

}  // namespace pvnet::model
