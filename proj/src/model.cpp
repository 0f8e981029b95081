#include "pvnet/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <sstream>

namespace pvnet::model {

PVNetConfig PVNetConfig::from_run_config(const io::RunConfig& rc) {
  PVNetConfig cfg;
  cfg.conv_channels = rc.conv_channels;
  cfg.grid_h = rc.grid_rows;
  cfg.grid_w = rc.grid_cols;
  cfg.fc_dim = rc.fc_dim;
  cfg.lstm_units = rc.lstm_units;
  cfg.dropout_conv = rc.dropout_conv;
  cfg.dropout_fc = rc.dropout_fc;
  cfg.lr = rc.lr;
  cfg.batch_size = rc.batch_size;
  cfg.epochs = rc.epochs;
  cfg.seed = rc.seed;
  cfg.validate();
  return cfg;
}

void PVNetConfig::validate() const {
  if (conv_channels.empty() || conv_channels.size() % 2 != 0)
    throw DimensionError("model config: conv_channels must hold pairs of layers");
  for (int c : conv_channels)
    if (c < 1) throw DimensionError("model config: conv channel counts must be >= 1");
  if (grid_h % (1 << n_pools()) != 0 || grid_w % (1 << n_pools()) != 0)
    throw DimensionError("model config: grid " + std::to_string(grid_h) + "x" + std::to_string(grid_w) +
                         " not divisible by 2^" + std::to_string(n_pools()) + " pooling stages");
  if (window_len < 1 || fc_dim < 1 || lstm_units < 1 || input_channels < 1)
    throw DimensionError("model config: dimensions must be positive");
  if (dropout_conv < 0.0 || dropout_conv >= 1.0 || dropout_fc < 0.0 || dropout_fc >= 1.0)
    throw ParameterError("model config: dropout rates must be in [0,1)");
}

namespace {

Tensor lstm_gate_weights(int units, int dim, double limit, uint64_t key) {
  return Tensor::uniform({4 * units, dim}, limit, key);
}

Tensor lstm_gate_bias(int units) {
  Tensor b({4 * units});
  for (int j = 0; j < units; ++j) b[j] = 1.0;  // forget-gate bias
  return b;
}

}  // namespace

PVNetParams PVNetParams::init(const PVNetConfig& cfg) {
  cfg.validate();
  PVNetParams p;
  p.config = cfg;
  const uint64_t root = stream_key(cfg.seed, "init");
  uint64_t idx = 0;
  int c_in = cfg.input_channels;
  for (int c_out : cfg.conv_channels) {
    ConvLayerParams layer;
    const double limit = std::sqrt(6.0 / (c_in * 9));
    layer.kernels = Tensor::uniform({c_out, c_in, 3, 3}, limit, key_with(root, idx++));
    layer.bias = Tensor({c_out});
    layer.slope = Tensor::full({c_out}, 0.25);
    p.conv.push_back(std::move(layer));
    c_in = c_out;
  }
  p.fc_weight = Tensor::uniform({cfg.fc_dim, cfg.flat_dim()}, std::sqrt(6.0 / cfg.flat_dim()), key_with(root, idx++));
  p.fc_bias = Tensor({cfg.fc_dim});
  const int u = cfg.lstm_units;
  p.lstm_fwd.w = lstm_gate_weights(u, cfg.fc_dim, 1.0 / std::sqrt(cfg.fc_dim), key_with(root, idx++));
  p.lstm_fwd.u = lstm_gate_weights(u, u, 1.0 / std::sqrt(u), key_with(root, idx++));
  p.lstm_fwd.b = lstm_gate_bias(u);
  p.lstm_bwd.w = lstm_gate_weights(u, cfg.fc_dim, 1.0 / std::sqrt(cfg.fc_dim), key_with(root, idx++));
  p.lstm_bwd.u = lstm_gate_weights(u, u, 1.0 / std::sqrt(u), key_with(root, idx++));
  p.lstm_bwd.b = lstm_gate_bias(u);
  p.head_weight = Tensor::uniform({1, cfg.head_dim()}, std::sqrt(6.0 / cfg.head_dim()), key_with(root, idx++));
  p.head_bias = Tensor({1});
  return p;
}

PVNetParams PVNetParams::zeros(const PVNetConfig& cfg) {
  PVNetParams p = init(cfg);
  for (auto& [name, t] : p.named()) t->fill(0.0);
  return p;
}

std::vector<std::pair<std::string, Tensor*>> PVNetParams::named() {
  std::vector<std::pair<std::string, Tensor*>> out;
  for (size_t i = 0; i < conv.size(); ++i) {
    const std::string prefix = "conv" + std::to_string(i);
    out.emplace_back(prefix + ".kernels", &conv[i].kernels);
    out.emplace_back(prefix + ".bias", &conv[i].bias);
    out.emplace_back(prefix + ".slope", &conv[i].slope);
  }
  out.emplace_back("fc.weight", &fc_weight);
  out.emplace_back("fc.bias", &fc_bias);
  out.emplace_back("lstm_fwd.w", &lstm_fwd.w);
  out.emplace_back("lstm_fwd.u", &lstm_fwd.u);
  out.emplace_back("lstm_fwd.b", &lstm_fwd.b);
  out.emplace_back("lstm_bwd.w", &lstm_bwd.w);
  out.emplace_back("lstm_bwd.u", &lstm_bwd.u);
  out.emplace_back("lstm_bwd.b", &lstm_bwd.b);
  out.emplace_back("head.weight", &head_weight);
  out.emplace_back("head.bias", &head_bias);
  return out;
}

std::vector<std::pair<std::string, const Tensor*>> PVNetParams::named() const {
  auto mut = const_cast<PVNetParams*>(this)->named();
  std::vector<std::pair<std::string, const Tensor*>> out;
  out.reserve(mut.size());
  for (auto& [n, t] : mut) out.emplace_back(n, t);
  return out;
}

int64_t PVNetParams::count() const {
  int64_t n = 0;
  for (const auto& [name, t] : named()) n += t->numel();
  return n;
}

void PVNetParams::quantize_f32_inplace() {
  for (auto& [name, t] : named())
    for (int64_t i = 0; i < t->numel(); ++i)
      (*t)[i] = static_cast<double>(static_cast<float>((*t)[i]));
}

void PVNetGrads::init_like(PVNetParams& params) {
  tensors.clear();
  for (auto& [name, t] : params.named()) tensors.emplace_back(t->shape());
}

void PVNetGrads::zero() {
  for (Tensor& t : tensors) t.fill(0.0);
}

// ---------------------------------------------------------------------------
// forward/backward plumbing

struct WindowWork {
  PVNetConfig cfg;
  Tensor input;                            // [C0, T, H, W]
  std::vector<Tensor> conv_pre;            // per conv layer, before PReLU
  std::vector<Tensor> conv_post;           // per conv layer, after PReLU+dropout
  std::vector<Tensor> pool_out;            // per pool stage
  std::vector<std::vector<int32_t>> pool_argmax;
  std::vector<std::vector<int>> pool_in_shape;
  std::vector<nn::ConvScratch> conv_scratch;
  Tensor fc_in;                            // [T, flat]
  Tensor fc_out;                           // [T, fc_dim]
  std::vector<Tensor> seq;                 // T x [fc_dim]
  nn::BilstmCtx lstm_ctx;
  std::vector<Tensor> lstm_out;            // T x [2u]
  Tensor head_in;                          // [T*2u]
  uint64_t dropout_root = 0;
  // dropout replay state recorded by the forward pass
  nn::Mode last_mode = nn::Mode::kEval;
  std::vector<uint64_t> conv_dropout_keys;
  uint64_t fc_dropout_key = 0;
};

WindowWork* new_window_work(const PVNetConfig& cfg) {
  cfg.validate();
  auto* w = new WindowWork();
  w->cfg = cfg;
  w->input = Tensor({cfg.input_channels, cfg.window_len, cfg.grid_h, cfg.grid_w});
  w->conv_pre.resize(static_cast<size_t>(cfg.n_conv()));
  w->conv_post.resize(static_cast<size_t>(cfg.n_conv()));
  w->pool_out.resize(static_cast<size_t>(cfg.n_pools()));
  w->pool_argmax.resize(static_cast<size_t>(cfg.n_pools()));
  w->pool_in_shape.resize(static_cast<size_t>(cfg.n_pools()));
  w->conv_scratch.resize(static_cast<size_t>(cfg.n_conv()));
  w->fc_in = Tensor({cfg.window_len, cfg.flat_dim()});
  w->seq.resize(static_cast<size_t>(cfg.window_len));
  w->dropout_root = stream_key(cfg.seed, "dropout");
  w->conv_dropout_keys.assign(static_cast<size_t>(cfg.n_conv()), 0);
  return w;
}

void free_window_work(WindowWork* w) { delete w; }

Tensor& encoder_input(WindowWork& work) { return work.input; }

namespace {

uint64_t dropout_key(const WindowWork& w, int layer_ordinal, int epoch, int sample) {
  const uint64_t es = (static_cast<uint64_t>(static_cast<uint32_t>(epoch)) << 32) |
                      static_cast<uint64_t>(static_cast<uint32_t>(sample));
  return key_with(w.dropout_root, static_cast<uint64_t>(layer_ordinal), es);
}

// [C_last, T, h, w] -> [T, C_last*h*w] with channel-major feature order
void flatten_frames(const Tensor& conv_out, Tensor& fc_in) {
  const int c = conv_out.dim(0), t_len = conv_out.dim(1);
  const int64_t hw = static_cast<int64_t>(conv_out.dim(2)) * conv_out.dim(3);
  for (int t = 0; t < t_len; ++t) {
    double* dst = fc_in.ptr() + static_cast<int64_t>(t) * c * hw;
    for (int ch = 0; ch < c; ++ch)
      std::memcpy(dst + ch * hw, conv_out.ptr() + (static_cast<int64_t>(ch) * t_len + t) * hw, sizeof(double) * hw);
  }
}

void unflatten_frames(const Tensor& dfc_in, const std::vector<int>& conv_shape, Tensor& dconv_out) {
  dconv_out = Tensor(conv_shape);
  const int c = conv_shape[0], t_len = conv_shape[1];
  const int64_t hw = static_cast<int64_t>(conv_shape[2]) * conv_shape[3];
  for (int t = 0; t < t_len; ++t) {
    const double* src = dfc_in.ptr() + static_cast<int64_t>(t) * c * hw;
    for (int ch = 0; ch < c; ++ch)
      std::memcpy(dconv_out.ptr() + (static_cast<int64_t>(ch) * t_len + t) * hw, src + ch * hw, sizeof(double) * hw);
  }
}

void axpy(Tensor& dst, const Tensor& src) {
  for (int64_t i = 0; i < dst.numel(); ++i) dst[i] += src[i];
}

}  // namespace

double forward_window(const PVNetParams& params, WindowWork& w, nn::Mode mode, int epoch, int sample) {
  const PVNetConfig& cfg = w.cfg;
  w.last_mode = mode;
  const bool conv_drop = mode == nn::Mode::kTrain && cfg.dropout_conv > 0.0;
  const bool fc_drop = mode == nn::Mode::kTrain && cfg.dropout_fc > 0.0;
  const Tensor* cur = &w.input;
  int pool_i = 0;
  for (int l = 0; l < cfg.n_conv(); ++l) {
    w.conv_pre[static_cast<size_t>(l)] =
        nn::conv2d_forward(*cur, params.conv[static_cast<size_t>(l)].kernels, params.conv[static_cast<size_t>(l)].bias,
                           &w.conv_scratch[static_cast<size_t>(l)]);
    Tensor act = nn::prelu_forward(w.conv_pre[static_cast<size_t>(l)], params.conv[static_cast<size_t>(l)].slope);
    w.conv_dropout_keys[static_cast<size_t>(l)] = dropout_key(w, l, epoch, sample);
    w.conv_post[static_cast<size_t>(l)] =
        conv_drop ? nn::dropout_forward(act, cfg.dropout_conv, mode, w.conv_dropout_keys[static_cast<size_t>(l)])
                  : std::move(act);
    cur = &w.conv_post[static_cast<size_t>(l)];
    if (l % 2 == 1) {
      w.pool_in_shape[static_cast<size_t>(pool_i)] = cur->shape();
      nn::PoolResult pr = nn::maxpool2x2_forward(*cur);
      w.pool_out[static_cast<size_t>(pool_i)] = std::move(pr.output);
      w.pool_argmax[static_cast<size_t>(pool_i)] = std::move(pr.argmax);
      cur = &w.pool_out[static_cast<size_t>(pool_i)];
      ++pool_i;
    }
  }

  flatten_frames(*cur, w.fc_in);
  w.fc_out = nn::dense_forward(w.fc_in, params.fc_weight, params.fc_bias);
  w.fc_dropout_key = dropout_key(w, cfg.n_conv(), epoch, sample);
  Tensor fc_dropped_local;
  if (fc_drop) fc_dropped_local = nn::dropout_forward(w.fc_out, cfg.dropout_fc, mode, w.fc_dropout_key);
  const Tensor& fc_dropped = fc_drop ? fc_dropped_local : w.fc_out;

  for (int t = 0; t < cfg.window_len; ++t) {
    Tensor x({cfg.fc_dim});
    std::memcpy(x.ptr(), fc_dropped.ptr() + static_cast<int64_t>(t) * cfg.fc_dim, sizeof(double) * cfg.fc_dim);
    w.seq[static_cast<size_t>(t)] = std::move(x);
  }
  w.lstm_out = nn::bilstm_forward(w.seq, params.lstm_fwd, params.lstm_bwd, &w.lstm_ctx);

  const int u2 = 2 * cfg.lstm_units;
  w.head_in = Tensor({cfg.head_dim()});
  for (int t = 0; t < cfg.window_len; ++t)
    std::memcpy(w.head_in.ptr() + static_cast<int64_t>(t) * u2, w.lstm_out[static_cast<size_t>(t)].ptr(),
                sizeof(double) * u2);

  const Tensor pred = nn::dense_forward(w.head_in, params.head_weight, params.head_bias);
  return pred[0];
}

void backward_window(const PVNetParams& params, WindowWork& w, double dpred, PVNetGrads& grads) {
  const PVNetConfig& cfg = w.cfg;
  const int n_conv = cfg.n_conv();
  const bool conv_drop = w.last_mode == nn::Mode::kTrain && cfg.dropout_conv > 0.0;
  const bool fc_drop = w.last_mode == nn::Mode::kTrain && cfg.dropout_fc > 0.0;
  // grads tensor order: conv (k,b,s)*, fc w/b, lstm_fwd w/u/b, lstm_bwd w/u/b, head w/b
  const size_t g_fc = static_cast<size_t>(3 * n_conv);
  const size_t g_lf = g_fc + 2;
  const size_t g_lb = g_lf + 3;
  const size_t g_head = g_lb + 3;

  // head
  Tensor dpred_t({1});
  dpred_t[0] = dpred;
  const Tensor dhead_in = nn::dense_backward_into(w.head_in, params.head_weight, dpred_t, true,
                                                  grads.tensors[g_head], grads.tensors[g_head + 1]);

  // split into per-timestep hidden grads
  const int u2 = 2 * cfg.lstm_units;
  std::vector<Tensor> dout(static_cast<size_t>(cfg.window_len));
  for (int t = 0; t < cfg.window_len; ++t) {
    Tensor d({u2});
    std::memcpy(d.ptr(), dhead_in.ptr() + static_cast<int64_t>(t) * u2, sizeof(double) * u2);
    dout[static_cast<size_t>(t)] = std::move(d);
  }

  // recurrent gradients accumulate straight into the batch buffers
  nn::LstmGrads gf, gb;
  gf.dw = std::move(grads.tensors[g_lf]);
  gf.du = std::move(grads.tensors[g_lf + 1]);
  gf.db = std::move(grads.tensors[g_lf + 2]);
  gb.dw = std::move(grads.tensors[g_lb]);
  gb.du = std::move(grads.tensors[g_lb + 1]);
  gb.db = std::move(grads.tensors[g_lb + 2]);
  std::vector<Tensor> dx = nn::bilstm_backward(params.lstm_fwd, params.lstm_bwd, w.lstm_ctx, dout, gf, gb);
  grads.tensors[g_lf] = std::move(gf.dw);
  grads.tensors[g_lf + 1] = std::move(gf.du);
  grads.tensors[g_lf + 2] = std::move(gf.db);
  grads.tensors[g_lb] = std::move(gb.dw);
  grads.tensors[g_lb + 1] = std::move(gb.du);
  grads.tensors[g_lb + 2] = std::move(gb.db);

  // back through the fc dropout and dense
  Tensor dfc_dropped({cfg.window_len, cfg.fc_dim});
  for (int t = 0; t < cfg.window_len; ++t)
    std::memcpy(dfc_dropped.ptr() + static_cast<int64_t>(t) * cfg.fc_dim, dx[static_cast<size_t>(t)].ptr(),
                sizeof(double) * cfg.fc_dim);
  const Tensor dfc_out =
      fc_drop ? nn::dropout_backward(dfc_dropped, cfg.dropout_fc, w.last_mode, w.fc_dropout_key)
              : std::move(dfc_dropped);
  const Tensor dflat =
      nn::dense_backward_into(w.fc_in, params.fc_weight, dfc_out, true, grads.tensors[g_fc], grads.tensors[g_fc + 1]);

  // back through the conv stack
  const Tensor* top = cfg.n_pools() > 0 ? &w.pool_out[static_cast<size_t>(cfg.n_pools() - 1)]
                                        : &w.conv_post[static_cast<size_t>(n_conv - 1)];
  Tensor dcur;
  unflatten_frames(dflat, top->shape(), dcur);

  int pool_i = cfg.n_pools() - 1;
  for (int l = n_conv - 1; l >= 0; --l) {
    if (l % 2 == 1) {
      dcur = nn::maxpool2x2_backward(w.pool_argmax[static_cast<size_t>(pool_i)], dcur,
                                     w.pool_in_shape[static_cast<size_t>(pool_i)]);
      --pool_i;
    }
    const Tensor dact =
        conv_drop ? nn::dropout_backward(dcur, cfg.dropout_conv, w.last_mode, w.conv_dropout_keys[static_cast<size_t>(l)])
                  : std::move(dcur);
    nn::PreluGrads pg =
        nn::prelu_backward(w.conv_pre[static_cast<size_t>(l)], params.conv[static_cast<size_t>(l)].slope, dact);
    const Tensor* conv_in = l == 0 ? &w.input
                            : (l % 2 == 0 ? &w.pool_out[static_cast<size_t>(l / 2 - 1)]
                                          : &w.conv_post[static_cast<size_t>(l - 1)]);
    Tensor dinput = nn::conv2d_backward_into(*conv_in, params.conv[static_cast<size_t>(l)].kernels, pg.dinput, l > 0,
                                             &w.conv_scratch[static_cast<size_t>(l)],
                                             grads.tensors[static_cast<size_t>(3 * l)],
                                             grads.tensors[static_cast<size_t>(3 * l) + 1]);
    axpy(grads.tensors[static_cast<size_t>(3 * l) + 2], pg.dslope);
    if (l > 0) dcur = std::move(dinput);
  }
}

double kink_margin(const WindowWork& w) {
  double margin = std::numeric_limits<double>::infinity();
  for (const Tensor& pre : w.conv_pre)
    for (int64_t i = 0; i < pre.numel(); ++i) margin = std::min(margin, std::abs(pre[i]));
  // pool inputs: gap between the block max and runner-up decides argmax stability
  for (int l = 1; l < w.cfg.n_conv(); l += 2) {
    const Tensor& in = w.conv_post[static_cast<size_t>(l)];
    const int c = in.dim(0), f = in.dim(1), h = in.dim(2), ww = in.dim(3);
    for (int ch = 0; ch < c; ++ch)
      for (int fr = 0; fr < f; ++fr)
        for (int y = 0; y + 1 < h; y += 2)
          for (int x = 0; x + 1 < ww; x += 2) {
            double v[4] = {in.at(ch, fr, y, x), in.at(ch, fr, y, x + 1), in.at(ch, fr, y + 1, x),
                           in.at(ch, fr, y + 1, x + 1)};
            std::sort(v, v + 4);
            margin = std::min(margin, v[3] - v[2]);
          }
  }
  const int u = w.cfg.lstm_units;
  auto gate_margin = [&margin, u](const std::vector<nn::LstmStepCtx>& steps) {
    for (const nn::LstmStepCtx& s : steps)
      for (int j = 0; j < 3 * u; ++j)
        margin = std::min({margin, std::abs(s.pre[j] - 2.5), std::abs(s.pre[j] + 2.5)});
  };
  gate_margin(w.lstm_ctx.fwd);
  gate_margin(w.lstm_ctx.bwd);
  return margin;
}

Tensor encode_frame(const PVNetParams& params, const Tensor& frame, nn::Mode mode, uint64_t dropout_key_base) {
  const PVNetConfig& cfg = params.config;
  if (frame.ndim() != 3 || frame.dim(0) != cfg.input_channels)
    throw DimensionError("encode_frame: expected [C,H,W] with C=" + std::to_string(cfg.input_channels) + ", got " +
                         shape_str(frame.shape()));
  if (frame.dim(1) % (1 << cfg.n_pools()) != 0 || frame.dim(2) % (1 << cfg.n_pools()) != 0)
    throw DimensionError("encode_frame: spatial dims must survive " + std::to_string(cfg.n_pools()) + " pools");
  Tensor cur = frame;
  for (int l = 0; l < cfg.n_conv(); ++l) {
    Tensor pre = nn::conv2d_forward(cur, params.conv[static_cast<size_t>(l)].kernels,
                                    params.conv[static_cast<size_t>(l)].bias);
    Tensor act = nn::prelu_forward(pre, params.conv[static_cast<size_t>(l)].slope);
    cur = nn::dropout_forward(act, cfg.dropout_conv, mode, key_with(dropout_key_base, static_cast<uint64_t>(l)));
    if (l % 2 == 1) cur = nn::maxpool2x2_forward(cur).output;
  }
  // [C,h,w] is already channel-major, matching the batched flatten order
  Tensor flat({cfg.flat_dim()});
  std::memcpy(flat.ptr(), cur.ptr(), sizeof(double) * static_cast<size_t>(cfg.flat_dim()));
  Tensor fc = nn::dense_forward(flat, params.fc_weight, params.fc_bias);
  return nn::dropout_forward(fc, cfg.dropout_fc, mode, key_with(dropout_key_base, static_cast<uint64_t>(cfg.n_conv())));
}

void load_feature_window(WindowWork& work, const Tensor& window_inputs) {
  const PVNetConfig& cfg = work.cfg;
  window_inputs.require_shape({cfg.window_len, cfg.input_channels, cfg.grid_h, cfg.grid_w}, "feature window inputs");
  const int64_t plane = static_cast<int64_t>(cfg.grid_h) * cfg.grid_w;
  for (int c = 0; c < cfg.input_channels; ++c)
    for (int t = 0; t < cfg.window_len; ++t)
      std::memcpy(work.input.ptr() + (static_cast<int64_t>(c) * cfg.window_len + t) * plane,
                  window_inputs.ptr() + (static_cast<int64_t>(t) * cfg.input_channels + c) * plane,
                  sizeof(double) * plane);
}

double predict_window(const PVNetParams& params, const Tensor& window_inputs, WindowWork* work) {
  if (work) {
    load_feature_window(*work, window_inputs);
    return forward_window(params, *work, nn::Mode::kEval);
  }
  WindowWorkPtr local(params.config);
  load_feature_window(*local.p, window_inputs);
  return forward_window(params, *local.p, nn::Mode::kEval);
}

PowerSeries predict(const PVNetParams& params, const features::Dataset& ds, int first, int count) {
  if (!ds.is_normalized()) throw ParameterError("predict: dataset must be normalized");
  if (first < 0 || count < 1 || first + count > ds.n_windows())
    throw ParameterError("predict: window range out of bounds");
  for (const auto& [name, t] : params.named()) t->require_finite(name.c_str());

  WindowWorkPtr work(params.config);
  PowerSeries out;
  out.t0 = ds.target_time(first);
  out.dt = ds.frame_time(1) - ds.frame_time(0);
  out.values_mw.resize(static_cast<size_t>(count));
  const double scale = ds.stats().target_scale;
  for (int i = 0; i < count; ++i) {
    ds.fill_encoder_input(first + i, work.p->input);
    const double pred = forward_window(params, *work.p, nn::Mode::kEval);
    out.values_mw[static_cast<size_t>(i)] = std::max(0.0, pred * scale);
  }
  return out;
}

TrainResult train(const features::Dataset& ds, const features::Split& split, const PVNetConfig& cfg) {
  if (!ds.is_normalized()) throw ParameterError("train: dataset must be normalized");
  if (split.n_train < 1) throw ParameterError("train: empty train split");
  if (split.n_train + split.n_val > ds.n_windows()) throw ParameterError("train: split exceeds dataset");

  PVNetParams params = PVNetParams::init(cfg);
  PVNetGrads grads;
  grads.init_like(params);
  auto named = params.named();
  std::vector<nn::AdamState> opt;
  opt.reserve(named.size());
  for (auto& [name, t] : named) opt.push_back(nn::AdamState::for_param(*t, cfg.lr));

  WindowWorkPtr work(cfg);
  const uint64_t shuffle_root = stream_key(cfg.seed, "shuffle");

  TrainResult result;
  result.params = params;
  double best_val = std::numeric_limits<double>::infinity();

  std::vector<int> order(static_cast<size_t>(split.n_train));
  for (int e = 0; e < cfg.epochs; ++e) {
    for (int i = 0; i < split.n_train; ++i) order[static_cast<size_t>(i)] = i;
    const uint64_t ekey = key_with(shuffle_root, static_cast<uint64_t>(e));
    for (int i = split.n_train - 1; i > 0; --i) {
      const int j = static_cast<int>(uniform01(ekey, static_cast<uint64_t>(i)) * (i + 1));
      std::swap(order[static_cast<size_t>(i)], order[static_cast<size_t>(std::min(j, i))]);
    }

    double se_sum = 0.0;
    int batch_no = 0;
    for (int start = 0; start < split.n_train; start += cfg.batch_size, ++batch_no) {
      const int b = std::min(cfg.batch_size, split.n_train - start);
      grads.zero();
      double batch_se = 0.0;
      for (int k = 0; k < b; ++k) {
        const int idx = order[static_cast<size_t>(start + k)];
        ds.fill_encoder_input(idx, work.p->input);
        const double pred = forward_window(params, *work.p, nn::Mode::kTrain, e, idx);
        const double err = pred - ds.target(idx);
        batch_se += err * err;
        backward_window(params, *work.p, 2.0 * err / b, grads);
      }
      if (!std::isfinite(batch_se))
        throw NumericError("training diverged: non-finite loss in epoch " + std::to_string(e) + " batch " +
                           std::to_string(batch_no));
      se_sum += batch_se;
      for (size_t p = 0; p < named.size(); ++p) nn::adam_update(*named[p].second, grads.tensors[p], opt[p]);
    }
    const double train_mse = se_sum / split.n_train;

    double val_se = 0.0;
    for (int v = 0; v < split.n_val; ++v) {
      ds.fill_encoder_input(split.n_train + v, work.p->input);
      const double pred = forward_window(params, *work.p, nn::Mode::kEval);
      const double err = pred - ds.target(split.n_train + v);
      val_se += err * err;
    }
    const double val_mse = split.n_val > 0 ? val_se / split.n_val : 0.0;
    if (!std::isfinite(train_mse) || !std::isfinite(val_mse))
      throw NumericError("training diverged: non-finite loss at epoch " + std::to_string(e));

    result.train_mse.push_back(train_mse);
    result.val_mse.push_back(val_mse);
    if (val_mse < best_val) {
      best_val = val_mse;
      result.params = params;
      result.best_epoch = e;
    }
  }
  return result;
}

std::string format_loss_log(const TrainResult& r) {
  std::ostringstream os;
  for (size_t e = 0; e < r.train_mse.size(); ++e) {
    char line[96];
    std::snprintf(line, sizeof(line), "%zu %.17g %.17g\n", e, r.train_mse[e], r.val_mse[e]);
    os << line;
  }
  return os.str();
}

io::Checkpoint to_checkpoint(const PVNetParams& params, const features::NormStats& stats,
                             const std::vector<std::string>& config_echo) {
  io::Checkpoint ckpt;
  ckpt.config_echo = config_echo;
  for (const auto& [name, t] : params.named()) ckpt.tensors.push_back({name, *t});
  Tensor mean({5}), stdev({5}), scale({1});
  for (int c = 0; c < 5; ++c) {
    mean[c] = stats.mean[static_cast<size_t>(c)];
    stdev[c] = stats.std[static_cast<size_t>(c)];
  }
  scale[0] = stats.target_scale;
  ckpt.tensors.push_back({"norm.mean", std::move(mean)});
  ckpt.tensors.push_back({"norm.std", std::move(stdev)});
  ckpt.tensors.push_back({"norm.target_scale", std::move(scale)});
  return ckpt;
}

LoadedModel from_checkpoint(const io::Checkpoint& ckpt) {
  std::string cfg_text;
  for (const std::string& line : ckpt.config_echo) cfg_text += line + "\n";
  LoadedModel lm;
  lm.run_config = io::parse_config_text(cfg_text);
  lm.params = PVNetParams::zeros(PVNetConfig::from_run_config(lm.run_config));
  for (auto& [name, t] : lm.params.named()) {
    const Tensor& stored = ckpt.find(name);
    if (!stored.same_shape(*t))
      throw FormatError("checkpoint tensor '" + name + "' has shape " + shape_str(stored.shape()) +
                        " but the config echo implies " + shape_str(t->shape()));
    *t = stored;
  }
  const Tensor& mean = ckpt.find("norm.mean");
  const Tensor& stdev = ckpt.find("norm.std");
  const Tensor& scale = ckpt.find("norm.target_scale");
  if (mean.numel() != 5 || stdev.numel() != 5 || scale.numel() != 1)
    throw FormatError("checkpoint normalization tensors malformed");
  lm.stats.mean.assign(mean.ptr(), mean.ptr() + 5);
  lm.stats.std.assign(stdev.ptr(), stdev.ptr() + 5);
  lm.stats.target_scale = scale[0];
  return lm;
}

}  // namespace pvnet::model
