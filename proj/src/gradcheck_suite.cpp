#include "pvnet/gradcheck_suite.hpp"

#include <algorithm>
#include <cmath>

#include "pvnet/layers.hpp"
#include "pvnet/lstm.hpp"
#include "pvnet/model.hpp"

namespace pvnet::nn {

namespace {

constexpr double kThreshold = 1e-4;
constexpr double kStep = 1e-5;

// Resamples entries that sit within margin of a kink value so central
// differences stay on one linear segment. Deterministic per key.
void keep_away_from(Tensor& t, double kink, double margin, uint64_t key) {
  for (int64_t i = 0; i < t.numel(); ++i) {
    uint64_t bump = 1;
    while (std::abs(t[i] - kink) < margin) {
      t[i] = 2.0 * uniform01(key_with(key, static_cast<uint64_t>(i), bump), 0) - 1.0;
      ++bump;
    }
  }
}

double weighted_sum(const Tensor& out, const Tensor& weights) {
  double s = 0.0;
  for (int64_t i = 0; i < out.numel(); ++i) s += out[i] * weights[i];
  return s;
}

double check_one(const std::function<double()>& loss, const std::vector<Tensor*>& inputs,
                 const std::vector<Tensor>& analytic) {
  const std::vector<Tensor> numeric = finite_diff_grad(loss, inputs, kStep);
  double worst = 0.0;
  for (size_t i = 0; i < analytic.size(); ++i) worst = std::max(worst, max_rel_error(analytic[i], numeric[i]));
  return worst;
}

double conv2d_trial(uint64_t key, Fault fault) {
  Tensor input = Tensor::uniform({2, 4, 4}, 1.0, key_with(key, 1));
  Tensor kernels = Tensor::uniform({3, 2, 3, 3}, 0.5, key_with(key, 2));
  Tensor bias = Tensor::uniform({3}, 0.5, key_with(key, 3));
  const Tensor r = Tensor::uniform({3, 4, 4}, 1.0, key_with(key, 4));

  Conv2dGrads g = conv2d_backward(input, kernels, r, true);
  if (fault == Fault::kConvBackward)
    for (int64_t i = 0; i < g.dkernels.numel(); ++i) g.dkernels[i] += 0.01;
  const auto loss = [&]() { return weighted_sum(conv2d_forward(input, kernels, bias), r); };
  return check_one(loss, {&input, &kernels, &bias}, {g.dinput, g.dkernels, g.dbias});
}

double prelu_trial(uint64_t key) {
  Tensor input = Tensor::uniform({3, 4, 4}, 1.0, key_with(key, 1));
  keep_away_from(input, 0.0, 1e-3, key_with(key, 11));
  Tensor slope = Tensor::uniform({3}, 0.5, key_with(key, 2));
  const Tensor r = Tensor::uniform({3, 4, 4}, 1.0, key_with(key, 3));

  PreluGrads g = prelu_backward(input, slope, r);
  const auto loss = [&]() { return weighted_sum(prelu_forward(input, slope), r); };
  return check_one(loss, {&input, &slope}, {g.dinput, g.dslope});
}

double maxpool_trial(uint64_t key) {
  Tensor input = Tensor::uniform({2, 4, 4}, 1.0, key_with(key, 1));
  // separate pool-block competitors so the argmax is stable under the step
  for (int c = 0; c < 2; ++c) {
    for (int by = 0; by < 2; ++by) {
      for (int bx = 0; bx < 2; ++bx) {
        uint64_t bump = 0;
        for (bool ok = false; !ok; ++bump) {
          ok = true;
          double v[4] = {input.at(c, 2 * by, 2 * bx), input.at(c, 2 * by, 2 * bx + 1),
                         input.at(c, 2 * by + 1, 2 * bx), input.at(c, 2 * by + 1, 2 * bx + 1)};
          std::sort(v, v + 4);
          for (int i = 0; i + 1 < 4; ++i)
            if (v[i + 1] - v[i] < 1e-3) ok = false;
          if (!ok) {
            for (int dy = 0; dy < 2; ++dy)
              for (int dx = 0; dx < 2; ++dx)
                input.at(c, 2 * by + dy, 2 * bx + dx) =
                    2.0 * uniform01(key_with(key, 100 + (static_cast<uint64_t>(c) * 4 + by * 2 + bx) * 977 + bump,
                                             static_cast<uint64_t>(dy * 2 + dx)),
                                    0) -
                    1.0;
          }
        }
      }
    }
  }
  const Tensor r = Tensor::uniform({2, 2, 2}, 1.0, key_with(key, 2));
  const PoolResult pr = maxpool2x2_forward(input);
  const Tensor dinput = maxpool2x2_backward(pr.argmax, r, input.shape());
  const auto loss = [&]() { return weighted_sum(maxpool2x2_forward(input).output, r); };
  return check_one(loss, {&input}, {dinput});
}

double dense_trial(uint64_t key, bool head_shape) {
  const int d_in = head_shape ? 6 : 3;
  const int d_out = head_shape ? 1 : 2;
  Tensor input = Tensor::uniform({d_in}, 1.0, key_with(key, 1));
  Tensor weight = Tensor::uniform({d_out, d_in}, 0.7, key_with(key, 2));
  Tensor bias = Tensor::uniform({d_out}, 0.5, key_with(key, 3));
  const Tensor r = Tensor::uniform({d_out}, 1.0, key_with(key, 4));

  DenseGrads g = dense_backward(input, weight, r, true);
  const auto loss = [&]() { return weighted_sum(dense_forward(input, weight, bias), r); };
  return check_one(loss, {&input, &weight, &bias}, {g.dinput, g.dweight, g.dbias});
}

double lstm_cell_trial(uint64_t key) {
  const int u = 3, d = 2;
  LstmParams p;
  p.w = Tensor::uniform({4 * u, d}, 0.7, key_with(key, 1));
  p.u = Tensor::uniform({4 * u, u}, 0.7, key_with(key, 2));
  p.b = Tensor::uniform({4 * u}, 0.5, key_with(key, 3));
  Tensor x = Tensor::uniform({d}, 1.0, key_with(key, 4));
  Tensor h_prev = Tensor::uniform({u}, 1.0, key_with(key, 5));
  Tensor c_prev = Tensor::uniform({u}, 1.0, key_with(key, 6));
  const Tensor rh = Tensor::uniform({u}, 1.0, key_with(key, 7));
  const Tensor rc = Tensor::uniform({u}, 1.0, key_with(key, 8));

  LstmStepCtx ctx;
  lstm_cell_step(x, h_prev, c_prev, p, &ctx);
  LstmGrads acc;
  acc.init_like(p);
  const LstmStepGrads g = lstm_cell_backward(p, ctx, rh, rc, acc);

  const auto loss = [&]() {
    auto [h, c] = lstm_cell_step(x, h_prev, c_prev, p);
    return weighted_sum(h, rh) + weighted_sum(c, rc);
  };
  return check_one(loss, {&p.w, &p.u, &p.b, &x, &h_prev, &c_prev},
                   {acc.dw, acc.du, acc.db, g.dx, g.dh_prev, g.dc_prev});
}

double bilstm_trial(uint64_t key) {
  const int u = 2, d = 2, t_len = 3;
  LstmParams fp, bp;
  fp.w = Tensor::uniform({4 * u, d}, 0.7, key_with(key, 1));
  fp.u = Tensor::uniform({4 * u, u}, 0.7, key_with(key, 2));
  fp.b = Tensor::uniform({4 * u}, 0.5, key_with(key, 3));
  bp.w = Tensor::uniform({4 * u, d}, 0.7, key_with(key, 4));
  bp.u = Tensor::uniform({4 * u, u}, 0.7, key_with(key, 5));
  bp.b = Tensor::uniform({4 * u}, 0.5, key_with(key, 6));
  std::vector<Tensor> seq;
  std::vector<Tensor> r;
  for (int t = 0; t < t_len; ++t) {
    seq.push_back(Tensor::uniform({d}, 1.0, key_with(key, 10 + static_cast<uint64_t>(t))));
    r.push_back(Tensor::uniform({2 * u}, 1.0, key_with(key, 20 + static_cast<uint64_t>(t))));
  }

  BilstmCtx ctx;
  bilstm_forward(seq, fp, bp, &ctx);
  LstmGrads gf, gb;
  gf.init_like(fp);
  gb.init_like(bp);
  const std::vector<Tensor> dx = bilstm_backward(fp, bp, ctx, r, gf, gb);

  const auto loss = [&]() {
    const std::vector<Tensor> out = bilstm_forward(seq, fp, bp);
    double s = 0.0;
    for (int t = 0; t < t_len; ++t) s += weighted_sum(out[static_cast<size_t>(t)], r[static_cast<size_t>(t)]);
    return s;
  };
  return check_one(loss, {&fp.w, &fp.u, &fp.b, &bp.w, &bp.u, &bp.b, &seq[0], &seq[1], &seq[2]},
                   {gf.dw, gf.du, gf.db, gb.dw, gb.du, gb.db, dx[0], dx[1], dx[2]});
}

double e2e_trial(uint64_t key) {
  model::PVNetConfig cfg;
  cfg.conv_channels = {4, 4, 6, 6, 8, 8};
  cfg.grid_h = 8;
  cfg.grid_w = 8;
  cfg.fc_dim = 16;
  cfg.lstm_units = 4;
  cfg.dropout_conv = 0.0;
  cfg.dropout_fc = 0.0;

  // resample instances whose activations sit within reach of a kink: central
  // differences are invalid across PReLU/pool/hard-sigmoid break points
  model::WindowWorkPtr work(cfg);
  model::PVNetParams params;
  double pred = 0.0;
  for (uint64_t salt = 0;; ++salt) {
    const uint64_t k = key_with(key, 1000 + salt);
    cfg.seed = k;
    params = model::PVNetParams::init(cfg);
    Tensor& input = model::encoder_input(*work.p);
    input = Tensor::uniform(input.shape(), 1.0, key_with(k, 1));
    pred = model::forward_window(params, *work.p, Mode::kEval);
    if (model::kink_margin(*work.p) > 3e-4 || salt >= 500) break;
  }
  const Tensor input_copy = model::encoder_input(*work.p);
  const double target = 2.0 * uniform01(key_with(key, 2), 0) - 1.0;

  model::PVNetGrads grads;
  grads.init_like(params);
  model::backward_window(params, *work.p, 2.0 * (pred - target), grads);

  auto named = params.named();
  std::vector<Tensor*> tensors;
  for (auto& [name, t] : named) tensors.push_back(t);

  const auto loss = [&]() {
    model::encoder_input(*work.p) = input_copy;
    const double p = model::forward_window(params, *work.p, Mode::kEval);
    return (p - target) * (p - target);
  };
  double worst = 0.0;
  const std::vector<Tensor> numeric = finite_diff_grad(loss, tensors, kStep);
  for (size_t i = 0; i < numeric.size(); ++i) worst = std::max(worst, max_rel_error(grads.tensors[i], numeric[i]));
  return worst;
}

}  // namespace

SuiteResult run_gradcheck_suite(uint64_t seed, int n_seeds, Fault fault) {
  struct Entry {
    const char* name;
    std::function<double(uint64_t)> trial;
  };
  const std::vector<Entry> entries = {
      {"conv2d", [fault](uint64_t k) { return conv2d_trial(k, fault); }},
      {"prelu", [](uint64_t k) { return prelu_trial(k); }},
      {"maxpool", [](uint64_t k) { return maxpool_trial(k); }},
      {"dense", [](uint64_t k) { return dense_trial(k, false); }},
      {"lstm_cell", [](uint64_t k) { return lstm_cell_trial(k); }},
      {"bilstm", [](uint64_t k) { return bilstm_trial(k); }},
      {"head", [](uint64_t k) { return dense_trial(k, true); }},
      {"pvnet_e2e", [](uint64_t k) { return e2e_trial(k); }},
  };

  SuiteResult result;
  result.all_pass = true;
  for (size_t e = 0; e < entries.size(); ++e) {
    GradCheckResult r;
    r.name = entries[e].name;
    for (int trial = 0; trial < n_seeds; ++trial) {
      const uint64_t key = key_with(stream_key(seed, "gradcheck"), e, static_cast<uint64_t>(trial));
      r.max_error = std::max(r.max_error, entries[e].trial(key));
    }
    r.pass = r.max_error <= kThreshold;
    result.all_pass = result.all_pass && r.pass;
    result.checks.push_back(std::move(r));
  }
  return result;
}

}  // namespace pvnet::nn
