#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "pvnet/lstm.hpp"

using namespace pvnet;
using namespace pvnet::nn;

namespace {

LstmParams random_params(int units, int dim, uint64_t key, double scale = 0.7) {
  LstmParams p;
  p.w = Tensor::uniform({4 * units, dim}, scale, key_with(key, 1));
  p.u = Tensor::uniform({4 * units, units}, scale, key_with(key, 2));
  p.b = Tensor::uniform({4 * units}, scale, key_with(key, 3));
  return p;
}

LstmParams zero_params(int units, int dim) {
  LstmParams p;
  p.w = Tensor({4 * units, dim});
  p.u = Tensor({4 * units, units});
  p.b = Tensor({4 * units});
  return p;
}

}  // namespace

TEST_SUITE_BEGIN("lstm");

TEST_CASE("zero weights and zero previous cell give the fixed point") {
  const int u = 3, d = 2;
  const LstmParams p = zero_params(u, d);
  Tensor x = Tensor::uniform({d}, 1.0, stream_key(1, "lstm"));
  LstmStepCtx ctx;
  auto [h, c] = lstm_cell_step(x, Tensor({u}), Tensor({u}), p, &ctx);
  for (int j = 0; j < u; ++j) {
    CHECK(ctx.gates[j] == 0.5);  // every hard-sigmoid gate at 0
    CHECK(c[j] == 0.0);
    CHECK(h[j] == 0.0);
  }
}

TEST_CASE("zero weights carry half the previous cell state") {
  const int u = 2, d = 2;
  const LstmParams p = zero_params(u, d);
  Tensor c_prev({u}, {0.8, -1.2});
  auto [h, c] = lstm_cell_step(Tensor({d}), Tensor({u}), c_prev, p);
  for (int j = 0; j < u; ++j) {
    CHECK(c[j] == doctest::Approx(0.5 * c_prev[j]).epsilon(1e-15));
    CHECK(h[j] == doctest::Approx(0.5 * std::tanh(0.5 * c_prev[j])).epsilon(1e-15));
  }
}

TEST_CASE("lstm cell matches the transcription oracle on 20 random instances") {
  for (int trial = 0; trial < 20; ++trial) {
    const uint64_t key = key_with(stream_key(2, "lstm"), static_cast<uint64_t>(trial));
    const LstmParams p = random_params(3, 2, key);
    Tensor x = Tensor::uniform({2}, 1.0, key_with(key, 4));
    Tensor h_prev = Tensor::uniform({3}, 1.0, key_with(key, 5));
    Tensor c_prev = Tensor::uniform({3}, 1.0, key_with(key, 6));
    auto [h, c] = lstm_cell_step(x, h_prev, c_prev, p);
    Tensor oh, oc;
    oracle::lstm_step(x, h_prev, c_prev, p, oh, oc);
    CHECK(oracle::max_rel_err(h, oh) <= 1e-12);
    CHECK(oracle::max_rel_err(c, oc) <= 1e-12);
  }
}

TEST_CASE("hidden state stays bounded under saturating inputs") {
  const uint64_t key = stream_key(3, "lstm");
  const LstmParams p = random_params(4, 3, key, 5.0);  // large weights saturate the gates
  Tensor h({4}), c({4});
  for (int t = 0; t < 50; ++t) {
    Tensor x = Tensor::uniform({3}, 10.0, key_with(key, static_cast<uint64_t>(100 + t)));
    auto [h2, c2] = lstm_cell_step(x, h, c, p);
    h = h2;
    c = c2;
    for (int j = 0; j < 4; ++j) CHECK(std::abs(h[j]) <= 1.0);
  }
}

TEST_CASE("bilstm length one concatenates two independent zero-state steps") {
  const uint64_t key = stream_key(4, "bilstm");
  const LstmParams fp = random_params(3, 2, key_with(key, 1));
  const LstmParams bp = random_params(3, 2, key_with(key, 2));
  Tensor x = Tensor::uniform({2}, 1.0, key_with(key, 3));
  const std::vector<Tensor> out = bilstm_forward({x}, fp, bp);
  REQUIRE(out.size() == 1);
  auto [hf, cf] = lstm_cell_step(x, Tensor({3}), Tensor({3}), fp);
  auto [hb, cb] = lstm_cell_step(x, Tensor({3}), Tensor({3}), bp);
  for (int j = 0; j < 3; ++j) {
    CHECK(out[0][j] == hf[j]);
    CHECK(out[0][3 + j] == hb[j]);
  }
}

TEST_CASE("bilstm zero weights give zero outputs") {
  const LstmParams z = zero_params(2, 2);
  std::vector<Tensor> seq(5, Tensor::uniform({2}, 1.0, stream_key(5, "bilstm")));
  const std::vector<Tensor> out = bilstm_forward(seq, z, z);
  for (const Tensor& o : out)
    for (int64_t i = 0; i < o.numel(); ++i) CHECK(o[i] == 0.0);
}

TEST_CASE("backward half equals reverse(lstm(reverse(sequence)))") {
  const uint64_t key = stream_key(6, "bilstm");
  const LstmParams fp = random_params(3, 2, key_with(key, 1));
  const LstmParams bp = random_params(3, 2, key_with(key, 2));
  std::vector<Tensor> seq;
  for (int t = 0; t < 6; ++t) seq.push_back(Tensor::uniform({2}, 1.0, key_with(key, 10 + static_cast<uint64_t>(t))));

  const std::vector<Tensor> out = bilstm_forward(seq, fp, bp);

  std::vector<Tensor> rev(seq.rbegin(), seq.rend());
  const std::vector<Tensor> uni = oracle::lstm_sequence(rev, bp);
  for (size_t t = 0; t < seq.size(); ++t) {
    const Tensor& expect = uni[seq.size() - 1 - t];
    for (int j = 0; j < 3; ++j) CHECK(out[t][3 + j] == doctest::Approx(expect[j]).epsilon(1e-12));
  }
}

TEST_CASE("bilstm matches the transcription oracle on 20 random instances") {
  for (int trial = 0; trial < 20; ++trial) {
    const uint64_t key = key_with(stream_key(7, "bilstm"), static_cast<uint64_t>(trial));
    const LstmParams fp = random_params(2, 3, key_with(key, 1));
    const LstmParams bp = random_params(2, 3, key_with(key, 2));
    std::vector<Tensor> seq;
    for (int t = 0; t < 4; ++t) seq.push_back(Tensor::uniform({3}, 1.0, key_with(key, 10 + static_cast<uint64_t>(t))));
    const std::vector<Tensor> got = bilstm_forward(seq, fp, bp);
    const std::vector<Tensor> want = oracle::bilstm(seq, fp, bp);
    for (size_t t = 0; t < seq.size(); ++t) CHECK(oracle::max_rel_err(got[t], want[t]) <= 1e-12);
  }
}

TEST_CASE("bilstm rejects an empty sequence") {
  const LstmParams p = zero_params(2, 2);
  CHECK_THROWS_AS(bilstm_forward({}, p, p), ParameterError);
}

TEST_SUITE_END();
