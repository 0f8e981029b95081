#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "pvnet/gradcheck.hpp"
#include "pvnet/gradcheck_suite.hpp"
#include "pvnet/optim.hpp"

using namespace pvnet;
using namespace pvnet::nn;

TEST_SUITE_BEGIN("optim");

TEST_CASE("zero gradient leaves parameters unchanged") {
  Tensor p = Tensor::uniform({5}, 1.0, stream_key(1, "adam"));
  const Tensor before = p;
  AdamState s = AdamState::for_param(p);
  adam_update(p, Tensor({5}), s);
  for (int i = 0; i < 5; ++i) CHECK(p[i] == before[i]);
  CHECK(s.step_count == 1);
}

TEST_CASE("first step moves each coordinate by about lr against the gradient sign") {
  Tensor p({3}, {1.0, -2.0, 0.5});
  Tensor g({3}, {0.5, -0.25, 3.0});
  AdamState s = AdamState::for_param(p, 0.0015);
  adam_update(p, g, s);
  CHECK(p[0] == doctest::Approx(1.0 - 0.0015).epsilon(1e-6));
  CHECK(p[1] == doctest::Approx(-2.0 + 0.0015).epsilon(1e-6));
  CHECK(p[2] == doctest::Approx(0.5 - 0.0015).epsilon(1e-6));
}

TEST_CASE("two steps reproduce a hand-rolled reference trace") {
  for (int trial = 0; trial < 20; ++trial) {
    const uint64_t key = key_with(stream_key(2, "adam"), static_cast<uint64_t>(trial));
    const int n = 7;
    Tensor p = Tensor::uniform({n}, 1.0, key_with(key, 1));
    Tensor g1 = Tensor::uniform({n}, 1.0, key_with(key, 2));
    Tensor g2 = Tensor::uniform({n}, 1.0, key_with(key, 3));

    std::vector<double> rp(p.ptr(), p.ptr() + n);
    oracle::AdamTrace ref(n, 0.0015);
    std::vector<double> rg1(g1.ptr(), g1.ptr() + n), rg2(g2.ptr(), g2.ptr() + n);
    ref.step(rp, rg1);
    ref.step(rp, rg2);

    AdamState s = AdamState::for_param(p, 0.0015);
    adam_update(p, g1, s);
    adam_update(p, g2, s);
    for (int i = 0; i < n; ++i) {
      const double denom = std::max(std::abs(rp[static_cast<size_t>(i)]), 1e-12);
      CHECK(std::abs(p[i] - rp[static_cast<size_t>(i)]) / denom <= 1e-12);
    }
  }
}

TEST_CASE("adam rejects shape mismatches and keeps second moments nonnegative") {
  Tensor p({4});
  AdamState s = AdamState::for_param(p);
  CHECK_THROWS_AS(adam_update(p, Tensor({5}), s), DimensionError);
  Tensor g = Tensor::uniform({4}, 3.0, stream_key(3, "adam"));
  for (int i = 0; i < 10; ++i) adam_update(p, g, s);
  for (int i = 0; i < 4; ++i) CHECK(s.v[i] >= 0.0);
}

TEST_CASE("finite differences recover known derivatives") {
  Tensor x = Tensor::scalar(3.0);
  const auto quad = [&]() { return 0.5 * x[0] * x[0]; };
  const std::vector<Tensor> g = finite_diff_grad(quad, {&x});
  CHECK(g[0][0] == doctest::Approx(3.0).epsilon(1e-8));

  Tensor y = Tensor::scalar(-1.7);
  const double a = 2.75;
  const auto lin = [&]() { return a * y[0]; };
  const std::vector<Tensor> gl = finite_diff_grad(lin, {&y});
  CHECK(gl[0][0] == doctest::Approx(a).epsilon(1e-10));

  CHECK_THROWS_AS(finite_diff_grad(quad, {&x}, 0.0), ParameterError);
}

TEST_CASE("gradcheck suite passes on two seeds per layer") {
  const SuiteResult r = run_gradcheck_suite(1234, 2);
  CHECK(r.all_pass);
  CHECK(r.checks.size() == 8);
  for (const GradCheckResult& c : r.checks) {
    INFO(c.name << " max error " << c.max_error);
    CHECK(c.pass);
  }
}

TEST_CASE("corrupted conv backward is caught and named") {
  const SuiteResult r = run_gradcheck_suite(1234, 1, Fault::kConvBackward);
  CHECK_FALSE(r.all_pass);
  bool conv_failed = false;
  for (const GradCheckResult& c : r.checks)
    if (c.name == "conv2d" && !c.pass) conv_failed = true;
  CHECK(conv_failed);
}

TEST_SUITE_END();
