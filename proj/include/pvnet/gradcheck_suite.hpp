#pragma once

#include <vector>

#include "pvnet/gradcheck.hpp"

namespace pvnet::nn {

// Test-fixture fault injection: corrupts one analytic gradient so the
// negative-control path can be exercised end to end.
enum class Fault { kNone, kConvBackward };

struct SuiteResult {
  std::vector<GradCheckResult> checks;
  bool all_pass = false;
};

// Runs every layer gradient check plus the end-to-end tiny network check,
// n_seeds random instances each, against central finite differences
// (h = 1e-5, dropout off). Pass threshold: max relative error <= 1e-4.
SuiteResult run_gradcheck_suite(uint64_t seed, int n_seeds = 10, Fault fault = Fault::kNone);

}  // namespace pvnet::nn
