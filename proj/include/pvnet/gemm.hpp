#pragma once

#include <cstddef>

namespace pvnet {

// Row-major double GEMM, C[M,N] += A[M,K] * B[K,N] (or = when accumulate is
// false). Fixed blocking and summation order: results are bit-deterministic
// for a given build, independent of call site.
void gemm_nn(const double* a, const double* b, double* c, int m, int k, int n, bool accumulate = true);

// C[M,N] += A[M,K] * B[N,K]^T
void gemm_nt(const double* a, const double* b, double* c, int m, int k, int n, bool accumulate = true);

// C[M,N] += A[K,M]^T * B[K,N]
void gemm_tn(const double* a, const double* b, double* c, int m, int k, int n, bool accumulate = true);

// y[M] += W[M,K] * x[K]
void matvec(const double* w, const double* x, double* y, int m, int k);

// y[K] += W[M,K]^T * x[M]
void matvec_t(const double* w, const double* x, double* y, int m, int k);

}  // namespace pvnet
