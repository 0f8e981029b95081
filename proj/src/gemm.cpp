#include "pvnet/gemm.hpp"

#include <algorithm>
#include <cstring>
#include <vector>

#if defined(__AVX512F__)
#include <immintrin.h>
#endif

namespace pvnet {

namespace {

// Cache blocking: panels of A (MC x KC) and B (KC x NC) are packed into
// contiguous micro-tile strips and consumed by an MR x NR register kernel.
constexpr int MR = 8;
constexpr int NR = 16;
constexpr int KC = 192;
constexpr int MC = 96;
constexpr int NC = 2048;

struct Workspace {
  std::vector<double> a;  // (MC+MR) * KC
  std::vector<double> b;  // KC * (NC+NR)
  Workspace() : a(static_cast<size_t>(MC + MR) * KC), b(static_cast<size_t>(KC) * (NC + NR)) {}
};

thread_local Workspace tls_ws;

// Pack an mc x kc block of a strided matrix into MR-row strips, k-major.
void pack_a(const double* a, ptrdiff_t rs, ptrdiff_t cs, int mc, int kc, double* out) {
  for (int i0 = 0; i0 < mc; i0 += MR) {
    const int mr = std::min(MR, mc - i0);
    for (int k = 0; k < kc; ++k) {
      const double* src = a + (i0) * rs + k * cs;
      int i = 0;
      for (; i < mr; ++i) out[i] = src[i * rs];
      for (; i < MR; ++i) out[i] = 0.0;
      out += MR;
    }
  }
}

// Pack a kc x nc block of a strided matrix into NR-column strips, k-major.
void pack_b(const double* b, ptrdiff_t rs, ptrdiff_t cs, int kc, int nc, double* out) {
  for (int j0 = 0; j0 < nc; j0 += NR) {
    const int nr = std::min(NR, nc - j0);
    for (int k = 0; k < kc; ++k) {
      const double* src = b + k * rs + (j0) * cs;
      int j = 0;
      for (; j < nr; ++j) out[j] = src[j * cs];
      for (; j < NR; ++j) out[j] = 0.0;
      out += NR;
    }
  }
}

#if defined(__AVX512F__)

void micro_kernel(const double* ap, const double* bp, int kc, double* c, int ldc, int mr, int nr, bool add_c) {
  __m512d acc[MR][2];
  for (int i = 0; i < MR; ++i) {
    acc[i][0] = _mm512_setzero_pd();
    acc[i][1] = _mm512_setzero_pd();
  }
  for (int k = 0; k < kc; ++k) {
    const __m512d b0 = _mm512_loadu_pd(bp + static_cast<size_t>(k) * NR);
    const __m512d b1 = _mm512_loadu_pd(bp + static_cast<size_t>(k) * NR + 8);
    const double* arow = ap + static_cast<size_t>(k) * MR;
    for (int i = 0; i < MR; ++i) {
      const __m512d ai = _mm512_set1_pd(arow[i]);
      acc[i][0] = _mm512_fmadd_pd(ai, b0, acc[i][0]);
      acc[i][1] = _mm512_fmadd_pd(ai, b1, acc[i][1]);
    }
  }
  if (mr == MR && nr == NR) {
    for (int i = 0; i < MR; ++i) {
      double* crow = c + static_cast<size_t>(i) * ldc;
      if (add_c) {
        _mm512_storeu_pd(crow, _mm512_add_pd(_mm512_loadu_pd(crow), acc[i][0]));
        _mm512_storeu_pd(crow + 8, _mm512_add_pd(_mm512_loadu_pd(crow + 8), acc[i][1]));
      } else {
        _mm512_storeu_pd(crow, acc[i][0]);
        _mm512_storeu_pd(crow + 8, acc[i][1]);
      }
    }
  } else {
    alignas(64) double tmp[MR * NR];
    for (int i = 0; i < MR; ++i) {
      _mm512_store_pd(tmp + i * NR, acc[i][0]);
      _mm512_store_pd(tmp + i * NR + 8, acc[i][1]);
    }
    for (int i = 0; i < mr; ++i)
      for (int j = 0; j < nr; ++j) {
        double* cij = c + static_cast<size_t>(i) * ldc + j;
        *cij = (add_c ? *cij : 0.0) + tmp[i * NR + j];
      }
  }
}

#else

void micro_kernel(const double* ap, const double* bp, int kc, double* c, int ldc, int mr, int nr, bool add_c) {
  double acc[MR][NR] = {};
  for (int k = 0; k < kc; ++k) {
    const double* brow = bp + static_cast<size_t>(k) * NR;
    const double* arow = ap + static_cast<size_t>(k) * MR;
    for (int i = 0; i < MR; ++i) {
      const double ai = arow[i];
      for (int j = 0; j < NR; ++j) acc[i][j] += ai * brow[j];
    }
  }
  for (int i = 0; i < mr; ++i)
    for (int j = 0; j < nr; ++j) {
      double* cij = c + static_cast<size_t>(i) * ldc + j;
      *cij = (add_c ? *cij : 0.0) + acc[i][j];
    }
}

#endif

// General strided GEMM: C[M,N] += A(strided) * B(strided), C row-major.
void gemm_strided(const double* a, ptrdiff_t ars, ptrdiff_t acs, const double* b, ptrdiff_t brs, ptrdiff_t bcs,
                  double* c, int m, int k, int n, bool accumulate) {
  Workspace& ws = tls_ws;
  for (int j0 = 0; j0 < n; j0 += NC) {
    const int nc = std::min(NC, n - j0);
    for (int k0 = 0; k0 < k; k0 += KC) {
      const int kc = std::min(KC, k - k0);
      const bool add_c = accumulate || k0 > 0;
      pack_b(b + k0 * brs + j0 * bcs, brs, bcs, kc, nc, ws.b.data());
      for (int i0 = 0; i0 < m; i0 += MC) {
        const int mc = std::min(MC, m - i0);
        pack_a(a + i0 * ars + k0 * acs, ars, acs, mc, kc, ws.a.data());
        for (int jr = 0; jr < nc; jr += NR) {
          const int nr = std::min(NR, nc - jr);
          for (int ir = 0; ir < mc; ir += MR) {
            const int mr = std::min(MR, mc - ir);
            micro_kernel(ws.a.data() + static_cast<size_t>(ir) * kc, ws.b.data() + static_cast<size_t>(jr) * kc, kc,
                         c + static_cast<size_t>(i0 + ir) * n + j0 + jr, n, mr, nr, add_c);
          }
        }
      }
    }
  }
}

}  // namespace

void gemm_nn(const double* a, const double* b, double* c, int m, int k, int n, bool accumulate) {
  gemm_strided(a, k, 1, b, n, 1, c, m, k, n, accumulate);
}

void gemm_nt(const double* a, const double* b, double* c, int m, int k, int n, bool accumulate) {
  gemm_strided(a, k, 1, b, 1, k, c, m, k, n, accumulate);
}

void gemm_tn(const double* a, const double* b, double* c, int m, int k, int n, bool accumulate) {
  gemm_strided(a, 1, m, b, n, 1, c, m, k, n, accumulate);
}

void matvec(const double* w, const double* x, double* y, int m, int k) {
  // lane-split accumulation keeps a fixed summation order and vectorizes
  for (int i = 0; i < m; ++i) {
    const double* row = w + static_cast<size_t>(i) * k;
    double lanes[8] = {};
    int j = 0;
    for (; j + 8 <= k; j += 8)
      for (int l = 0; l < 8; ++l) lanes[l] += row[j + l] * x[j + l];
    double s = ((lanes[0] + lanes[1]) + (lanes[2] + lanes[3])) + ((lanes[4] + lanes[5]) + (lanes[6] + lanes[7]));
    for (; j < k; ++j) s += row[j] * x[j];
    y[i] += s;
  }
}

void matvec_t(const double* w, const double* x, double* y, int m, int k) {
  for (int i = 0; i < m; ++i) {
    const double xi = x[i];
    const double* row = w + static_cast<size_t>(i) * k;
    for (int j = 0; j < k; ++j) y[j] += xi * row[j];
  }
}

}  // namespace pvnet
