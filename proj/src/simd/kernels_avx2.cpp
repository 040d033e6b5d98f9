// AVX2 + FMA variants of the inner loops. This translation unit is compiled
// with -mavx2 -mfma and only ever executed after a runtime cpuid check.

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include <algorithm>
#include <cstddef>

#include "phop/simd/kernels.hpp"

namespace phop::simd {
namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(lo, _mm_unpackhi_pd(lo, lo)));
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  if (i + 4 <= n) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    i += 4;
  }
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

double sum_avx2(const double* x, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
  double s = hsum(acc);
  for (; i < n; ++i) s += x[i];
  return s;
}

double sum_sq_avx2(const double* x, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d v = _mm256_loadu_pd(x + i);
    acc = _mm256_fmadd_pd(v, v, acc);
  }
  double s = hsum(acc);
  for (; i < n; ++i) s += x[i] * x[i];
  return s;
}

void axpy_avx2(double a, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d vy = _mm256_loadu_pd(y + i);
    vy = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), vy);
    _mm256_storeu_pd(y + i, vy);
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

void scale_avx2(double a, double* x, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(x + i, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
  for (; i < n; ++i) x[i] *= a;
}

void add_scalar_avx2(double a, double* x, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(x + i, _mm256_add_pd(va, _mm256_loadu_pd(x + i)));
  for (; i < n; ++i) x[i] += a;
}

void mat_mul_abt_avx2(const double* a, const double* b, double* c,
                      std::size_t m, std::size_t n, std::size_t k,
                      double init) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = a + i * k;
    double* ci = c + i * n;
    for (std::size_t j = 0; j < n; ++j) ci[j] = init + dot_avx2(ai, b + j * k, k);
  }
}

void sym_rank_update_avx2(const double* x, std::size_t rows, std::size_t n,
                          double* s) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = x + r * n;
    for (std::size_t i = 0; i < n; ++i) {
      const __m256d xi = _mm256_set1_pd(xr[i]);
      double* si = s + i * n;
      std::size_t j = 0;
      for (; j + 4 <= n; j += 4) {
        __m256d v = _mm256_loadu_pd(si + j);
        v = _mm256_fmadd_pd(xi, _mm256_loadu_pd(xr + j), v);
        _mm256_storeu_pd(si + j, v);
      }
      for (; j < n; ++j) si[j] += xr[i] * xr[j];
    }
  }
}

void plane_rot_avx2(double* x, double* y, double c, double s, std::size_t n) {
  const __m256d vc = _mm256_set1_pd(c);
  const __m256d vs = _mm256_set1_pd(s);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d vx = _mm256_loadu_pd(x + i);
    const __m256d vy = _mm256_loadu_pd(y + i);
    _mm256_storeu_pd(x + i, _mm256_fmsub_pd(vc, vx, _mm256_mul_pd(vs, vy)));
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(vs, vx, _mm256_mul_pd(vc, vy)));
  }
  for (; i < n; ++i) {
    const double xi = x[i];
    const double yi = y[i];
    x[i] = c * xi - s * yi;
    y[i] = s * xi + c * yi;
  }
}

// 2x2 pooling is the hot case; anything else falls through to scalar.
void max_pool_avx2(const double* in, std::size_t h, std::size_t w,
                   std::size_t p, double* out) {
  if (p != 2) {
    scalar_kernels().max_pool(in, h, w, p, out);
    return;
  }
  const std::size_t oh = h / 2;
  const std::size_t ow = w / 2;
  for (std::size_t r = 0; r < oh; ++r) {
    const double* r0 = in + (2 * r) * w;
    const double* r1 = r0 + w;
    double* orow = out + r * ow;
    std::size_t c = 0;
    for (; c + 2 <= ow; c += 2) {
      __m256d m = _mm256_max_pd(_mm256_loadu_pd(r0 + 2 * c),
                                _mm256_loadu_pd(r1 + 2 * c));
      m = _mm256_max_pd(m, _mm256_permute_pd(m, 0x5));  // pairwise horizontal
      __m256d packed = _mm256_permute4x64_pd(m, _MM_SHUFFLE(3, 1, 2, 0));
      _mm_storeu_pd(orow + c, _mm256_castpd256_pd128(packed));
    }
    for (; c < ow; ++c) {
      orow[c] = std::max(std::max(r0[2 * c], r0[2 * c + 1]),
                         std::max(r1[2 * c], r1[2 * c + 1]));
    }
  }
}

}  // namespace

namespace detail {

const Kernels& avx2_table() {
  static const Kernels k = {
      "avx2",          dot_avx2,          sum_avx2,
      sum_sq_avx2,     axpy_avx2,         scale_avx2,
      add_scalar_avx2, mat_mul_abt_avx2,  sym_rank_update_avx2,
      plane_rot_avx2,  max_pool_avx2,
  };
  return k;
}

}  // namespace detail
}  // namespace phop::simd

#endif  // x86_64
