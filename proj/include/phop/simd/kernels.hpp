#pragma once

#include <cstddef>
#include <vector>

namespace phop::simd {

/// Table of the data-parallel inner loops the library is built on.
/// `scalar_kernels()` is the reference implementation; vector backends must
/// match it within floating-point reassociation error (see tests/test_kernels).
struct Kernels {
  const char* name;

  double (*dot)(const double* a, const double* b, std::size_t n);
  double (*sum)(const double* x, std::size_t n);
  double (*sum_sq)(const double* x, std::size_t n);

  /// y += a * x
  void (*axpy)(double a, const double* x, double* y, std::size_t n);
  /// x *= a
  void (*scale)(double a, double* x, std::size_t n);
  /// x += a
  void (*add_scalar)(double a, double* x, std::size_t n);

  /// c[m x n] = init + a[m x k] * b[n x k]^T   (all row-major)
  void (*mat_mul_abt)(const double* a, const double* b, double* c,
                      std::size_t m, std::size_t n, std::size_t k, double init);

  /// s[n x n] += sum over rows r of x: x_r * x_r^T  (full matrix update)
  void (*sym_rank_update)(const double* x, std::size_t rows, std::size_t n,
                          double* s);

  /// (x, y) <- (c*x - s*y, s*x + c*y), a Jacobi plane rotation on row pairs
  void (*plane_rot)(double* x, double* y, double c, double s, std::size_t n);

  /// Non-overlapping p x p max pooling with floor semantics.
  /// out must hold (h/p)*(w/p) values.
  void (*max_pool)(const double* in, std::size_t h, std::size_t w,
                   std::size_t p, double* out);
};

const Kernels& scalar_kernels();

/// AVX2+FMA backend, or nullptr when the build or the host lacks it.
const Kernels* avx2_kernels();

/// Backend selected at startup: best available, overridable with
/// PHOP_SIMD=scalar|avx2|auto.
const Kernels& active();

/// Every backend usable on this host (scalar first). For equivalence tests.
std::vector<const Kernels*> available_kernels();

}  // namespace phop::simd
