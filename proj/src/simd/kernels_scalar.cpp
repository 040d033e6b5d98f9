#include <algorithm>
#include <cstddef>

#include "phop/simd/kernels.hpp"

// Reference kernels. Plain loops, no tricks: every other backend is tested
// against these.

namespace phop::simd {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

double sum_scalar(const double* x, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i];
  return acc;
}

double sum_sq_scalar(const double* x, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * x[i];
  return acc;
}

void axpy_scalar(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void scale_scalar(double a, double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] *= a;
}

void add_scalar_scalar(double a, double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] += a;
}

void mat_mul_abt_scalar(const double* a, const double* b, double* c,
                        std::size_t m, std::size_t n, std::size_t k,
                        double init) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = a + i * k;
    double* ci = c + i * n;
    for (std::size_t j = 0; j < n; ++j) {
      ci[j] = init + dot_scalar(ai, b + j * k, k);
    }
  }
}

void sym_rank_update_scalar(const double* x, std::size_t rows, std::size_t n,
                            double* s) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = x + r * n;
    for (std::size_t i = 0; i < n; ++i) {
      const double xi = xr[i];
      double* si = s + i * n;
      for (std::size_t j = 0; j < n; ++j) si[j] += xi * xr[j];
    }
  }
}

void plane_rot_scalar(double* x, double* y, double c, double s,
                      std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const double xi = x[i];
    const double yi = y[i];
    x[i] = c * xi - s * yi;
    y[i] = s * xi + c * yi;
  }
}

void max_pool_scalar(const double* in, std::size_t h, std::size_t w,
                     std::size_t p, double* out) {
  const std::size_t oh = h / p;
  const std::size_t ow = w / p;
  for (std::size_t r = 0; r < oh; ++r) {
    for (std::size_t c = 0; c < ow; ++c) {
      double m = in[(r * p) * w + c * p];
      for (std::size_t dy = 0; dy < p; ++dy) {
        const double* row = in + (r * p + dy) * w + c * p;
        for (std::size_t dx = 0; dx < p; ++dx) m = std::max(m, row[dx]);
      }
      out[r * ow + c] = m;
    }
  }
}

}  // namespace

const Kernels& scalar_kernels() {
  static const Kernels k = {
      "scalar",          dot_scalar,          sum_scalar,
      sum_sq_scalar,     axpy_scalar,         scale_scalar,
      add_scalar_scalar, mat_mul_abt_scalar,  sym_rank_update_scalar,
      plane_rot_scalar,  max_pool_scalar,
  };
  return k;
}

}  // namespace phop::simd
