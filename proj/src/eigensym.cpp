#include "phop/eigensym.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "phop/errors.hpp"
#include "phop/simd/kernels.hpp"

namespace phop {
namespace {

double off_diagonal_norm(const Matrix& a) {
  const std::size_t n = a.rows();
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) acc += a.at(i, j) * a.at(i, j);
  return std::sqrt(2.0 * acc);
}

double frobenius(const Matrix& a) {
  return std::sqrt(simd::active().sum_sq(a.data(), a.size()));
}

}  // namespace

// Cyclic Jacobi. Quadratic convergence once the off-diagonal mass is small;
// matrices here are covariance-sized (n <= a few hundred), so sweeps are cheap
// and the rotations run through the plane_rot kernel.
EigenSym eigen_sym(Matrix a) {
  const std::size_t n = a.rows();
  if (a.cols() != n)
    throw DimensionError("eigen_sym: matrix is " + std::to_string(a.rows()) +
                         "x" + std::to_string(a.cols()) + ", expected square");

  Matrix w = Matrix::identity(n);
  if (n > 1) {
    const auto& k = simd::active();
    const double scale = frobenius(a);
    const double tol = 1e-14 * (scale > 0.0 ? scale : 1.0);
    const int max_sweeps = 64;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
      if (off_diagonal_norm(a) <= tol) break;
      for (std::size_t p = 0; p + 1 < n; ++p) {
        for (std::size_t q = p + 1; q < n; ++q) {
          const double apq = a.at(p, q);
          if (std::abs(apq) <= 1e-3 * tol / double(n)) continue;
          const double app = a.at(p, p);
          const double aqq = a.at(q, q);
          const double beta = (aqq - app) / (2.0 * apq);
          const double t =
              (beta >= 0.0 ? 1.0 : -1.0) /
              (std::abs(beta) + std::sqrt(beta * beta + 1.0));
          const double c = 1.0 / std::sqrt(t * t + 1.0);
          const double s = t * c;

          // columns p and q of every row
          for (std::size_t i = 0; i < n; ++i) {
            const double aip = a.at(i, p);
            const double aiq = a.at(i, q);
            a.at(i, p) = c * aip - s * aiq;
            a.at(i, q) = s * aip + c * aiq;
          }
          // rows p and q
          k.plane_rot(a.row(p), a.row(q), c, s, n);

          a.at(p, p) = app - t * apq;
          a.at(q, q) = aqq + t * apq;
          a.at(p, q) = 0.0;
          a.at(q, p) = 0.0;

          k.plane_rot(w.row(p), w.row(q), c, s, n);
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    return a.at(i, i) > a.at(j, j);
  });

  EigenSym out;
  out.values.resize(n);
  out.vectors = Matrix(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    out.values[i] = a.at(order[i], order[i]);
    std::copy(w.row(order[i]), w.row(order[i]) + n, out.vectors.row(i));
  }
  return out;
}

}  // namespace phop
