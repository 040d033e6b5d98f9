#pragma once

#include <cstddef>
#include <limits>
#include <vector>

#include "phop/types.hpp"

namespace phop {

/// Flattened sliding-window patches of one image, row-major scan order.
/// Each row is one patch, flattened channel-last (dy, dx, channel).
struct PatchMatrix {
  Matrix data;            // M x n, n = window*window*channels
  std::size_t grid_h = 0; // patches per column of the scan
  std::size_t grid_w = 0; // patches per row of the scan
};

PatchMatrix extract_patches(const ImageTensor& image, std::size_t window,
                            std::size_t stride);

/// One trained Saab unit: the constant mean (DC) kernel, the PCA residual
/// (AC) kernels in decreasing-eigenvalue order, the energy fraction each
/// kernel explains, and the shared non-negativity bias.
struct SaabKernels {
  std::size_t input_dim = 0;      // n
  std::vector<double> dc;         // n entries, all 1/sqrt(n)
  Matrix ac;                      // k x n, orthonormal rows
  std::vector<double> explained;  // k+1 fractions, DC first
  double bias = 0.0;

  std::size_t ac_count() const { return ac.rows(); }
  /// DC kernel stacked on top of the AC kernels: (k+1) x n.
  Matrix stacked() const;
};

/// Streaming second-moment statistics for fitting a Saab unit without
/// holding every patch in memory. Feed row blocks, then finalize.
class SaabAccumulator {
 public:
  static constexpr std::size_t kAllKernels = std::numeric_limits<std::size_t>::max();

  explicit SaabAccumulator(std::size_t input_dim);

  void add(const Matrix& patches);
  std::size_t count() const { return count_; }

  /// max_kernels caps the AC kernel count; it is clamped to n-1.
  SaabKernels finalize(std::size_t max_kernels = kAllKernels) const;

 private:
  std::size_t dim_;
  std::size_t count_ = 0;
  Matrix scatter_;          // residual second-moment matrix, n x n
  double total_sq_ = 0.0;   // sum of squared patch norms
  double dc_sq_ = 0.0;      // energy captured by the DC projection
  double max_norm_sq_ = 0.0;
};

/// Closed-form Saab training on an in-memory patch set.
SaabKernels fit_saab(const PatchMatrix& patches,
                     std::size_t max_kernels = SaabAccumulator::kAllKernels);
SaabKernels fit_saab(const Matrix& patches,
                     std::size_t max_kernels = SaabAccumulator::kAllKernels);

/// Affine transform of every patch: column 0 holds DC responses, columns
/// 1..k the AC responses; response = dot(kernel, patch) + bias.
Matrix apply_saab(const SaabKernels& kernels, const Matrix& patches);

}  // namespace phop
