#include "phop/saab.hpp"

#include <cmath>
#include <string>

#include "phop/eigensym.hpp"
#include "phop/errors.hpp"
#include "phop/simd/kernels.hpp"

namespace phop {

namespace {
// Eigenvalues below this fraction of the largest are numerical noise and the
// matching kernels are dropped.
constexpr double kDegenerateRatio = 1e-12;
}  // namespace

PatchMatrix extract_patches(const ImageTensor& image, std::size_t window,
                            std::size_t stride) {
  if (window < 1 || stride < 1)
    throw DimensionError("extract_patches: window and stride must be >= 1");
  if (image.height < window || image.width < window)
    throw DimensionError("extract_patches: window " + std::to_string(window) +
                         "x" + std::to_string(window) + " exceeds image " +
                         std::to_string(image.height) + "x" +
                         std::to_string(image.width));

  const std::size_t out_h = (image.height - window) / stride + 1;
  const std::size_t out_w = (image.width - window) / stride + 1;
  const std::size_t n = window * window * image.channels;

  PatchMatrix out;
  out.grid_h = out_h;
  out.grid_w = out_w;
  out.data = Matrix(out_h * out_w, n);
  for (std::size_t oy = 0; oy < out_h; ++oy) {
    for (std::size_t ox = 0; ox < out_w; ++ox) {
      double* row = out.data.row(oy * out_w + ox);
      std::size_t idx = 0;
      for (std::size_t dy = 0; dy < window; ++dy) {
        const double* src =
            &image.data[((oy * stride + dy) * image.width + ox * stride) *
                        image.channels];
        for (std::size_t i = 0; i < window * image.channels; ++i)
          row[idx++] = src[i];
      }
    }
  }
  return out;
}

Matrix SaabKernels::stacked() const {
  Matrix g(ac.rows() + 1, input_dim);
  std::copy(dc.begin(), dc.end(), g.row(0));
  std::copy(ac.data(), ac.data() + ac.size(), g.row(1));
  return g;
}

SaabAccumulator::SaabAccumulator(std::size_t input_dim)
    : dim_(input_dim), scatter_(input_dim, input_dim) {
  if (input_dim == 0) throw DimensionError("SaabAccumulator: empty patches");
}

void SaabAccumulator::add(const Matrix& patches) {
  if (patches.cols() != dim_)
    throw DimensionError("SaabAccumulator: patch dim " +
                         std::to_string(patches.cols()) + " != " +
                         std::to_string(dim_));
  const auto& k = simd::active();
  const std::size_t m = patches.rows();
  // Residual of a patch against the DC kernel is the patch minus its mean.
  Matrix residuals(m, dim_);
  for (std::size_t r = 0; r < m; ++r) {
    const double* x = patches.row(r);
    const double s = k.sum(x, dim_);
    const double q = k.sum_sq(x, dim_);
    total_sq_ += q;
    dc_sq_ += s * s / double(dim_);  // (dc . x)^2 with dc = 1/sqrt(n)
    max_norm_sq_ = std::max(max_norm_sq_, q);
    double* res = residuals.row(r);
    const double mean = s / double(dim_);
    for (std::size_t j = 0; j < dim_; ++j) res[j] = x[j] - mean;
  }
  k.sym_rank_update(residuals.data(), m, dim_, scatter_.data());
  count_ += m;
}

SaabKernels SaabAccumulator::finalize(std::size_t max_kernels) const {
  if (count_ < 2)
    throw DataError("fit_saab: needs at least 2 patches, got " +
                    std::to_string(count_));

  SaabKernels out;
  out.input_dim = dim_;
  out.dc.assign(dim_, 1.0 / std::sqrt(double(dim_)));
  out.bias = std::sqrt(max_norm_sq_);

  if (total_sq_ <= 0.0) {
    // All-zero patch set: the DC channel carries everything by convention.
    out.ac = Matrix(0, dim_);
    out.explained = {1.0};
    return out;
  }

  EigenSym eig = eigen_sym(scatter_);

  // The residual space is orthogonal to DC, so at most n-1 directions exist.
  std::size_t limit = std::min(max_kernels, dim_ - 1);
  const double floor_value =
      eig.values.empty() ? 0.0 : kDegenerateRatio * std::max(eig.values[0], 0.0);
  std::size_t kept = 0;
  while (kept < limit && eig.values[kept] > floor_value && eig.values[kept] > 0.0)
    ++kept;

  out.ac = Matrix(kept, dim_);
  out.explained.resize(kept + 1);
  out.explained[0] = dc_sq_ / total_sq_;
  for (std::size_t j = 0; j < kept; ++j) {
    const double* v = eig.vectors.row(j);
    // Sign convention: largest-magnitude component positive.
    std::size_t arg = 0;
    for (std::size_t i = 1; i < dim_; ++i)
      if (std::abs(v[i]) > std::abs(v[arg])) arg = i;
    const double flip = v[arg] < 0.0 ? -1.0 : 1.0;
    double* dst = out.ac.row(j);
    for (std::size_t i = 0; i < dim_; ++i) dst[i] = flip * v[i];
    out.explained[j + 1] = eig.values[j] / total_sq_;
  }
  return out;
}

SaabKernels fit_saab(const Matrix& patches, std::size_t max_kernels) {
  SaabAccumulator acc(patches.cols());
  acc.add(patches);
  return acc.finalize(max_kernels);
}

SaabKernels fit_saab(const PatchMatrix& patches, std::size_t max_kernels) {
  return fit_saab(patches.data, max_kernels);
}

Matrix apply_saab(const SaabKernels& kernels, const Matrix& patches) {
  if (patches.cols() != kernels.input_dim)
    throw DimensionError("apply_saab: patch dim " +
                         std::to_string(patches.cols()) + " != kernel dim " +
                         std::to_string(kernels.input_dim));
  const Matrix g = kernels.stacked();
  Matrix responses(patches.rows(), g.rows());
  simd::active().mat_mul_abt(patches.data(), g.data(), responses.data(),
                             patches.rows(), g.rows(), kernels.input_dim,
                             kernels.bias);
  return responses;
}

}  // namespace phop
