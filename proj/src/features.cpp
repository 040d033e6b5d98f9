#include "phop/features.hpp"

#include <cmath>
#include <cstring>

#include "phop/eigensym.hpp"
#include "phop/errors.hpp"
#include "phop/simd/kernels.hpp"

namespace phop {

namespace {

void check_same_schema(const ChannelMaps& ref, const ChannelMaps& maps,
                       std::size_t example_index) {
  if (maps.size() != ref.size())
    throw SchemaError("example " + std::to_string(example_index) + " has " +
                      std::to_string(maps.size()) + " channels, expected " +
                      std::to_string(ref.size()));
  for (std::size_t i = 0; i < ref.size(); ++i) {
    if (maps[i].first != ref[i].first)
      throw SchemaError("example " + std::to_string(example_index) +
                        ": channel '" + maps[i].first + "' where '" +
                        ref[i].first + "' was expected");
    if (maps[i].second.rows() != ref[i].second.rows() ||
        maps[i].second.cols() != ref[i].second.cols())
      throw SchemaError("example " + std::to_string(example_index) +
                        ": channel '" + maps[i].first + "' map shape differs");
  }
}

}  // namespace

FeatureBlock fit_reducer(const std::vector<ChannelMaps>& training,
                         std::size_t components_per_channel,
                         std::size_t width) {
  if (training.empty()) throw DataError("fit_reducer: no training examples");
  const ChannelMaps& ref = training.front();
  if (ref.empty()) throw SchemaError("fit_reducer: no output channels");
  if (width < 1) throw DataError("fit_reducer: feature width must be >= 1");
  for (std::size_t e = 1; e < training.size(); ++e)
    check_same_schema(ref, training[e], e);

  const std::size_t dim = ref[0].second.size();
  const std::size_t n = training.size();
  if (components_per_channel < 1 ||
      components_per_channel > std::min(dim, n))
    throw DataError("fit_reducer: components_per_channel " +
                    std::to_string(components_per_channel) +
                    " not in [1, min(map dim " + std::to_string(dim) +
                    ", examples " + std::to_string(n) + ")]");

  FeatureBlock block;
  block.map_h = ref[0].second.rows();
  block.map_w = ref[0].second.cols();
  block.components = components_per_channel;
  block.width = width;
  const auto& k = simd::active();

  for (std::size_t c = 0; c < ref.size(); ++c) {
    block.channels.push_back(ref[c].first);

    std::vector<double> mean(dim, 0.0);
    for (std::size_t e = 0; e < n; ++e)
      k.axpy(1.0, training[e][c].second.data(), mean.data(), dim);
    k.scale(1.0 / double(n), mean.data(), dim);

    Matrix centered(n, dim);
    for (std::size_t e = 0; e < n; ++e) {
      double* row = centered.row(e);
      const double* src = training[e][c].second.data();
      for (std::size_t i = 0; i < dim; ++i) row[i] = src[i] - mean[i];
    }
    Matrix scatter(dim, dim);
    k.sym_rank_update(centered.data(), n, dim, scatter.data());
    EigenSym eig = eigen_sym(scatter);

    Matrix basis(components_per_channel, dim);
    for (std::size_t j = 0; j < components_per_channel; ++j) {
      const double* v = eig.vectors.row(j);
      std::size_t arg = 0;
      for (std::size_t i = 1; i < dim; ++i)
        if (std::abs(v[i]) > std::abs(v[arg])) arg = i;
      const double flip = v[arg] < 0.0 ? -1.0 : 1.0;
      for (std::size_t i = 0; i < dim; ++i) basis.at(j, i) = flip * v[i];
    }
    block.means.push_back(std::move(mean));
    block.bases.push_back(std::move(basis));
  }

  const std::size_t total = block.feature_len();
  block.vector_count = (total + width - 1) / width;  // ceil
  return block;
}

std::vector<double> reduce_flat(const FeatureBlock& block,
                                const ChannelMaps& maps) {
  const std::size_t dim = block.flat_dim();
  std::vector<double> out;
  out.reserve(block.feature_len());
  std::vector<double> centered(dim);
  const auto& k = simd::active();

  std::size_t cursor = 0;
  for (std::size_t c = 0; c < block.channels.size(); ++c) {
    // Channel sets must match the fitted block; maps arrive in infer order.
    if (cursor >= maps.size() || maps[cursor].first != block.channels[c]) {
      bool found = false;
      for (const auto& m : maps) found |= m.first == block.channels[c];
      throw SchemaError(found ? "channel '" + block.channels[c] +
                                    "' out of order in input maps"
                              : "missing channel '" + block.channels[c] + "'");
    }
    const Matrix& map = maps[cursor].second;
    if (map.size() != dim)
      throw SchemaError("channel '" + block.channels[c] +
                        "' map has wrong shape");
    for (std::size_t i = 0; i < dim; ++i)
      centered[i] = map.data()[i] - block.means[c][i];
    for (std::size_t j = 0; j < block.components; ++j)
      out.push_back(k.dot(block.bases[c].row(j), centered.data(), dim));
    ++cursor;
  }
  return out;
}

VisualFeatures reduce_concat(const FeatureBlock& block,
                             const ChannelMaps& maps) {
  const std::vector<double> flat = reduce_flat(block, maps);
  VisualFeatures vf;
  vf.vectors = Matrix(block.vector_count, block.width);
  std::memcpy(vf.vectors.data(), flat.data(), flat.size() * sizeof(double));
  return vf;
}

std::vector<std::uint8_t> render_heatmap(const Matrix& map, std::size_t out_h,
                                         std::size_t out_w) {
  if (map.empty()) throw DataError("render_heatmap: empty map");
  double lo = map.data()[0], hi = map.data()[0];
  for (std::size_t i = 1; i < map.size(); ++i) {
    lo = std::min(lo, map.data()[i]);
    hi = std::max(hi, map.data()[i]);
  }
  std::vector<std::uint8_t> gray(map.size());
  if (hi == lo) {
    std::fill(gray.begin(), gray.end(), std::uint8_t{128});
  } else {
    const double scale = 255.0 / (hi - lo);
    for (std::size_t i = 0; i < map.size(); ++i)
      gray[i] = std::uint8_t(std::lround((map.data()[i] - lo) * scale));
  }
  std::vector<std::uint8_t> out(out_h * out_w);
  for (std::size_t r = 0; r < out_h; ++r) {
    const std::size_t sr = r * map.rows() / out_h;
    for (std::size_t c = 0; c < out_w; ++c)
      out[r * out_w + c] = gray[sr * map.cols() + c * map.cols() / out_w];
  }
  return out;
}

}  // namespace phop
