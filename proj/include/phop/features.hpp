#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "phop/types.hpp"

namespace phop {

/// Output of infer_tree: (channel id, response map) in canonical order.
using ChannelMaps = std::vector<std::pair<std::string, Matrix>>;

/// Per-channel PCA reducer plus the concatenate-and-chunk rule that turns a
/// set of channel maps into Q fixed-width feature vectors.
struct FeatureBlock {
  std::vector<std::string> channels;   // fitted channel order
  std::size_t map_h = 0, map_w = 0;    // common map shape
  std::size_t components = 0;          // PCA components per channel
  std::size_t width = 0;               // D
  std::size_t vector_count = 0;        // Q = ceil(channels*components / D)
  std::vector<std::vector<double>> means;  // per channel, flattened-map dim
  std::vector<Matrix> bases;               // per channel, components x dim

  std::size_t flat_dim() const { return map_h * map_w; }
  /// True feature length before zero padding.
  std::size_t feature_len() const { return channels.size() * components; }
};

struct VisualFeatures {
  Matrix vectors;  // Q x D
};

FeatureBlock fit_reducer(const std::vector<ChannelMaps>& training,
                         std::size_t components_per_channel, std::size_t width);

/// Per-channel projection coefficients concatenated in fitted channel order.
std::vector<double> reduce_flat(const FeatureBlock& block,
                                const ChannelMaps& maps);

/// reduce_flat, zero-padded to Q*D and reshaped to Q rows.
VisualFeatures reduce_concat(const FeatureBlock& block, const ChannelMaps& maps);

/// Min-max normalize a response map to [0,255] (constant maps render 128)
/// and nearest-neighbor scale it to out_h x out_w.
std::vector<std::uint8_t> render_heatmap(const Matrix& map, std::size_t out_h,
                                         std::size_t out_w);

}  // namespace phop
