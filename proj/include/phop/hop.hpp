#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "phop/saab.hpp"
#include "phop/types.hpp"

namespace phop {

struct HopConfig {
  std::size_t levels = 3;
  std::size_t window = 3;
  std::size_t stride = 1;
  std::size_t pool = 2;
  double energy_threshold = 0.00005;
  std::size_t max_kernels = 0;  // per-unit AC cap; 0 = keep all
  std::size_t patch_cap = 0;    // per-unit training-patch cap; 0 = use all
};

enum class ChannelStatus { kDiscarded, kForwarded, kOutput };

const char* to_string(ChannelStatus s);
ChannelStatus channel_status_from_string(const std::string& s);

/// One channel in the tree. The id is the dotted kernel-index path from
/// level 1 (e.g. "2.0.1"), which is stable across energy thresholds.
struct ChannelNode {
  std::string id;
  std::size_t level = 0;   // 1-based
  std::string parent;      // empty at level 1
  std::size_t kernel_index = 0;
  double energy = 0.0;     // cumulative fraction of the root energy
  ChannelStatus status = ChannelStatus::kDiscarded;
};

/// One Saab unit in the tree, keyed by the channel it consumes
/// ("" for the single level-1 unit that consumes the input image).
struct HopUnit {
  std::string parent;
  std::size_t level = 0;
  SaabKernels kernels;
};

struct HopModel {
  HopConfig config;
  std::size_t input_h = 0, input_w = 0, input_c = 0;
  std::vector<HopUnit> units;    // level-major creation order
  std::vector<ChannelNode> nodes;
  std::vector<std::string> output_channels;
  std::vector<std::pair<std::size_t, std::size_t>> output_shapes;  // per output channel
};

/// Non-overlapping max pooling, window = stride = pool, floor semantics.
Matrix max_pool(const Matrix& map, std::size_t pool);

/// Spatial dims per level for an h x w input: after the unit (conv_*) and
/// after pooling (out_*). Throws GeometryError naming the level that fails.
struct LevelGeometry {
  std::size_t conv_h, conv_w;
  std::size_t out_h, out_w;
};
std::vector<LevelGeometry> plan_geometry(std::size_t h, std::size_t w,
                                         const HopConfig& config);

HopModel train_tree(const std::vector<ImageTensor>& images,
                    const HopConfig& config);

/// Feature maps of every output channel, in output_channels order.
std::vector<std::pair<std::string, Matrix>> infer_tree(const HopModel& model,
                                                       const ImageTensor& image);

}  // namespace phop
