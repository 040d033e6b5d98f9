#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "phop/features.hpp"
#include "phop/hop.hpp"
#include "phop/probe.hpp"

namespace phop {

/// A trained model on disk: model.json (config, shapes, channel tree, class
/// names, array manifest) plus model.bin, one blob of every kernel, PCA and
/// probe parameter as little-endian float64 in manifest order.
struct ModelBundle {
  HopModel model;
  std::optional<FeatureBlock> features;
  std::optional<ProbeModel> probe;
};

void save_bundle(const std::filesystem::path& dir, const ModelBundle& bundle);
ModelBundle load_bundle(const std::filesystem::path& dir);

/// Extracted per-example feature rows (visual block first, then hashed text).
struct FeatureFile {
  Matrix features;
  std::size_t visual_dim = 0;
  std::size_t text_dim = 0;
  std::vector<std::string> stems;
};

/// Writes <prefix>.json and <prefix>.bin.
void save_features(const std::filesystem::path& prefix, const FeatureFile& f);
FeatureFile load_features(const std::filesystem::path& prefix);

}  // namespace phop
