#include "phop/hop.hpp"

#include <algorithm>
#include <unordered_map>

#include "phop/errors.hpp"
#include "phop/simd/kernels.hpp"

namespace phop {

const char* to_string(ChannelStatus s) {
  switch (s) {
    case ChannelStatus::kDiscarded: return "discarded";
    case ChannelStatus::kForwarded: return "forwarded";
    case ChannelStatus::kOutput: return "output";
  }
  return "?";
}

ChannelStatus channel_status_from_string(const std::string& s) {
  if (s == "discarded") return ChannelStatus::kDiscarded;
  if (s == "forwarded") return ChannelStatus::kForwarded;
  if (s == "output") return ChannelStatus::kOutput;
  throw SchemaError("unknown channel status '" + s + "'");
}

Matrix max_pool(const Matrix& map, std::size_t pool) {
  if (pool < 1) throw DimensionError("max_pool: pool size must be >= 1");
  if (map.rows() < pool || map.cols() < pool)
    throw DimensionError("max_pool: map " + std::to_string(map.rows()) + "x" +
                         std::to_string(map.cols()) +
                         " is smaller than pool window " +
                         std::to_string(pool));
  Matrix out(map.rows() / pool, map.cols() / pool);
  simd::active().max_pool(map.data(), map.rows(), map.cols(), pool, out.data());
  return out;
}

std::vector<LevelGeometry> plan_geometry(std::size_t h, std::size_t w,
                                         const HopConfig& cfg) {
  if (cfg.levels < 1) throw GeometryError("hop config: levels must be >= 1");
  if (cfg.window < 1 || cfg.stride < 1 || cfg.pool < 1)
    throw GeometryError("hop config: window, stride and pool must be >= 1");
  if (cfg.energy_threshold < 0.0)
    throw GeometryError("hop config: energy threshold must be >= 0");
  std::vector<LevelGeometry> plan;
  for (std::size_t level = 1; level <= cfg.levels; ++level) {
    if (h < cfg.window || w < cfg.window)
      throw GeometryError("level " + std::to_string(level) + ": input " +
                          std::to_string(h) + "x" + std::to_string(w) +
                          " is smaller than the " + std::to_string(cfg.window) +
                          "x" + std::to_string(cfg.window) + " window");
    LevelGeometry g;
    g.conv_h = (h - cfg.window) / cfg.stride + 1;
    g.conv_w = (w - cfg.window) / cfg.stride + 1;
    if (g.conv_h < cfg.pool || g.conv_w < cfg.pool)
      throw GeometryError("level " + std::to_string(level) + ": response map " +
                          std::to_string(g.conv_h) + "x" +
                          std::to_string(g.conv_w) +
                          " is smaller than the pool window " +
                          std::to_string(cfg.pool));
    g.out_h = g.conv_h / cfg.pool;
    g.out_w = g.conv_w / cfg.pool;
    h = g.out_h;
    w = g.out_w;
    plan.push_back(g);
  }
  return plan;
}

namespace {

std::string child_id(const std::string& parent, std::size_t kernel) {
  return parent.empty() ? std::to_string(kernel)
                        : parent + "." + std::to_string(kernel);
}

std::size_t effective_kernel_cap(const HopConfig& cfg) {
  return cfg.max_kernels == 0 ? SaabAccumulator::kAllKernels : cfg.max_kernels;
}

// Deterministic row subsampling honoring the per-unit patch cap.
void accumulate_patches(SaabAccumulator& acc, const Matrix& patches,
                        std::size_t step, std::size_t& cursor) {
  if (step <= 1) {
    acc.add(patches);
    cursor += patches.rows();
    return;
  }
  std::size_t picked = 0;
  for (std::size_t r = 0; r < patches.rows(); ++r)
    if ((cursor + r) % step == 0) ++picked;
  Matrix sub(picked, patches.cols());
  std::size_t w = 0;
  for (std::size_t r = 0; r < patches.rows(); ++r) {
    if ((cursor + r) % step == 0) {
      std::copy(patches.row(r), patches.row(r) + patches.cols(), sub.row(w++));
    }
  }
  cursor += patches.rows();
  if (picked > 0) acc.add(sub);
}

Matrix column_to_map(const Matrix& responses, std::size_t col, std::size_t h,
                     std::size_t w) {
  Matrix map(h, w);
  for (std::size_t i = 0; i < h * w; ++i) map.data()[i] = responses.at(i, col);
  return map;
}

}  // namespace

HopModel train_tree(const std::vector<ImageTensor>& images,
                    const HopConfig& config) {
  if (images.size() < 2)
    throw DataError("train_tree: needs at least 2 images, got " +
                    std::to_string(images.size()));
  const std::size_t h = images[0].height, w = images[0].width,
                    c = images[0].channels;
  for (std::size_t i = 1; i < images.size(); ++i) {
    if (images[i].height != h || images[i].width != w ||
        images[i].channels != c)
      throw DimensionError("train_tree: image " + std::to_string(i) +
                           " has a different shape");
  }
  const auto geometry = plan_geometry(h, w, config);
  const std::size_t cap = effective_kernel_cap(config);

  HopModel model;
  model.config = config;
  model.input_h = h;
  model.input_w = w;
  model.input_c = c;

  // Maps feeding the current level, one entry per forwarded channel.
  struct Feed {
    std::string id;       // "" for the root
    double energy;
    std::vector<Matrix> maps;  // per image; unused at level 1
  };
  std::vector<Feed> feeds{{"", 1.0, {}}};

  for (std::size_t level = 1; level <= config.levels; ++level) {
    const bool final_level = level == config.levels;
    const auto& geo = geometry[level - 1];
    std::vector<Feed> next;

    for (const Feed& feed : feeds) {
      // Fit the unit for this parent channel on every patch of every image.
      const std::size_t depth = level == 1 ? c : 1;
      SaabAccumulator acc(config.window * config.window * depth);
      std::size_t total_patches =
          images.size() * geo.conv_h * geo.conv_w;
      std::size_t step = 1;
      if (config.patch_cap > 0 && total_patches > config.patch_cap)
        step = (total_patches + config.patch_cap - 1) / config.patch_cap;
      std::size_t cursor = 0;
      for (std::size_t i = 0; i < images.size(); ++i) {
        const ImageTensor& input =
            level == 1 ? images[i] : ImageTensor::from_map(feed.maps[i]);
        PatchMatrix patches =
            extract_patches(input, config.window, config.stride);
        accumulate_patches(acc, patches.data, step, cursor);
      }
      SaabKernels kernels = acc.finalize(cap);

      // Child channels: energy is the parent energy times the kernel's
      // explained-variance share; anything under the threshold is discarded
      // and never instantiated downstream.
      std::vector<std::size_t> survivors;
      for (std::size_t j = 0; j < kernels.explained.size(); ++j) {
        ChannelNode node;
        node.id = child_id(feed.id, j);
        node.level = level;
        node.parent = feed.id;
        node.kernel_index = j;
        node.energy = feed.energy * kernels.explained[j];
        if (node.energy < config.energy_threshold) {
          node.status = ChannelStatus::kDiscarded;
        } else {
          node.status =
              final_level ? ChannelStatus::kOutput : ChannelStatus::kForwarded;
          survivors.push_back(j);
        }
        model.nodes.push_back(node);
      }

      model.units.push_back({feed.id, level, std::move(kernels)});
      const SaabKernels& unit = model.units.back().kernels;

      if (final_level) {
        for (std::size_t j : survivors) {
          model.output_channels.push_back(child_id(feed.id, j));
          model.output_shapes.emplace_back(geo.out_h, geo.out_w);
        }
        continue;
      }
      if (survivors.empty()) continue;

      // Propagate pooled maps of surviving channels to the next level.
      std::vector<Feed> children(survivors.size());
      for (std::size_t si = 0; si < survivors.size(); ++si) {
        children[si].id = child_id(feed.id, survivors[si]);
        children[si].energy =
            feed.energy * unit.explained[survivors[si]];
        children[si].maps.resize(images.size());
      }
      for (std::size_t i = 0; i < images.size(); ++i) {
        const ImageTensor& input =
            level == 1 ? images[i] : ImageTensor::from_map(feed.maps[i]);
        PatchMatrix patches =
            extract_patches(input, config.window, config.stride);
        Matrix responses = apply_saab(unit, patches.data);
        for (std::size_t si = 0; si < survivors.size(); ++si) {
          Matrix map = column_to_map(responses, survivors[si], geo.conv_h,
                                     geo.conv_w);
          children[si].maps[i] = max_pool(map, config.pool);
        }
      }
      for (auto& child : children) next.push_back(std::move(child));
    }
    feeds = std::move(next);
  }
  return model;
}

std::vector<std::pair<std::string, Matrix>> infer_tree(
    const HopModel& model, const ImageTensor& image) {
  if (image.height != model.input_h || image.width != model.input_w ||
      image.channels != model.input_c)
    throw DimensionError(
        "infer_tree: image " + std::to_string(image.height) + "x" +
        std::to_string(image.width) + "x" + std::to_string(image.channels) +
        " does not match the training shape " + std::to_string(model.input_h) +
        "x" + std::to_string(model.input_w) + "x" +
        std::to_string(model.input_c));

  std::unordered_map<std::string, const ChannelNode*> node_by_id;
  for (const ChannelNode& n : model.nodes) node_by_id[n.id] = &n;

  std::unordered_map<std::string, Matrix> maps;
  std::unordered_map<std::string, Matrix> outputs;

  for (const HopUnit& unit : model.units) {
    const ImageTensor input = unit.level == 1
                                  ? image
                                  : ImageTensor::from_map(maps.at(unit.parent));
    PatchMatrix patches =
        extract_patches(input, model.config.window, model.config.stride);
    Matrix responses = apply_saab(unit.kernels, patches.data);
    for (std::size_t j = 0; j < unit.kernels.explained.size(); ++j) {
      const std::string id = unit.parent.empty()
                                 ? std::to_string(j)
                                 : unit.parent + "." + std::to_string(j);
      const ChannelNode* node = node_by_id.at(id);
      if (node->status == ChannelStatus::kDiscarded) continue;
      Matrix map(patches.grid_h, patches.grid_w);
      for (std::size_t i = 0; i < map.size(); ++i)
        map.data()[i] = responses.at(i, j);
      Matrix pooled = max_pool(map, model.config.pool);
      if (node->status == ChannelStatus::kForwarded)
        maps.emplace(id, std::move(pooled));
      else
        outputs.emplace(id, std::move(pooled));
    }
  }

  std::vector<std::pair<std::string, Matrix>> result;
  result.reserve(model.output_channels.size());
  for (const std::string& id : model.output_channels)
    result.emplace_back(id, std::move(outputs.at(id)));
  return result;
}

}  // namespace phop
