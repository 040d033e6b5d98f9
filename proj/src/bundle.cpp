#include "phop/bundle.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "phop/errors.hpp"

namespace phop {

namespace {

using nlohmann::json;

void write_doubles_le(std::ostream& out, const double* v, std::size_t count) {
  for (std::size_t i = 0; i < count; ++i) {
    const auto bits = std::bit_cast<std::uint64_t>(v[i]);
    unsigned char bytes[8];
    for (int b = 0; b < 8; ++b) bytes[b] = (bits >> (8 * b)) & 0xff;
    out.write(reinterpret_cast<const char*>(bytes), 8);
  }
}

void read_doubles_le(std::istream& in, double* v, std::size_t count) {
  for (std::size_t i = 0; i < count; ++i) {
    unsigned char bytes[8];
    in.read(reinterpret_cast<char*>(bytes), 8);
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= std::uint64_t(bytes[b]) << (8 * b);
    v[i] = std::bit_cast<double>(bits);
  }
}

std::ofstream create_file(const std::filesystem::path& path) {
  if (std::filesystem::exists(path))
    throw IoError("refusing to overwrite '" + path.string() + "'");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot create '" + path.string() + "'");
  return out;
}

// Collected array sections, written to the blob in declaration order.
struct BlobWriter {
  json manifest = json::array();
  std::string data;

  void add(const std::string& name, std::vector<std::size_t> shape,
           const double* values) {
    std::size_t count = 1;
    for (std::size_t s : shape) count *= s;
    manifest.push_back({{"name", name}, {"shape", shape}});
    const std::size_t at = data.size();
    data.resize(at + count * 8);
    std::uint64_t bits;
    for (std::size_t i = 0; i < count; ++i) {
      bits = std::bit_cast<std::uint64_t>(values[i]);
      for (int b = 0; b < 8; ++b)
        data[at + i * 8 + b] = char((bits >> (8 * b)) & 0xff);
    }
  }
};

struct BlobReader {
  const json& manifest;
  std::string data;
  std::size_t cursor = 0;  // manifest index
  std::size_t offset = 0;  // byte offset

  std::vector<double> next(const std::string& name,
                           const std::vector<std::size_t>& expected_shape) {
    if (cursor >= manifest.size())
      throw SchemaError("bundle blob: missing array '" + name + "'");
    const json& entry = manifest[cursor++];
    if (entry.at("name").get<std::string>() != name)
      throw SchemaError("bundle blob: expected array '" + name + "', found '" +
                        entry.at("name").get<std::string>() + "'");
    std::size_t count = 1;
    std::vector<std::size_t> shape;
    for (const auto& s : entry.at("shape")) {
      shape.push_back(s.get<std::size_t>());
      count *= shape.back();
    }
    if (shape != expected_shape)
      throw SchemaError("bundle blob: array '" + name +
                        "' shape disagrees with the declared sizes");
    if (offset + count * 8 > data.size())
      throw SchemaError("bundle blob: array '" + name +
                        "' overruns the blob");
    std::vector<double> values(count);
    for (std::size_t i = 0; i < count; ++i) {
      std::uint64_t bits = 0;
      for (int b = 0; b < 8; ++b)
        bits |= std::uint64_t(
                    (unsigned char)data[offset + i * 8 + b])
                << (8 * b);
      values[i] = std::bit_cast<double>(bits);
    }
    offset += count * 8;
    return values;
  }
};

json config_to_json(const HopConfig& c) {
  return {{"levels", c.levels},
          {"window", c.window},
          {"stride", c.stride},
          {"pool", c.pool},
          {"energy_threshold", c.energy_threshold},
          {"max_kernels", c.max_kernels},
          {"patch_cap", c.patch_cap}};
}

HopConfig config_from_json(const json& j) {
  HopConfig c;
  c.levels = j.at("levels").get<std::size_t>();
  c.window = j.at("window").get<std::size_t>();
  c.stride = j.at("stride").get<std::size_t>();
  c.pool = j.at("pool").get<std::size_t>();
  c.energy_threshold = j.at("energy_threshold").get<double>();
  c.max_kernels = j.at("max_kernels").get<std::size_t>();
  c.patch_cap = j.at("patch_cap").get<std::size_t>();
  return c;
}

}  // namespace

void save_bundle(const std::filesystem::path& dir, const ModelBundle& bundle) {
  std::filesystem::create_directories(dir);
  const HopModel& m = bundle.model;

  json root;
  root["format_version"] = "1";
  root["config"] = config_to_json(m.config);
  root["input"] = {{"height", m.input_h},
                   {"width", m.input_w},
                   {"channels", m.input_c}};

  json nodes = json::array();
  for (const ChannelNode& n : m.nodes) {
    nodes.push_back({{"id", n.id},
                     {"level", n.level},
                     {"parent", n.parent},
                     {"kernel", n.kernel_index},
                     {"energy", n.energy},
                     {"status", to_string(n.status)}});
  }
  root["nodes"] = nodes;
  root["output_channels"] = m.output_channels;
  json shapes = json::array();
  for (const auto& [h, w] : m.output_shapes) shapes.push_back({h, w});
  root["output_shapes"] = shapes;

  BlobWriter blob;
  json units = json::array();
  for (std::size_t u = 0; u < m.units.size(); ++u) {
    const HopUnit& unit = m.units[u];
    units.push_back({{"parent", unit.parent},
                     {"level", unit.level},
                     {"n", unit.kernels.input_dim},
                     {"k", unit.kernels.ac_count()}});
    const std::string prefix = "unit" + std::to_string(u) + "/";
    blob.add(prefix + "dc", {unit.kernels.input_dim}, unit.kernels.dc.data());
    blob.add(prefix + "ac", {unit.kernels.ac_count(), unit.kernels.input_dim},
             unit.kernels.ac.data());
    blob.add(prefix + "ev", {unit.kernels.explained.size()},
             unit.kernels.explained.data());
    blob.add(prefix + "bias", {1}, &unit.kernels.bias);
  }
  root["units"] = units;

  if (bundle.features) {
    const FeatureBlock& fb = *bundle.features;
    root["feature_block"] = {{"channels", fb.channels},
                             {"map_height", fb.map_h},
                             {"map_width", fb.map_w},
                             {"components", fb.components},
                             {"width", fb.width},
                             {"vector_count", fb.vector_count}};
    for (std::size_t c = 0; c < fb.channels.size(); ++c) {
      const std::string prefix = "fb/" + std::to_string(c) + "/";
      blob.add(prefix + "mean", {fb.flat_dim()}, fb.means[c].data());
      blob.add(prefix + "basis", {fb.components, fb.flat_dim()},
               fb.bases[c].data());
    }
  }

  if (bundle.probe) {
    const ProbeModel& p = *bundle.probe;
    root["probe"] = {{"classes", p.classes}, {"dim", p.dim}};
    blob.add("probe/weights", {p.classes.size(), p.dim}, p.weights.data());
    blob.add("probe/biases", {p.biases.size()}, p.biases.data());
  }

  root["arrays"] = blob.manifest;

  create_file(dir / "model.json") << root.dump(2) << "\n";
  create_file(dir / "model.bin").write(blob.data.data(),
                                       std::streamsize(blob.data.size()));
}

ModelBundle load_bundle(const std::filesystem::path& dir) {
  std::ifstream jin(dir / "model.json");
  if (!jin) throw IoError("cannot open '" + (dir / "model.json").string() + "'");
  json root;
  try {
    root = json::parse(jin);
  } catch (const json::exception& e) {
    throw SchemaError("bundle manifest: " + std::string(e.what()));
  }
  if (root.value("format_version", "") != "1")
    throw SchemaError("bundle: unsupported format_version");

  std::ifstream bin(dir / "model.bin", std::ios::binary);
  if (!bin) throw IoError("cannot open '" + (dir / "model.bin").string() + "'");
  std::string data((std::istreambuf_iterator<char>(bin)),
                   std::istreambuf_iterator<char>());
  if (data.size() % 8 != 0)
    throw SchemaError("bundle blob: size is not a multiple of 8");

  try {
    ModelBundle bundle;
    HopModel& m = bundle.model;
    m.config = config_from_json(root.at("config"));
    m.input_h = root.at("input").at("height").get<std::size_t>();
    m.input_w = root.at("input").at("width").get<std::size_t>();
    m.input_c = root.at("input").at("channels").get<std::size_t>();

    for (const json& n : root.at("nodes")) {
      ChannelNode node;
      node.id = n.at("id").get<std::string>();
      node.level = n.at("level").get<std::size_t>();
      node.parent = n.at("parent").get<std::string>();
      node.kernel_index = n.at("kernel").get<std::size_t>();
      node.energy = n.at("energy").get<double>();
      node.status = channel_status_from_string(n.at("status").get<std::string>());
      m.nodes.push_back(std::move(node));
    }
    m.output_channels =
        root.at("output_channels").get<std::vector<std::string>>();
    for (const json& s : root.at("output_shapes"))
      m.output_shapes.emplace_back(s.at(0).get<std::size_t>(),
                                   s.at(1).get<std::size_t>());

    BlobReader blob{root.at("arrays"), std::move(data)};
    std::size_t u = 0;
    for (const json& ju : root.at("units")) {
      HopUnit unit;
      unit.parent = ju.at("parent").get<std::string>();
      unit.level = ju.at("level").get<std::size_t>();
      const std::size_t n = ju.at("n").get<std::size_t>();
      const std::size_t k = ju.at("k").get<std::size_t>();
      const std::string prefix = "unit" + std::to_string(u++) + "/";
      unit.kernels.input_dim = n;
      unit.kernels.dc = blob.next(prefix + "dc", {n});
      unit.kernels.ac = Matrix(k, n, blob.next(prefix + "ac", {k, n}));
      unit.kernels.explained = blob.next(prefix + "ev", {k + 1});
      unit.kernels.bias = blob.next(prefix + "bias", {1}).at(0);
      m.units.push_back(std::move(unit));
    }

    if (root.contains("feature_block")) {
      const json& jf = root.at("feature_block");
      FeatureBlock fb;
      fb.channels = jf.at("channels").get<std::vector<std::string>>();
      fb.map_h = jf.at("map_height").get<std::size_t>();
      fb.map_w = jf.at("map_width").get<std::size_t>();
      fb.components = jf.at("components").get<std::size_t>();
      fb.width = jf.at("width").get<std::size_t>();
      fb.vector_count = jf.at("vector_count").get<std::size_t>();
      for (std::size_t c = 0; c < fb.channels.size(); ++c) {
        const std::string prefix = "fb/" + std::to_string(c) + "/";
        fb.means.push_back(blob.next(prefix + "mean", {fb.flat_dim()}));
        fb.bases.push_back(
            Matrix(fb.components, fb.flat_dim(),
                   blob.next(prefix + "basis", {fb.components, fb.flat_dim()})));
      }
      bundle.features = std::move(fb);
    }

    if (root.contains("probe")) {
      const json& jp = root.at("probe");
      ProbeModel p;
      p.classes = jp.at("classes").get<std::vector<std::string>>();
      p.dim = jp.at("dim").get<std::size_t>();
      p.weights = Matrix(p.classes.size(), p.dim,
                         blob.next("probe/weights", {p.classes.size(), p.dim}));
      p.biases = blob.next("probe/biases", {p.classes.size()});
      bundle.probe = std::move(p);
    }

    if (blob.cursor != blob.manifest.size() || blob.offset != blob.data.size())
      throw SchemaError(
          "bundle blob: declared arrays do not cover the blob exactly");
    return bundle;
  } catch (const json::exception& e) {
    throw SchemaError("bundle manifest: " + std::string(e.what()));
  }
}

void save_features(const std::filesystem::path& prefix, const FeatureFile& f) {
  if (f.features.cols() != f.visual_dim + f.text_dim)
    throw DimensionError("save_features: dim fields do not add up");
  json root;
  root["format_version"] = "1";
  root["count"] = f.features.rows();
  root["visual_dim"] = f.visual_dim;
  root["text_dim"] = f.text_dim;
  root["stems"] = f.stems;

  auto jpath = prefix;
  jpath += ".json";
  auto bpath = prefix;
  bpath += ".bin";
  create_file(jpath) << root.dump(2) << "\n";
  auto out = create_file(bpath);
  write_doubles_le(out, f.features.data(), f.features.size());
}

FeatureFile load_features(const std::filesystem::path& prefix) {
  auto jpath = prefix;
  jpath += ".json";
  auto bpath = prefix;
  bpath += ".bin";
  std::ifstream jin(jpath);
  if (!jin) throw IoError("cannot open '" + jpath.string() + "'");
  json root;
  try {
    root = json::parse(jin);
  } catch (const json::exception& e) {
    throw SchemaError("feature manifest: " + std::string(e.what()));
  }
  if (root.value("format_version", "") != "1")
    throw SchemaError("feature file: unsupported format_version");

  FeatureFile f;
  const std::size_t count = root.at("count").get<std::size_t>();
  f.visual_dim = root.at("visual_dim").get<std::size_t>();
  f.text_dim = root.at("text_dim").get<std::size_t>();
  f.stems = root.at("stems").get<std::vector<std::string>>();
  const std::size_t dim = f.visual_dim + f.text_dim;

  std::ifstream bin(bpath, std::ios::binary);
  if (!bin) throw IoError("cannot open '" + bpath.string() + "'");
  bin.seekg(0, std::ios::end);
  if (std::size_t(bin.tellg()) != count * dim * 8)
    throw SchemaError("feature blob: declared extent " + std::to_string(count) +
                      "x" + std::to_string(dim) +
                      " does not match the file size");
  bin.seekg(0);
  f.features = Matrix(count, dim);
  read_doubles_le(bin, f.features.data(), f.features.size());
  return f;
}

}  // namespace phop
