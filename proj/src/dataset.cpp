#include "phop/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "phop/errors.hpp"
#include "phop/image_io.hpp"

namespace phop {

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, sep)) out.push_back(field);
  if (!line.empty() && line.back() == sep) out.push_back("");
  return out;
}

std::ofstream open_exclusive(const std::filesystem::path& path) {
  if (std::filesystem::exists(path))
    throw IoError("refusing to overwrite '" + path.string() + "'");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot create '" + path.string() + "'");
  return out;
}

std::string padded_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "img%04zu", i);
  return buf;
}

}  // namespace

DatasetManifest load_manifest(const std::filesystem::path& csv_path) {
  std::ifstream in(csv_path);
  if (!in) throw IoError("cannot open manifest '" + csv_path.string() + "'");

  DatasetManifest manifest;
  manifest.root = csv_path.parent_path();

  std::string line;
  if (!std::getline(in, line))
    throw SchemaError("manifest '" + csv_path.string() + "' is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "image,labels,report")
    throw SchemaError("manifest header must be 'image,labels,report', got '" +
                      line + "'");

  std::set<std::string> seen;
  std::set<std::string> vocab;
  std::size_t row_index = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    ++row_index;
    if (line.empty()) continue;
    const auto fields = split(line, ',');
    if (fields.size() < 2 || fields.size() > 3)
      throw SchemaError("manifest row " + std::to_string(row_index) +
                        ": expected 2 or 3 fields, got " +
                        std::to_string(fields.size()));
    ManifestRow row;
    row.image = fields[0];
    if (row.image.empty())
      throw SchemaError("manifest row " + std::to_string(row_index) +
                        ": empty image path");
    if (!seen.insert(row.image).second)
      throw SchemaError("manifest row " + std::to_string(row_index) +
                        ": duplicate image '" + row.image + "'");
    if (!std::filesystem::exists(manifest.root / row.image))
      throw SchemaError("manifest row " + std::to_string(row_index) +
                        ": missing file '" + row.image + "'");
    for (const std::string& label : split(fields[1], '|')) {
      if (label.empty()) continue;
      if (std::find(row.labels.begin(), row.labels.end(), label) ==
          row.labels.end())
        row.labels.push_back(label);
      vocab.insert(label);
    }
    if (fields.size() == 3 && !fields[2].empty()) {
      row.report = fields[2];
      if (!std::filesystem::exists(manifest.root / row.report))
        throw SchemaError("manifest row " + std::to_string(row_index) +
                          ": missing report '" + row.report + "'");
    }
    manifest.rows.push_back(std::move(row));
  }
  manifest.vocabulary.assign(vocab.begin(), vocab.end());
  return manifest;
}

Dataset load_dataset(const DatasetManifest& manifest, std::size_t side,
                     const std::vector<std::string>* vocabulary) {
  if (side < 1) throw DimensionError("load_dataset: side must be >= 1");
  const std::vector<std::string>& vocab =
      vocabulary ? *vocabulary : manifest.vocabulary;

  Dataset ds;
  ds.labels.classes = vocab;
  ds.labels.y = Matrix(manifest.rows.size(), vocab.size());

  for (std::size_t i = 0; i < manifest.rows.size(); ++i) {
    const ManifestRow& row = manifest.rows[i];
    ImageTensor img;
    try {
      img = read_png_gray(manifest.root / row.image);
    } catch (const Error& e) {
      throw DataError("manifest row " + std::to_string(i + 1) + ": " +
                      e.what());
    }
    ds.images.push_back(resize_bilinear(img, side, side));
    ds.stems.push_back(std::filesystem::path(row.image).stem().string());

    for (const std::string& label : row.labels) {
      const auto it = std::find(vocab.begin(), vocab.end(), label);
      if (it == vocab.end())
        throw DataError("manifest row " + std::to_string(i + 1) +
                        ": unknown label '" + label + "'");
      ds.labels.y.at(i, std::size_t(it - vocab.begin())) = 1.0;
    }

    std::string text;
    if (!row.report.empty()) {
      std::ifstream rin(manifest.root / row.report);
      if (!rin)
        throw DataError("manifest row " + std::to_string(i + 1) +
                        ": cannot read report '" + row.report + "'");
      std::ostringstream buf;
      buf << rin.rdbuf();
      text = buf.str();
    }
    ds.texts.push_back(std::move(text));
  }
  return ds;
}

LabelMatrix labels_from_manifest(const DatasetManifest& manifest,
                                 const std::vector<std::string>& classes) {
  LabelMatrix labels;
  labels.classes = classes;
  labels.y = Matrix(manifest.rows.size(), classes.size());
  for (std::size_t i = 0; i < manifest.rows.size(); ++i) {
    for (const std::string& label : manifest.rows[i].labels) {
      const auto it = std::find(classes.begin(), classes.end(), label);
      if (it == classes.end())
        throw DataError("manifest row " + std::to_string(i + 1) +
                        ": unknown label '" + label + "'");
      labels.y.at(i, std::size_t(it - classes.begin())) = 1.0;
    }
  }
  return labels;
}

std::vector<std::string> synthetic_classes(const SyntheticSpec& spec) {
  if (spec.with_reports) return {"device", "lesion"};
  return {"lesion"};
}

DatasetManifest generate_synthetic(const std::filesystem::path& out_dir,
                                   const SyntheticSpec& spec) {
  if (spec.count < 4)
    throw DataError("generate_synthetic: need at least 4 images");
  const double margin = std::ceil(spec.blob_radius);
  if (double(spec.side) <= 2.0 * margin + 1.0)
    throw DataError("generate_synthetic: blob radius " +
                    std::to_string(spec.blob_radius) +
                    " does not fit in side " + std::to_string(spec.side));

  std::filesystem::create_directories(out_dir / "images");
  std::filesystem::create_directories(out_dir / "masks");
  if (spec.with_reports) std::filesystem::create_directories(out_dir / "reports");

  std::mt19937_64 rng(spec.seed);
  std::bernoulli_distribution coin(spec.positive_rate);
  std::bernoulli_distribution device_coin(0.5);
  const int lo = int(margin), hi = int(spec.side) - 1 - int(margin);
  std::uniform_int_distribution<int> center(lo, hi);
  std::normal_distribution<double> noise(0.0, 1.0);

  const double background = 0.2;
  const double sigma_blob = spec.blob_radius / 2.0;

  std::ostringstream manifest_body;
  for (std::size_t i = 0; i < spec.count; ++i) {
    const std::string stem = padded_name(i);
    const bool positive = coin(rng);
    int cx = 0, cy = 0;
    if (positive) {
      cx = center(rng);
      cy = center(rng);
    }
    const bool device = spec.with_reports && device_coin(rng);

    std::vector<std::uint8_t> pixels(spec.side * spec.side);
    std::vector<std::uint8_t> mask(spec.side * spec.side, 0);
    for (std::size_t y = 0; y < spec.side; ++y) {
      for (std::size_t x = 0; x < spec.side; ++x) {
        double v = background;
        if (spec.noise_sigma > 0.0) v += spec.noise_sigma * noise(rng);
        if (positive) {
          const double dx = double(x) - cx, dy = double(y) - cy;
          const double d2 = dx * dx + dy * dy;
          v += spec.blob_intensity *
               std::exp(-d2 / (2.0 * sigma_blob * sigma_blob));
          if (d2 <= spec.blob_radius * spec.blob_radius)
            mask[y * spec.side + x] = 255;
        }
        v = std::clamp(v, 0.0, 1.0);
        pixels[y * spec.side + x] = std::uint8_t(std::lround(v * 255.0));
      }
    }
    write_png_gray(out_dir / "images" / (stem + ".png"), spec.side, spec.side,
                   pixels.data());
    write_png_gray(out_dir / "masks" / (stem + ".png"), spec.side, spec.side,
                   mask.data());

    std::string labels;
    if (device) labels = "device";
    if (positive) labels += labels.empty() ? "lesion" : "|lesion";

    std::string report_field;
    if (spec.with_reports) {
      std::string text = "routine chest study. ";
      text += device ? "support device in place." : "no device present.";
      text += "\n";
      report_field = "reports/" + stem + ".txt";
      open_exclusive(out_dir / report_field) << text;
    }
    manifest_body << "images/" << stem << ".png," << labels << ","
                  << report_field << "\n";
  }

  {
    auto out = open_exclusive(out_dir / "manifest.csv");
    out << "image,labels,report\n" << manifest_body.str();
  }
  return load_manifest(out_dir / "manifest.csv");
}

}  // namespace phop
