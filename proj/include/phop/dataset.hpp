#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "phop/probe.hpp"
#include "phop/types.hpp"

namespace phop {

struct ManifestRow {
  std::string image;    // path relative to the manifest directory
  std::vector<std::string> labels;
  std::string report;   // optional path, empty when absent
};

/// Parsed `image,labels,report` CSV plus the class vocabulary (sorted unique
/// labels unless an explicit vocabulary is supplied at load time).
struct DatasetManifest {
  std::filesystem::path root;
  std::vector<ManifestRow> rows;
  std::vector<std::string> vocabulary;
};

/// Parse and validate: header, referenced files, duplicate image entries.
DatasetManifest load_manifest(const std::filesystem::path& csv_path);

struct Dataset {
  std::vector<ImageTensor> images;  // grayscale, side x side, values in [0,1]
  LabelMatrix labels;
  std::vector<std::string> texts;   // report contents, "" when absent
  std::vector<std::string> stems;   // image filename stems
};

/// Decode, resize and label every row. When `vocabulary` is given, labels
/// outside it fail with the offending row index.
Dataset load_dataset(const DatasetManifest& manifest, std::size_t side,
                     const std::vector<std::string>* vocabulary = nullptr);

/// Label matrix over the given classes without touching the image files.
LabelMatrix labels_from_manifest(const DatasetManifest& manifest,
                                 const std::vector<std::string>& classes);

struct SyntheticSpec {
  std::size_t count = 100;
  std::uint64_t seed = 0;
  std::size_t side = 32;
  double blob_radius = 5.0;
  double blob_intensity = 0.7;
  double noise_sigma = 0.05;
  double positive_rate = 0.5;
  bool with_reports = false;  // adds a class whose signal lives only in text
};

/// Names of the classes a generator configuration produces.
std::vector<std::string> synthetic_classes(const SyntheticSpec& spec);

/// Deterministic blob dataset: images/, masks/ (ground-truth blob support),
/// optional reports/, and manifest.csv under out_dir.
DatasetManifest generate_synthetic(const std::filesystem::path& out_dir,
                                   const SyntheticSpec& spec);

}  // namespace phop
