// phop: train, apply and inspect hop-tree feature encoders from the shell.
//
// Subcommands mirror the pipeline: gen-synthetic -> train-encoder ->
// extract -> train-probe -> evaluate / visualize.

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "phop/bundle.hpp"
#include "phop/dataset.hpp"
#include "phop/errors.hpp"
#include "phop/features.hpp"
#include "phop/hop.hpp"
#include "phop/image_io.hpp"
#include "phop/probe.hpp"
#include "phop/text.hpp"

namespace fs = std::filesystem;
using namespace phop;

namespace {

std::ofstream create_file(const fs::path& path) {
  if (fs::exists(path))
    throw IoError("refusing to overwrite '" + path.string() + "'");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot create '" + path.string() + "'");
  return out;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

void run_gen_synthetic(const std::string& out, const SyntheticSpec& spec) {
  const DatasetManifest m = generate_synthetic(out, spec);
  std::size_t positives = 0;
  for (const auto& row : m.rows) positives += row.labels.empty() ? 0 : 1;
  std::cout << "wrote " << m.rows.size() << " images (" << positives
            << " labeled) under " << out << "\n";
}

void run_train_encoder(const std::string& manifest_path, const std::string& out,
                       std::size_t side, const HopConfig& cfg,
                       std::size_t components, std::size_t feature_dim) {
  const DatasetManifest manifest = load_manifest(manifest_path);
  const Dataset ds = load_dataset(manifest, side);
  ModelBundle bundle;
  bundle.model = train_tree(ds.images, cfg);

  std::vector<ChannelMaps> training;
  training.reserve(ds.images.size());
  for (const ImageTensor& img : ds.images)
    training.push_back(infer_tree(bundle.model, img));
  bundle.features = fit_reducer(training, components, feature_dim);

  save_bundle(out, bundle);
  std::cout << "trained " << bundle.model.units.size() << " units, "
            << bundle.model.output_channels.size() << " output channels; Q="
            << bundle.features->vector_count << " D=" << feature_dim << "\n";
}

void run_extract(const std::string& model_dir, const std::string& manifest_path,
                 const std::string& out_prefix, std::size_t text_buckets) {
  const ModelBundle bundle = load_bundle(model_dir);
  if (!bundle.features)
    throw SchemaError("model has no feature block; run train-encoder first");
  const DatasetManifest manifest = load_manifest(manifest_path);
  const Dataset ds = load_dataset(manifest, bundle.model.input_h);

  const std::size_t visual_dim = bundle.features->feature_len();
  FeatureFile file;
  file.visual_dim = visual_dim;
  file.text_dim = text_buckets;
  file.stems = ds.stems;
  file.features = Matrix(ds.images.size(), visual_dim + text_buckets);
  for (std::size_t i = 0; i < ds.images.size(); ++i) {
    const auto maps = infer_tree(bundle.model, ds.images[i]);
    const std::vector<double> visual = reduce_flat(*bundle.features, maps);
    double* row = file.features.row(i);
    std::copy(visual.begin(), visual.end(), row);
    if (text_buckets > 0) {
      const std::vector<double> text =
          hash_text_features(ds.texts[i], text_buckets);
      std::copy(text.begin(), text.end(), row + visual_dim);
    }
  }
  save_features(out_prefix, file);
  std::cout << "extracted " << file.features.rows() << " rows of dim "
            << file.features.cols() << " to " << out_prefix << ".{json,bin}\n";
}

void run_train_probe(const std::string& model_dir, const std::string& features,
                     const std::string& manifest_path, const std::string& out,
                     double lr, std::size_t epochs, double l2, bool raw) {
  ModelBundle bundle = load_bundle(model_dir);
  const FeatureFile file = load_features(features);
  const DatasetManifest manifest = load_manifest(manifest_path);
  if (file.stems.size() != manifest.rows.size())
    throw SchemaError("feature file and manifest disagree on the row count");

  const LabelMatrix labels =
      labels_from_manifest(manifest, manifest.vocabulary);
  ProbeTrainReport report;
  bundle.probe =
      raw ? train_probe(file.features, labels, lr, epochs, l2, &report)
          : train_probe_standardized(file.features, labels, lr, epochs, l2,
                                     &report);
  save_bundle(out, bundle);
  std::cout << "trained probe over " << labels.classes.size() << " classes";
  if (!report.skipped.empty()) {
    std::cout << " (skipped:";
    for (const auto& s : report.skipped) std::cout << " " << s;
    std::cout << ")";
  }
  std::cout << "\n";
}

void run_evaluate(const std::string& model_dir, const std::string& features,
                  const std::string& manifest_path, const std::string& metrics,
                  const std::string& roc) {
  const ModelBundle bundle = load_bundle(model_dir);
  if (!bundle.probe)
    throw SchemaError("model has no probe; run train-probe first");
  const FeatureFile file = load_features(features);
  const DatasetManifest manifest = load_manifest(manifest_path);
  const LabelMatrix labels =
      labels_from_manifest(manifest, bundle.probe->classes);

  const EvalResult result = evaluate(*bundle.probe, file.features, labels);
  {
    auto out = create_file(metrics);
    out << "class,auc\n";
    for (std::size_t c = 0; c < result.classes.size(); ++c) {
      out << result.classes[c] << ",";
      if (std::isnan(result.auc_per_class[c]))
        out << "nan\n";
      else
        out << format_double(result.auc_per_class[c]) << "\n";
    }
    out << "macro_avg," << format_double(result.macro) << "\n";
  }
  if (!roc.empty()) {
    auto out = create_file(roc);
    out << "class,fpr,tpr\n";
    const Matrix scores = predict(*bundle.probe, file.features);
    std::vector<double> s(scores.rows()), y(scores.rows());
    for (std::size_t c = 0; c < result.classes.size(); ++c) {
      if (std::isnan(result.auc_per_class[c])) continue;
      for (std::size_t i = 0; i < scores.rows(); ++i) {
        s[i] = scores.at(i, c);
        y[i] = labels.y.at(i, c);
      }
      for (const RocPoint& p : roc_points(s, y))
        out << result.classes[c] << "," << format_double(p.fpr) << ","
            << format_double(p.tpr) << "\n";
    }
  }
  std::cout << "macro AUC " << format_double(result.macro) << " over "
            << result.classes.size() - result.skipped.size() << " classes\n";
}

void run_visualize(const std::string& model_dir, const std::string& image_path,
                   const std::string& out_dir) {
  const ModelBundle bundle = load_bundle(model_dir);
  const HopModel& model = bundle.model;
  ImageTensor img = read_png_gray(image_path);
  img = resize_bilinear(img, model.input_h, model.input_w);

  fs::create_directories(out_dir);
  const std::string stem = fs::path(image_path).stem().string();
  std::size_t written = 0;
  for (const auto& [id, map] : infer_tree(model, img)) {
    const auto pixels = render_heatmap(map, model.input_h, model.input_w);
    write_png_gray(fs::path(out_dir) / (stem + "_ch" + id + ".png"),
                   model.input_h, model.input_w, pixels.data());
    ++written;
  }
  std::cout << "wrote " << written << " heatmaps to " << out_dir << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hop-tree feature encoder pipeline"};
  app.require_subcommand(1);

  // gen-synthetic
  auto* gen = app.add_subcommand("gen-synthetic",
                                 "write a deterministic blob dataset");
  std::string gen_out;
  SyntheticSpec spec;
  gen->add_option("--out", gen_out, "output directory")->required();
  gen->add_option("--n", spec.count, "number of images");
  gen->add_option("--seed", spec.seed, "RNG seed");
  gen->add_option("--side", spec.side, "image side length");
  gen->add_option("--blob-radius", spec.blob_radius, "blob radius in pixels");
  gen->add_option("--blob-intensity", spec.blob_intensity, "blob peak value");
  gen->add_option("--noise-sigma", spec.noise_sigma, "background noise sigma");
  gen->add_option("--positive-rate", spec.positive_rate,
                  "probability an image carries a blob");
  gen->add_flag("--with-reports", spec.with_reports,
                "emit text reports and a text-only class");

  // train-encoder
  auto* enc = app.add_subcommand("train-encoder",
                                 "fit the hop tree and the PCA feature block");
  std::string enc_manifest, enc_out;
  std::size_t enc_side = 206;
  HopConfig cfg;
  std::size_t components = 0, feature_dim = 2048;
  enc->add_option("--manifest", enc_manifest, "dataset manifest CSV")->required();
  enc->add_option("--out", enc_out, "output model directory")->required();
  enc->add_option("--side", enc_side, "resize side (default 206)");
  enc->add_option("--levels", cfg.levels, "tree depth");
  enc->add_option("--window", cfg.window, "sliding window size w");
  enc->add_option("--stride", cfg.stride, "sliding window stride s");
  enc->add_option("--pool", cfg.pool, "max-pool window");
  enc->add_option("--energy-threshold", cfg.energy_threshold,
                  "channel pruning threshold E");
  enc->add_option("--max-kernels", cfg.max_kernels,
                  "AC kernel cap per unit (0 = all)");
  enc->add_option("--patch-cap", cfg.patch_cap,
                  "training patch cap per unit (0 = all)");
  enc->add_option("--components", components, "PCA components per channel")
      ->required();
  enc->add_option("--feature-dim", feature_dim, "feature vector width D");

  // extract
  auto* ext = app.add_subcommand("extract", "write per-image feature rows");
  std::string ext_model, ext_manifest, ext_out;
  std::size_t text_buckets = 1024;
  bool with_text = false;
  ext->add_option("--model", ext_model, "model directory")->required();
  ext->add_option("--manifest", ext_manifest, "dataset manifest CSV")->required();
  ext->add_option("--out", ext_out, "output prefix (.json/.bin)")->required();
  ext->add_flag("--with-text", with_text,
                "append hashed report-text features");
  ext->add_option("--text-buckets", text_buckets,
                  "hashed text feature width (default 1024)");

  // train-probe
  auto* prb = app.add_subcommand("train-probe",
                                 "fit the multi-label linear probe");
  std::string prb_model, prb_features, prb_manifest, prb_out;
  double lr = 0.1, l2 = 1e-4;
  std::size_t epochs = 500;
  bool raw = false;
  prb->add_option("--model", prb_model, "model directory")->required();
  prb->add_option("--features", prb_features, "feature file prefix")->required();
  prb->add_option("--manifest", prb_manifest, "manifest with labels")->required();
  prb->add_option("--out", prb_out, "output model directory")->required();
  prb->add_option("--lr", lr, "learning rate");
  prb->add_option("--epochs", epochs, "gradient descent epochs");
  prb->add_option("--l2", l2, "L2 penalty");
  prb->add_flag("--raw", raw, "train on unstandardized features");

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "per-class AUC and ROC points");
  std::string ev_model, ev_features, ev_manifest, ev_metrics, ev_roc;
  ev->add_option("--model", ev_model, "model directory with a probe")->required();
  ev->add_option("--features", ev_features, "feature file prefix")->required();
  ev->add_option("--manifest", ev_manifest, "manifest with labels")->required();
  ev->add_option("--out-metrics", ev_metrics, "metrics CSV path")->required();
  ev->add_option("--out-roc", ev_roc, "ROC points CSV path");

  // visualize
  auto* vis = app.add_subcommand("visualize", "per-channel heatmap PNGs");
  std::string vis_model, vis_image, vis_out;
  vis->add_option("--model", vis_model, "model directory")->required();
  vis->add_option("--image", vis_image, "input PNG")->required();
  vis->add_option("--out", vis_out, "output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) run_gen_synthetic(gen_out, spec);
    if (enc->parsed())
      run_train_encoder(enc_manifest, enc_out, enc_side, cfg, components,
                        feature_dim);
    if (ext->parsed())
      run_extract(ext_model, ext_manifest, ext_out,
                  with_text ? text_buckets : 0);
    if (prb->parsed())
      run_train_probe(prb_model, prb_features, prb_manifest, prb_out, lr,
                      epochs, l2, raw);
    if (ev->parsed())
      run_evaluate(ev_model, ev_features, ev_manifest, ev_metrics, ev_roc);
    if (vis->parsed()) run_visualize(vis_model, vis_image, vis_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
