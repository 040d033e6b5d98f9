// Acceptance suite: one pass/fail line per criterion. argv[1] names the CLI
// binary, which the end-to-end criteria drive through std::system.

#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "phop/bundle.hpp"
#include "phop/dataset.hpp"
#include "phop/features.hpp"
#include "phop/hop.hpp"
#include "phop/image_io.hpp"
#include "phop/probe.hpp"
#include "phop/saab.hpp"
#include "phop/text.hpp"

namespace fs = std::filesystem;
using namespace phop;
using Clock = std::chrono::steady_clock;

namespace {

std::string g_cli;
fs::path g_work;
int g_failures = 0;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void criterion(int id, const std::string& name,
               const std::function<bool(std::string&)>& body) {
  std::string detail;
  bool ok = false;
  try {
    ok = body(detail);
  } catch (const std::exception& e) {
    detail = std::string("exception: ") + e.what();
  }
  std::cout << (ok ? "PASS" : "FAIL") << " criterion " << id << ": " << name;
  if (!detail.empty()) std::cout << " [" << detail << "]";
  std::cout << std::endl;
  if (!ok) ++g_failures;
}

int run_cli(const std::string& args) {
  const std::string cmd = g_cli + " " + args + " >> " +
                          (g_work / "cli.log").string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::vector<ImageTensor> random_images(std::mt19937_64& rng, std::size_t count,
                                       std::size_t side) {
  std::vector<ImageTensor> out;
  for (std::size_t i = 0; i < count; ++i)
    out.push_back(oracle::random_image(rng, side, side));
  return out;
}

Matrix gaussian_patches(std::mt19937_64& rng, std::size_t m, std::size_t n) {
  std::normal_distribution<double> dist(0.0, 1.0);
  Matrix p(m, n);
  for (std::size_t i = 0; i < p.size(); ++i) p.data()[i] = dist(rng);
  return p;
}

// --- criteria 1 and 2 share one trained tree ---------------------------------

bool kernel_orthonormality(std::string& detail) {
  const auto start = Clock::now();
  std::mt19937_64 rng(2024);
  HopConfig cfg;
  cfg.energy_threshold = 0.0;  // keep every unit alive
  const HopModel model = train_tree(random_images(rng, 200, 32), cfg);

  double worst = 0.0;
  for (const HopUnit& unit : model.units) {
    const Matrix g = unit.kernels.stacked();
    for (std::size_t i = 0; i < g.rows(); ++i)
      for (std::size_t j = 0; j < g.rows(); ++j) {
        double dot = 0.0;
        for (std::size_t t = 0; t < g.cols(); ++t)
          dot += g.at(i, t) * g.at(j, t);
        worst = std::max(worst, std::abs(dot - (i == j ? 1.0 : 0.0)));
      }
  }
  const double elapsed = seconds_since(start);
  std::ostringstream os;
  os << model.units.size() << " units, max |G G^T - I| = " << worst << ", "
     << elapsed << " s";
  detail = os.str();
  return worst <= 1e-7 && elapsed < 30.0;
}

bool energy_conservation(std::string& detail) {
  std::mt19937_64 rng(31337);
  HopConfig cfg;
  cfg.energy_threshold = 0.0;
  const HopModel model = train_tree(random_images(rng, 20, 32), cfg);

  std::map<std::string, double> parent{{"", 1.0}};
  for (const ChannelNode& n : model.nodes) parent[n.id] = n.energy;
  std::map<std::string, double> child_sum;
  for (const ChannelNode& n : model.nodes) child_sum[n.parent] += n.energy;
  double worst = 0.0;
  for (const auto& [id, sum] : child_sum)
    worst = std::max(worst, std::abs(sum - parent.at(id)));
  std::ostringstream os;
  os << "max |sum(children) - parent| = " << worst;
  detail = os.str();
  return worst <= 1e-6;
}

bool pca_oracle_equivalence(std::string& detail) {
  std::mt19937_64 rng(555);
  double worst = 0.0;
  const std::size_t dims[3] = {4, 9, 27};
  for (int rep = 0; rep < 50; ++rep) {
    const std::size_t n = dims[rep % 3];
    const std::size_t m = 60 + rng() % 140;
    const Matrix patches = gaussian_patches(rng, m, n);
    const SaabKernels k = fit_saab(patches);
    const oracle::Pca pca = oracle::residual_pca(patches);
    std::vector<std::vector<double>> ours, theirs;
    for (std::size_t j = 0; j < k.ac_count(); ++j) {
      ours.emplace_back(k.ac.row(j), k.ac.row(j) + n);
      theirs.push_back(pca.eigenvectors[j]);
    }
    worst = std::max(worst, oracle::max_principal_angle(ours, theirs));
  }
  std::ostringstream os;
  os << "max principal angle = " << worst << " rad";
  detail = os.str();
  return worst <= 1e-6;
}

bool reconstruction(std::string& detail) {
  std::mt19937_64 rng(777);
  double worst = 0.0;
  for (std::size_t n : {std::size_t{4}, std::size_t{9}, std::size_t{16}}) {
    const Matrix patches = gaussian_patches(rng, 200, n);
    const SaabKernels k = fit_saab(patches);
    if (k.ac_count() != n - 1) return false;
    const Matrix g = k.stacked();
    const Matrix r = apply_saab(k, patches);
    for (std::size_t i = 0; i < patches.rows(); ++i) {
      double err = 0.0, norm = 0.0;
      for (std::size_t t = 0; t < n; ++t) {
        double rec = 0.0;
        for (std::size_t j = 0; j < g.rows(); ++j)
          rec += (r.at(i, j) - k.bias) * g.at(j, t);
        err += (rec - patches.at(i, t)) * (rec - patches.at(i, t));
        norm += patches.at(i, t) * patches.at(i, t);
      }
      worst = std::max(worst, std::sqrt(err / norm));
    }
  }
  std::ostringstream os;
  os << "max relative error = " << worst;
  detail = os.str();
  return worst <= 1e-6;
}

bool geometry(std::string& detail) {
  HopConfig cfg;  // w=3, s=1, pool=2, three levels
  const auto plan206 = plan_geometry(206, 206, cfg);
  const auto plan32 = plan_geometry(32, 32, cfg);
  const std::size_t want206[3][2] = {{204, 102}, {100, 50}, {48, 24}};
  const std::size_t want32[3][2] = {{30, 15}, {13, 6}, {4, 2}};
  for (int l = 0; l < 3; ++l) {
    if (plan206[l].conv_h != want206[l][0] || plan206[l].out_h != want206[l][1])
      return false;
    if (plan32[l].conv_h != want32[l][0] || plan32[l].out_h != want32[l][1])
      return false;
  }

  // and the trained models agree with the plan
  std::mt19937_64 rng(808);
  const HopModel m32 = train_tree(random_images(rng, 3, 32), cfg);
  for (const auto& [h, w] : m32.output_shapes)
    if (h != 2 || w != 2) return false;
  const HopModel m206 = train_tree(random_images(rng, 2, 206), cfg);
  for (const auto& [h, w] : m206.output_shapes)
    if (h != 24 || w != 24) return false;
  const auto maps = infer_tree(m206, random_images(rng, 1, 206)[0]);
  if (maps.empty() || maps[0].second.rows() != 24) return false;
  detail = "206: 204/102, 100/50, 48/24; 32: 30/15, 13/6, 4/2";
  return true;
}

bool pruning_monotonicity(std::string& detail) {
  std::mt19937_64 rng(909);
  for (int dataset = 0; dataset < 3; ++dataset) {
    const auto images = random_images(rng, 5, 24);
    std::set<std::string> previous;
    bool first = true;
    for (double e : {0.0, 1e-5, 5e-5, 1e-3}) {
      HopConfig cfg;
      cfg.energy_threshold = e;
      const HopModel model = train_tree(images, cfg);
      std::set<std::string> ids;
      for (const ChannelNode& n : model.nodes)
        if (n.status != ChannelStatus::kDiscarded) ids.insert(n.id);
      if (!first)
        for (const std::string& id : ids)
          if (previous.count(id) == 0) return false;
      previous = std::move(ids);
      first = false;
    }
  }
  detail = "nested over E in {0, 1e-5, 5e-5, 1e-3} on 3 datasets";
  return true;
}

bool auc_oracle(std::string& detail) {
  std::mt19937_64 rng(1111);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  std::uniform_int_distribution<int> coarse(0, 3);
  double worst = 0.0;
  int tested = 0;
  for (int rep = 0; rep < 1000; ++rep) {
    const std::size_t m = 5 + rng() % 80;
    std::vector<double> scores(m), labels(m);
    const bool ties = rep % 2 == 0;
    std::size_t pos = 0;
    for (std::size_t i = 0; i < m; ++i) {
      scores[i] = ties ? coarse(rng) / 3.0 : dist(rng);
      labels[i] = (rng() % 2) ? 1.0 : 0.0;
      pos += labels[i] != 0.0 ? 1 : 0;
    }
    if (pos == 0 || pos == m) continue;
    ++tested;
    const double fast = auc(scores, labels);
    worst = std::max(worst, std::abs(fast - oracle::pairwise_auc(scores, labels)));

    std::vector<double> mono(m);
    for (std::size_t i = 0; i < m; ++i) mono[i] = std::exp(3.0 * scores[i]);
    if (auc(mono, labels) != fast) return false;
  }
  std::ostringstream os;
  os << tested << " vectors, max |rank - pairwise| = " << worst;
  detail = os.str();
  return worst <= 1e-12;
}

bool probe_gradients(std::string& detail) {
  std::mt19937_64 rng(1313);
  const std::size_t m = 40, d = 6;
  const Matrix x = oracle::random_matrix(rng, m, d, -2.0, 2.0);
  std::vector<double> y(m);
  for (double& v : y) v = (rng() % 2) ? 1.0 : 0.0;
  const double l2 = 1e-4;

  std::uniform_real_distribution<double> dist(-1.5, 1.5);
  double worst = 0.0;
  for (int point = 0; point < 5; ++point) {
    std::vector<double> params(d + 1);
    for (double& v : params) v = dist(rng);
    const auto loss = [&](const std::vector<double>& p) {
      return logistic_loss(x, y.data(), p.data(), p[d], l2);
    };
    const auto fd = oracle::central_difference(loss, params, 1e-5);
    std::vector<double> grad_w(d);
    double grad_b = 0.0;
    logistic_grad(x, y.data(), params.data(), params[d], l2, grad_w.data(),
                  &grad_b);
    for (std::size_t j = 0; j <= d; ++j) {
      const double got = j < d ? grad_w[j] : grad_b;
      const double rel =
          std::abs(got - fd[j]) / std::max(1.0, std::abs(fd[j]));
      worst = std::max(worst, rel);
    }
  }
  std::ostringstream os;
  os << "max relative deviation = " << worst;
  detail = os.str();
  return worst <= 1e-4;
}

// --- end-to-end over the CLI --------------------------------------------------

double read_macro(const fs::path& metrics) {
  std::ifstream in(metrics);
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("macro_avg,", 0) == 0)
      return std::stod(line.substr(line.find(',') + 1));
  }
  return -1.0;
}

bool split_manifest(const fs::path& src, const fs::path& train,
                    const fs::path& test, double held_out) {
  std::ifstream in(src);
  std::string header, line;
  if (!std::getline(in, header)) return false;
  std::vector<std::string> rows;
  while (std::getline(in, line))
    if (!line.empty()) rows.push_back(line);
  const std::size_t test_count = std::size_t(double(rows.size()) * held_out);
  const std::size_t train_count = rows.size() - test_count;
  std::ofstream tr(train), te(test);
  tr << header << "\n";
  te << header << "\n";
  for (std::size_t i = 0; i < rows.size(); ++i)
    (i < train_count ? tr : te) << rows[i] << "\n";
  return true;
}

bool synthetic_end_to_end(std::string& detail) {
  const auto start = Clock::now();
  const fs::path data = g_work / "e2e_data";
  const fs::path model = g_work / "e2e_model";
  const fs::path probed = g_work / "e2e_probed";

  if (run_cli("gen-synthetic --out " + data.string() +
              " --n 500 --seed 7 --side 32") != 0)
    return false;
  if (!split_manifest(data / "manifest.csv", data / "train.csv",
                      data / "test.csv", 0.2))
    return false;
  if (run_cli("train-encoder --manifest " + (data / "train.csv").string() +
              " --out " + model.string() +
              " --side 32 --energy-threshold 5e-5 --components 4") != 0)
    return false;
  if (run_cli("extract --model " + model.string() + " --manifest " +
              (data / "train.csv").string() + " --out " +
              (g_work / "e2e_ftrain").string()) != 0)
    return false;
  if (run_cli("extract --model " + model.string() + " --manifest " +
              (data / "test.csv").string() + " --out " +
              (g_work / "e2e_ftest").string()) != 0)
    return false;
  if (run_cli("train-probe --model " + model.string() + " --features " +
              (g_work / "e2e_ftrain").string() + " --manifest " +
              (data / "train.csv").string() + " --out " + probed.string()) != 0)
    return false;
  if (run_cli("evaluate --model " + probed.string() + " --features " +
              (g_work / "e2e_ftest").string() + " --manifest " +
              (data / "test.csv").string() + " --out-metrics " +
              (g_work / "e2e_metrics.csv").string() + " --out-roc " +
              (g_work / "e2e_roc.csv").string()) != 0)
    return false;

  const double macro = read_macro(g_work / "e2e_metrics.csv");
  const double elapsed = seconds_since(start);
  std::ostringstream os;
  os << "held-out macro AUC = " << macro << ", " << elapsed << " s";
  detail = os.str();
  return macro >= 0.90 && elapsed < 300.0;
}

bool localization(std::string& detail) {
  // Output maps need some spatial resolution for this study: side 64 gives
  // 6x6 final maps against an 8-pixel blob.
  const fs::path data = g_work / "loc_data";
  SyntheticSpec spec;
  spec.count = 160;
  spec.seed = 7;
  spec.side = 64;
  spec.blob_radius = 8.0;
  const DatasetManifest manifest = generate_synthetic(data, spec);
  const Dataset ds = load_dataset(manifest, spec.side);

  HopConfig cfg;  // stock defaults
  std::vector<ImageTensor> train(ds.images.begin(), ds.images.begin() + 100);
  const HopModel model = train_tree(train, cfg);

  // highest-energy surviving AC output channel
  std::string best_id;
  double best_energy = -1.0;
  for (const ChannelNode& n : model.nodes) {
    if (n.status != ChannelStatus::kOutput || n.kernel_index == 0) continue;
    if (n.energy > best_energy) {
      best_energy = n.energy;
      best_id = n.id;
    }
  }
  if (best_id.empty()) return false;

  std::size_t checked = 0, highlighted = 0;
  for (std::size_t i = 0; i < ds.images.size() && checked < 50; ++i) {
    if (ds.labels.y.at(i, 0) == 0.0) continue;
    ++checked;
    const auto maps = infer_tree(model, ds.images[i]);
    const Matrix* map = nullptr;
    for (const auto& [id, m] : maps)
      if (id == best_id) map = &m;
    if (!map) return false;
    const auto heat = render_heatmap(*map, spec.side, spec.side);
    const ImageTensor mask =
        read_png_gray(data / "masks" / (ds.stems[i] + ".png"));
    double in_sum = 0.0, out_sum = 0.0;
    std::size_t in_n = 0, out_n = 0;
    for (std::size_t p = 0; p < heat.size(); ++p) {
      if (mask.data[p] > 0.5) {
        in_sum += heat[p];
        ++in_n;
      } else {
        out_sum += heat[p];
        ++out_n;
      }
    }
    if (in_n > 0 && out_n > 0 && in_sum / double(in_n) > out_sum / double(out_n))
      ++highlighted;
  }
  std::ostringstream os;
  os << "channel " << best_id << ": blob brighter in " << highlighted << "/"
     << checked;
  detail = os.str();
  return checked == 50 && highlighted * 5 >= checked * 4;  // >= 80%
}

bool persistence(std::string& detail) {
  std::mt19937_64 rng(1717);
  const auto images = random_images(rng, 6, 20);
  HopConfig cfg;
  cfg.levels = 2;
  ModelBundle bundle;
  bundle.model = train_tree(images, cfg);
  std::vector<ChannelMaps> training;
  for (const auto& img : images)
    training.push_back(infer_tree(bundle.model, img));
  bundle.features = fit_reducer(training, 2, 64);

  const fs::path d1 = g_work / "persist_a";
  const fs::path d2 = g_work / "persist_b";
  save_bundle(d1, bundle);
  const ModelBundle loaded = load_bundle(d1);
  save_bundle(d2, loaded);

  const auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), {});
  };
  if (slurp(d1 / "model.json") != slurp(d2 / "model.json")) return false;
  if (slurp(d1 / "model.bin") != slurp(d2 / "model.bin")) return false;

  const ImageTensor probe_img = random_images(rng, 1, 20)[0];
  const auto a = infer_tree(bundle.model, probe_img);
  const auto b = infer_tree(loaded.model, probe_img);
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!(a[i].first == b[i].first && a[i].second == b[i].second))
      return false;
  detail = "byte-identical round trip; inference bit-exact";
  return true;
}

bool multimodal(std::string& detail) {
  const fs::path dir = g_work / "mm_data";
  SyntheticSpec spec;
  spec.count = 240;
  spec.seed = 13;
  spec.side = 32;
  spec.with_reports = true;
  const DatasetManifest manifest = generate_synthetic(dir, spec);
  const Dataset ds = load_dataset(manifest, 32);

  const std::size_t test_n = spec.count / 5;
  const std::size_t train_n = spec.count - test_n;

  HopConfig cfg;  // stock defaults
  std::vector<ImageTensor> train_images(ds.images.begin(),
                                        ds.images.begin() + train_n);
  const HopModel model = train_tree(train_images, cfg);
  std::vector<ChannelMaps> train_maps;
  for (const auto& img : train_images)
    train_maps.push_back(infer_tree(model, img));
  const FeatureBlock block = fit_reducer(train_maps, 4, 2048);

  const std::size_t vdim = block.feature_len();
  const std::size_t buckets = 64;
  Matrix x_img(spec.count, vdim), x_all(spec.count, vdim + buckets);
  for (std::size_t i = 0; i < spec.count; ++i) {
    const auto maps = infer_tree(model, ds.images[i]);
    const auto flat = reduce_flat(block, maps);
    std::copy(flat.begin(), flat.end(), x_img.row(i));
    std::copy(flat.begin(), flat.end(), x_all.row(i));
    const auto text = hash_text_features(ds.texts[i], buckets);
    std::copy(text.begin(), text.end(), x_all.row(i) + vdim);
  }

  const auto split = [&](const Matrix& x, const LabelMatrix& labels) {
    Matrix xtr(train_n, x.cols()), xte(test_n, x.cols());
    LabelMatrix ytr{labels.classes, Matrix(train_n, labels.classes.size())};
    LabelMatrix yte{labels.classes, Matrix(test_n, labels.classes.size())};
    for (std::size_t i = 0; i < train_n; ++i) {
      std::copy(x.row(i), x.row(i) + x.cols(), xtr.row(i));
      for (std::size_t c = 0; c < labels.classes.size(); ++c)
        ytr.y.at(i, c) = labels.y.at(i, c);
    }
    for (std::size_t i = 0; i < test_n; ++i) {
      std::copy(x.row(train_n + i), x.row(train_n + i) + x.cols(), xte.row(i));
      for (std::size_t c = 0; c < labels.classes.size(); ++c)
        yte.y.at(i, c) = labels.y.at(train_n + i, c);
    }
    return std::make_tuple(xtr, xte, ytr, yte);
  };

  const auto [xi_tr, xi_te, y_tr, y_te] = split(x_img, ds.labels);
  const auto [xa_tr, xa_te, y2_tr, y2_te] = split(x_all, ds.labels);

  const ProbeModel p_img = train_probe_standardized(xi_tr, y_tr, 0.1, 500, 1e-4);
  const ProbeModel p_all = train_probe_standardized(xa_tr, y2_tr, 0.1, 500, 1e-4);
  const double macro_img = evaluate(p_img, xi_te, y_te).macro;
  const double macro_all = evaluate(p_all, xa_te, y2_te).macro;

  std::ostringstream os;
  os << "image-only macro = " << macro_img << ", image+text macro = "
     << macro_all;
  detail = os.str();
  return macro_all >= macro_img + 0.03;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: acceptance <path-to-phop-binary>\n";
    return 2;
  }
  g_cli = argv[1];
  g_work = fs::temp_directory_path() /
           ("phop_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(g_work);
  fs::create_directories(g_work);

  criterion(1, "kernel orthonormality across a 3-level model",
            kernel_orthonormality);
  criterion(2, "energy conservation with E = 0", energy_conservation);
  criterion(3, "PCA oracle equivalence on 50 patch sets",
            pca_oracle_equivalence);
  criterion(4, "reconstruction at full kernel retention", reconstruction);
  criterion(5, "per-level geometry on 206x206 and 32x32", geometry);
  criterion(6, "pruning monotonicity over the threshold grid",
            pruning_monotonicity);
  criterion(7, "rank-based AUC equals exhaustive pair counting", auc_oracle);
  criterion(8, "probe gradients match finite differences", probe_gradients);
  criterion(9, "synthetic end-to-end pipeline, held-out macro AUC >= 0.90",
            synthetic_end_to_end);
  criterion(10, "highest-energy AC channel highlights the blob",
            localization);
  criterion(11, "bundle persistence round trip", persistence);
  criterion(12, "hashed text features lift macro AUC by >= 0.03", multimodal);

  std::cout << (g_failures == 0 ? "ALL CRITERIA PASSED"
                                : std::to_string(g_failures) + " CRITERIA FAILED")
            << std::endl;
  fs::remove_all(g_work);
  return g_failures;
}
