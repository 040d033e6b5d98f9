#include "phop/probe.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "phop/errors.hpp"
#include "phop/simd/kernels.hpp"

namespace phop {

namespace {

inline double sigmoid(double z) {
  return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z))
                  : std::exp(z) / (1.0 + std::exp(z));
}

// log(1 + e^z), stable for large |z|.
inline double softplus(double z) {
  return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

void check_dims(const Matrix& x, std::size_t dim, const char* who) {
  if (x.cols() != dim)
    throw DimensionError(std::string(who) + ": feature dim " +
                         std::to_string(x.cols()) + " != " +
                         std::to_string(dim));
}

}  // namespace

double logistic_loss(const Matrix& x, const double* y01, const double* w,
                     double b, double l2) {
  const std::size_t m = x.rows();
  const std::size_t d = x.cols();
  const auto& k = simd::active();
  double loss = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double z = k.dot(x.row(i), w, d) + b;
    loss += softplus(z) - y01[i] * z;  // == -y log(p) - (1-y) log(1-p)
  }
  loss /= double(m);
  return loss + 0.5 * l2 * k.sum_sq(w, d);
}

void logistic_grad(const Matrix& x, const double* y01, const double* w,
                   double b, double l2, double* grad_w, double* grad_b) {
  const std::size_t m = x.rows();
  const std::size_t d = x.cols();
  const auto& k = simd::active();
  std::fill(grad_w, grad_w + d, 0.0);
  double gb = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double err = sigmoid(k.dot(x.row(i), w, d) + b) - y01[i];
    k.axpy(err, x.row(i), grad_w, d);
    gb += err;
  }
  k.scale(1.0 / double(m), grad_w, d);
  k.axpy(l2, w, grad_w, d);
  *grad_b = gb / double(m);
}

ProbeModel train_probe(const Matrix& features, const LabelMatrix& labels,
                       double lr, std::size_t epochs, double l2,
                       ProbeTrainReport* report) {
  if (labels.y.rows() != features.rows())
    throw DimensionError("train_probe: " + std::to_string(features.rows()) +
                         " feature rows vs " + std::to_string(labels.y.rows()) +
                         " label rows");
  if (labels.y.cols() != labels.classes.size())
    throw SchemaError("train_probe: label matrix does not match class names");
  if (lr <= 0.0) throw DataError("train_probe: lr must be > 0");

  const std::size_t m = features.rows();
  const std::size_t d = features.cols();
  const std::size_t n_classes = labels.classes.size();

  ProbeModel probe;
  probe.classes = labels.classes;
  probe.dim = d;
  probe.weights = Matrix(n_classes, d);
  probe.biases.assign(n_classes, 0.0);
  if (report) {
    report->skipped.clear();
    report->loss_history.assign(n_classes, {});
  }

  std::vector<double> y(m), grad(d);
  for (std::size_t cls = 0; cls < n_classes; ++cls) {
    std::size_t positives = 0;
    for (std::size_t i = 0; i < m; ++i) {
      y[i] = labels.y.at(i, cls);
      if (y[i] != 0.0) ++positives;
    }
    if (positives == 0 || positives == m) {
      if (report) report->skipped.push_back(labels.classes[cls]);
      continue;  // weights stay zero
    }
    double* w = probe.weights.row(cls);
    double b = 0.0;
    std::vector<double>* history = report ? &report->loss_history[cls] : nullptr;
    if (history) history->push_back(logistic_loss(features, y.data(), w, b, l2));
    for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
      double gb = 0.0;
      logistic_grad(features, y.data(), w, b, l2, grad.data(), &gb);
      simd::active().axpy(-lr, grad.data(), w, d);
      b -= lr * gb;
      if (history)
        history->push_back(logistic_loss(features, y.data(), w, b, l2));
    }
    probe.biases[cls] = b;
  }
  return probe;
}

ProbeModel train_probe_standardized(const Matrix& features,
                                    const LabelMatrix& labels, double lr,
                                    std::size_t epochs, double l2,
                                    ProbeTrainReport* report) {
  const std::size_t m = features.rows();
  const std::size_t d = features.cols();
  if (m == 0) throw DataError("train_probe: no examples");

  std::vector<double> mean(d, 0.0), sdev(d, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    simd::active().axpy(1.0, features.row(i), mean.data(), d);
  simd::active().scale(1.0 / double(m), mean.data(), d);
  for (std::size_t i = 0; i < m; ++i) {
    const double* row = features.row(i);
    for (std::size_t j = 0; j < d; ++j) {
      const double dev = row[j] - mean[j];
      sdev[j] += dev * dev;
    }
  }
  for (std::size_t j = 0; j < d; ++j) {
    sdev[j] = std::sqrt(sdev[j] / double(m));
    if (sdev[j] < 1e-12) sdev[j] = 1.0;  // constant column
  }

  Matrix z(m, d);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < d; ++j)
      z.at(i, j) = (features.at(i, j) - mean[j]) / sdev[j];

  ProbeModel probe = train_probe(z, labels, lr, epochs, l2, report);
  // Fold the z-scoring into the affine parameters: w'x' + b' = w/s (x - mu) + b.
  for (std::size_t cls = 0; cls < probe.classes.size(); ++cls) {
    double* w = probe.weights.row(cls);
    double shift = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      w[j] /= sdev[j];
      shift += w[j] * mean[j];
    }
    probe.biases[cls] -= shift;
  }
  return probe;
}

Matrix predict(const ProbeModel& probe, const Matrix& features) {
  check_dims(features, probe.dim, "predict");
  const auto& k = simd::active();
  Matrix scores(features.rows(), probe.classes.size());
  for (std::size_t i = 0; i < features.rows(); ++i) {
    for (std::size_t cls = 0; cls < probe.classes.size(); ++cls) {
      const double z =
          k.dot(features.row(i), probe.weights.row(cls), probe.dim) +
          probe.biases[cls];
      scores.at(i, cls) = sigmoid(z);
    }
  }
  return scores;
}

double auc(std::span<const double> scores, std::span<const double> labels01) {
  const std::size_t m = scores.size();
  if (labels01.size() != m)
    throw DimensionError("auc: scores and labels differ in length");
  std::size_t pos = 0;
  for (double y : labels01) pos += y != 0.0 ? 1 : 0;
  const std::size_t neg = m - pos;
  if (pos == 0 || neg == 0)
    throw DataError("auc: undefined without both a positive and a negative");

  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] < scores[b];
  });

  // Average ranks over ties, then Mann-Whitney through the positive rank sum.
  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < m) {
    std::size_t j = i;
    while (j + 1 < m && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * double(i + 1 + j + 1);
    for (std::size_t t = i; t <= j; ++t)
      if (labels01[order[t]] != 0.0) rank_sum_pos += avg_rank;
    i = j + 1;
  }
  return (rank_sum_pos - 0.5 * double(pos) * double(pos + 1)) /
         (double(pos) * double(neg));
}

std::vector<RocPoint> roc_points(std::span<const double> scores,
                                 std::span<const double> labels01) {
  const std::size_t m = scores.size();
  if (labels01.size() != m)
    throw DimensionError("roc_points: scores and labels differ in length");
  std::size_t pos = 0;
  for (double y : labels01) pos += y != 0.0 ? 1 : 0;
  const std::size_t neg = m - pos;
  if (pos == 0 || neg == 0)
    throw DataError("roc_points: undefined without both classes");

  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] > scores[b];
  });

  std::vector<RocPoint> pts{{0.0, 0.0}};
  std::size_t tp = 0, fp = 0, i = 0;
  while (i < m) {
    std::size_t j = i;
    while (j + 1 < m && scores[order[j + 1]] == scores[order[i]]) ++j;
    for (std::size_t t = i; t <= j; ++t) {
      if (labels01[order[t]] != 0.0)
        ++tp;
      else
        ++fp;
    }
    pts.push_back({double(fp) / double(neg), double(tp) / double(pos)});
    i = j + 1;
  }
  return pts;
}

EvalResult evaluate(const ProbeModel& probe, const Matrix& features,
                    const LabelMatrix& labels) {
  if (labels.y.rows() != features.rows())
    throw DimensionError("evaluate: feature/label row mismatch");
  if (labels.classes != probe.classes)
    throw SchemaError("evaluate: label classes do not match the probe");
  const Matrix scores = predict(probe, features);

  EvalResult result;
  result.classes = probe.classes;
  result.auc_per_class.assign(probe.classes.size(),
                              std::numeric_limits<double>::quiet_NaN());
  double sum = 0.0;
  std::size_t defined = 0;
  std::vector<double> s(features.rows()), y(features.rows());
  for (std::size_t cls = 0; cls < probe.classes.size(); ++cls) {
    for (std::size_t i = 0; i < features.rows(); ++i) {
      s[i] = scores.at(i, cls);
      y[i] = labels.y.at(i, cls);
    }
    try {
      result.auc_per_class[cls] = auc(s, y);
      sum += result.auc_per_class[cls];
      ++defined;
    } catch (const DataError&) {
      result.skipped.push_back(probe.classes[cls]);
    }
  }
  if (defined == 0) throw DataError("evaluate: no class has both labels");
  result.macro = sum / double(defined);
  return result;
}

}  // namespace phop
