#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "phop/types.hpp"

namespace phop {

/// Binary indicators, examples x classes.
struct LabelMatrix {
  std::vector<std::string> classes;
  Matrix y;
};

/// Independent per-class affine scorers squashed through a sigmoid.
struct ProbeModel {
  std::vector<std::string> classes;
  std::size_t dim = 0;
  Matrix weights;               // classes x dim
  std::vector<double> biases;   // per class
};

struct ProbeTrainReport {
  std::vector<std::string> skipped;  // classes with no positives (or negatives)
  std::vector<std::vector<double>> loss_history;  // per class, epochs+1 entries
};

/// Mean binary cross-entropy of one class plus (l2/2)*|w|^2.
double logistic_loss(const Matrix& x, const double* y01, const double* w,
                     double b, double l2);
/// Analytic gradient of logistic_loss; grad_w has x.cols() entries.
void logistic_grad(const Matrix& x, const double* y01, const double* w,
                   double b, double l2, double* grad_w, double* grad_b);

/// Full-batch gradient descent from zero initialization, one independent
/// logistic regression per class.
ProbeModel train_probe(const Matrix& features, const LabelMatrix& labels,
                       double lr, std::size_t epochs, double l2,
                       ProbeTrainReport* report = nullptr);

/// train_probe on z-scored features, with the scaling folded back into the
/// returned weights so predict() consumes raw features.
ProbeModel train_probe_standardized(const Matrix& features,
                                    const LabelMatrix& labels, double lr,
                                    std::size_t epochs, double l2,
                                    ProbeTrainReport* report = nullptr);

/// Per-class sigmoid scores in (0,1), examples x classes.
Matrix predict(const ProbeModel& probe, const Matrix& features);

/// Rank-based (Mann-Whitney) AUC; ties count half. Throws DataError unless
/// both a positive and a negative are present.
double auc(std::span<const double> scores, std::span<const double> labels01);

struct RocPoint {
  double fpr, tpr;
};
/// ROC staircase from (0,0) to (1,1), one step per distinct score.
std::vector<RocPoint> roc_points(std::span<const double> scores,
                                 std::span<const double> labels01);

struct EvalResult {
  std::vector<std::string> classes;
  std::vector<double> auc_per_class;  // NaN where undefined
  std::vector<std::string> skipped;
  double macro = 0.0;                 // mean over defined classes
};

EvalResult evaluate(const ProbeModel& probe, const Matrix& features,
                    const LabelMatrix& labels);

}  // namespace phop
