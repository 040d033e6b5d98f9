#pragma once

#include <vector>

#include "phop/types.hpp"

namespace phop {

/// Full eigendecomposition of a symmetric matrix.
/// values are sorted descending; row i of vectors is the unit eigenvector
/// belonging to values[i]. Ties keep their pre-sort order, so the result is
/// deterministic for identical input bits.
struct EigenSym {
  std::vector<double> values;
  Matrix vectors;
};

EigenSym eigen_sym(Matrix a);

}  // namespace phop
