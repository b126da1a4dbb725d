#pragma once

#include "cpdcond/core.hpp"

namespace cpdcond {

struct KruskalInfo {
  std::vector<int> k_ranks;
  double bound = 0.0;      // (k_1 + k_2 + k_3 - 2) / 2
  bool satisfied = false;  // r <= bound
};

/// Largest k such that every k-column subset has full numerical rank
/// (smallest singular value of the subset > tol * largest). Enumerates
/// subsets; refuses more than 12 columns.
int kruskal_rank(const Eigen::MatrixXd& m, double tol = 1e-10);

/// Kruskal's sufficient identifiability criterion for order-3 tensors.
KruskalInfo kruskal_check(const Factors& factors, double tol = 1e-10);

/// Direct rank-r decomposition of an order-3 tensor via the generalized
/// eigenvalue decomposition of a compressed r x r x 2 slice pencil.
/// Requires r <= min(n_1, n_2) and multilinear rank >= (r, r, 2) numerically;
/// throws DecompositionError when the pencil is defective or near-degenerate.
Params cpd_gevd(const DenseTensor& t, int rank);

}  // namespace cpdcond
