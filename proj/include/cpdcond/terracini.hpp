#pragma once

#include "cpdcond/core.hpp"

namespace cpdcond {

/// The Jacobian of cpdgen at p: a num_entries x param_count matrix with one
/// column block per term, the block of term i holding, for each factor k,
/// the columns a_i^(1) x ... x e_j x ... x a_i^(d), j = 1..n_k.
struct TerraciniMatrix {
  Shape shape;
  Eigen::MatrixXd matrix;
};

/// Analytic kernel basis of the Terracini matrix: param_count x r(d-1),
/// column (i, j) carrying +a_i^(1) in the factor-1 slot of term i and
/// -a_i^(j) in its factor-j slot, j = 2..d.
struct KernelBasis {
  Shape shape;
  Eigen::MatrixXd matrix;
};

TerraciniMatrix build_terracini(const Params& p);

/// Requires every factor vector to be nonzero, otherwise the basis degenerates.
KernelBasis kernel_basis(const Params& p);

/// All singular values of a dense matrix, descending.
Eigen::VectorXd singular_values(const Eigen::MatrixXd& m);

/// Full SVD right singular vectors (columns of V), matching singular_values.
Eigen::MatrixXd right_singular_vectors(const Eigen::MatrixXd& m);

/// Count of singular values above tol; the default tolerance is
/// max(rows, cols) * eps * sv(0).
int numerical_rank(const Eigen::VectorXd& sv, Eigen::Index rows, Eigen::Index cols,
                   double tol = -1.0);

}  // namespace cpdcond
