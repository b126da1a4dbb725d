#include "cpdcond/terracini.hpp"

#include <Eigen/SVD>

#include <limits>

namespace cpdcond {

TerraciniMatrix build_terracini(const Params& p) {
  const Shape& shape = p.shape;
  const std::vector<Representative> reps = unvecr(p);
  const int d = shape.order();
  const std::int64_t pi = shape.num_entries();

  TerraciniMatrix t;
  t.shape = shape;
  t.matrix.resize(pi, shape.param_count());

  Eigen::Index col = 0;
  for (const Representative& rep : reps) {
    for (int k = 0; k < d; ++k) {
      // prefix = a^(1) x ... x a^(k-1), suffix = a^(k+1) x ... x a^(d)
      Eigen::VectorXd prefix = Eigen::VectorXd::Ones(1);
      for (int j = 0; j < k; ++j) prefix = kron_vectors({prefix, rep[j]});
      Eigen::VectorXd suffix = Eigen::VectorXd::Ones(1);
      for (int j = k + 1; j < d; ++j) suffix = kron_vectors({suffix, rep[j]});

      const Eigen::Index nl = prefix.size(), nk = shape.dims[k], nr = suffix.size();
      for (Eigen::Index j = 0; j < nk; ++j, ++col) {
        auto column = t.matrix.col(col);
        column.setZero();
        for (Eigen::Index a = 0; a < nl; ++a)
          column.segment((a * nk + j) * nr, nr) = prefix[a] * suffix;
      }
    }
  }
  return t;
}

KernelBasis kernel_basis(const Params& p) {
  const Shape& shape = p.shape;
  const std::vector<Representative> reps = unvecr(p);
  const int d = shape.order();
  const int rl = shape.rep_length();

  for (const Representative& rep : reps) {
    for (const Eigen::VectorXd& v : rep) {
      if (v.norm() == 0.0) throw DegenerateInputError("kernel_basis: zero factor vector");
    }
  }

  KernelBasis k;
  k.shape = shape;
  k.matrix = Eigen::MatrixXd::Zero(shape.param_count(), shape.rank * (d - 1));

  Eigen::Index col = 0;
  for (int i = 0; i < shape.rank; ++i) {
    const Eigen::Index term_off = static_cast<Eigen::Index>(i) * rl;
    Eigen::Index factor_off = shape.dims[0];
    for (int j = 1; j < d; ++j, ++col) {
      k.matrix.col(col).segment(term_off, shape.dims[0]) = reps[i][0];
      k.matrix.col(col).segment(term_off + factor_off, shape.dims[j]) = -reps[i][j];
      factor_off += shape.dims[j];
    }
  }
  return k;
}

// One-sided Jacobi rather than BDC: Eigen 3.4's BDCSVD mis-deflates the
// tightly clustered spectra these matrices produce (e.g. a balanced rank-1
// Terracini matrix has one singular value with multiplicity Sigma).
Eigen::VectorXd singular_values(const Eigen::MatrixXd& m) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  return svd.singularValues();
}

Eigen::MatrixXd right_singular_vectors(const Eigen::MatrixXd& m) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeFullV);
  return svd.matrixV();
}

int numerical_rank(const Eigen::VectorXd& sv, Eigen::Index rows, Eigen::Index cols, double tol) {
  if (sv.size() == 0) return 0;
  if (tol < 0.0) {
    tol = static_cast<double>(std::max(rows, cols)) *
          std::numeric_limits<double>::epsilon() * sv[0];
  }
  int rank = 0;
  while (rank < sv.size() && sv[rank] > tol) ++rank;
  return rank;
}

}  // namespace cpdcond
