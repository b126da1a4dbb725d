#include "cpdcond/decomp.hpp"

#include "cpdcond/terracini.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <cmath>
#include <limits>

namespace cpdcond {

int kruskal_rank(const Eigen::MatrixXd& m, double tol) {
  const int r = static_cast<int>(m.cols());
  if (r > 12) throw CapabilityError("kruskal_rank: more than 12 columns");
  const int max_k = static_cast<int>(std::min(m.rows(), m.cols()));

  // A dependent subset stays dependent inside any superset, so scanning k
  // upward and stopping at the first failure is exact.
  std::vector<int> subset;
  for (int k = 1; k <= max_k; ++k) {
    subset.resize(k);
    for (int i = 0; i < k; ++i) subset[i] = i;
    bool all_independent = true;
    while (true) {
      Eigen::MatrixXd cols(m.rows(), k);
      for (int i = 0; i < k; ++i) cols.col(i) = m.col(subset[i]);
      const Eigen::VectorXd sv = singular_values(cols);
      if (!(sv[k - 1] > tol * sv[0])) {
        all_independent = false;
        break;
      }
      // next k-combination
      int i = k - 1;
      while (i >= 0 && subset[i] == r - k + i) --i;
      if (i < 0) break;
      ++subset[i];
      for (int j = i + 1; j < k; ++j) subset[j] = subset[j - 1] + 1;
    }
    if (!all_independent) return k - 1;
  }
  return max_k;
}

KruskalInfo kruskal_check(const Factors& factors, double tol) {
  if (factors.size() != 3)
    throw CapabilityError("kruskal_check: only order-3 tensors are supported");
  const Shape shape = shape_of(factors);
  KruskalInfo info;
  for (const Eigen::MatrixXd& f : factors) info.k_ranks.push_back(kruskal_rank(f, tol));
  info.bound = 0.5 * (info.k_ranks[0] + info.k_ranks[1] + info.k_ranks[2] - 2);
  info.satisfied = shape.rank <= info.bound;
  return info;
}

namespace {

// Mode-k unfolding in Kronecker order: row index i_k, columns over the
// remaining indices with the original relative order.
Eigen::MatrixXd unfold(const DenseTensor& t, int mode) {
  const int n1 = t.dims[0], n2 = t.dims[1], n3 = t.dims[2];
  auto entry = [&](int i, int j, int k) { return t.values[(i * n2 + j) * n3 + k]; };
  if (mode == 0) {
    Eigen::MatrixXd m(n1, n2 * n3);
    for (int i = 0; i < n1; ++i)
      for (int j = 0; j < n2; ++j)
        for (int k = 0; k < n3; ++k) m(i, j * n3 + k) = entry(i, j, k);
    return m;
  }
  if (mode == 1) {
    Eigen::MatrixXd m(n2, n1 * n3);
    for (int i = 0; i < n1; ++i)
      for (int j = 0; j < n2; ++j)
        for (int k = 0; k < n3; ++k) m(j, i * n3 + k) = entry(i, j, k);
    return m;
  }
  Eigen::MatrixXd m(n3, n1 * n2);
  for (int i = 0; i < n1; ++i)
    for (int j = 0; j < n2; ++j)
      for (int k = 0; k < n3; ++k) m(k, i * n2 + j) = entry(i, j, k);
  return m;
}

Eigen::MatrixXd leading_left_vectors(const Eigen::MatrixXd& m, int count, double rank_tol,
                                     const char* what) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU);
  const Eigen::VectorXd& sv = svd.singularValues();
  if (sv[count - 1] <= rank_tol * sv[0])
    throw DecompositionError(std::string("cpd_gevd: multilinear rank deficient in ") + what);
  return svd.matrixU().leftCols(count);
}

struct Pencil {
  Eigen::MatrixXd s1, s2;
};

// Real eigenvectors of the pencil s1 x = lambda s2 x via QZ; fails on
// complex pairs or an ill-conditioned eigenvector basis.
Eigen::MatrixXd pencil_eigenvectors(const Pencil& pencil, double cond_limit) {
  const int r = static_cast<int>(pencil.s1.rows());
  Eigen::GeneralizedEigenSolver<Eigen::MatrixXd> ges;
  ges.compute(pencil.s1, pencil.s2, true);
  if (ges.info() != Eigen::Success)
    throw DecompositionError("cpd_gevd: generalized eigensolver failed");

  const auto& alphas = ges.alphas();
  const auto& vectors = ges.eigenvectors();
  Eigen::MatrixXd x(r, r);
  for (int i = 0; i < r; ++i) {
    if (std::abs(alphas[i].imag()) > 1e-8 * std::abs(alphas[i].real()) &&
        vectors.col(i).imag().norm() > 1e-8 * vectors.col(i).norm())
      throw DecompositionError("cpd_gevd: complex eigenvalues, pencil defective over the reals");
    x.col(i) = vectors.col(i).real();
    const double nrm = x.col(i).norm();
    if (nrm == 0.0) throw DecompositionError("cpd_gevd: zero eigenvector");
    x.col(i) /= nrm;
  }
  const Eigen::VectorXd sv = singular_values(x);
  if (!(sv[r - 1] > 0.0) || sv[0] / sv[r - 1] > cond_limit)
    throw DecompositionError("cpd_gevd: eigenvector basis is near-singular");
  return x;
}

}  // namespace

Params cpd_gevd(const DenseTensor& t, int rank) {
  if (t.dims.size() != 3) throw CapabilityError("cpd_gevd: only order-3 tensors are supported");
  if (t.values.size() != t.num_entries()) throw ShapeError("cpd_gevd: value count mismatch");
  const int n1 = t.dims[0], n2 = t.dims[1], n3 = t.dims[2];
  if (rank < 1) throw ShapeError("cpd_gevd: rank must be positive");
  if (rank > std::min(n1, n2))
    throw CapabilityError("cpd_gevd: rank exceeds min(n_1, n_2)");

  const double eps = std::numeric_limits<double>::epsilon();
  const Eigen::MatrixXd t1 = unfold(t, 0);
  const Eigen::MatrixXd t2 = unfold(t, 1);
  const Eigen::MatrixXd t3 = unfold(t, 2);
  const double rank_tol = 1e4 * eps;

  if (rank == 1) {
    // The best rank-1 decomposition comes straight from the leading
    // singular triplets of the unfoldings.
    Eigen::JacobiSVD<Eigen::MatrixXd> svd1(t1, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd a = svd1.matrixU().col(0);
    // The matching right vector is the combined (b x c) pattern.
    Eigen::MatrixXd m(n2, n3);
    for (int j = 0; j < n2; ++j)
      for (int k = 0; k < n3; ++k) m(j, k) = svd1.singularValues()[0] * svd1.matrixV()(j * n3 + k, 0);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd2(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    Factors f(3);
    f[0] = a;
    f[1] = svd2.matrixU().col(0) * svd2.singularValues()[0];
    f[2] = svd2.matrixV().col(0);
    return params_from_factors(f);
  }

  const Eigen::MatrixXd u1 = leading_left_vectors(t1, rank, rank_tol, "mode 1");
  const Eigen::MatrixXd u2 = leading_left_vectors(t2, rank, rank_tol, "mode 2");
  const Eigen::MatrixXd u3 = leading_left_vectors(t3, 2, rank_tol, "mode 3");

  // Compressed core slices: S_l = U1^T T(:,:,l-mixed) U2 against U3 columns.
  Pencil pencil;
  pencil.s1 = Eigen::MatrixXd::Zero(rank, rank);
  pencil.s2 = Eigen::MatrixXd::Zero(rank, rank);
  for (int k = 0; k < n3; ++k) {
    Eigen::MatrixXd slice(n1, n2);
    for (int i = 0; i < n1; ++i)
      for (int j = 0; j < n2; ++j) slice(i, j) = t.values[(i * n2 + j) * n3 + k];
    const Eigen::MatrixXd compressed = u1.transpose() * slice * u2;
    pencil.s1 += u3(k, 0) * compressed;
    pencil.s2 += u3(k, 1) * compressed;
  }

  constexpr double kCondLimit = 1e12;
  Eigen::MatrixXd x;
  try {
    x = pencil_eigenvectors(pencil, kCondLimit);
  } catch (const DecompositionError&) {
    // One retry with a random orthogonal mix of the two core slices.
    const double angle = 0.7853981633974483;  // pi/4
    Pencil mixed;
    mixed.s1 = std::cos(angle) * pencil.s1 + std::sin(angle) * pencil.s2;
    mixed.s2 = -std::sin(angle) * pencil.s1 + std::cos(angle) * pencil.s2;
    x = pencil_eigenvectors(mixed, kCondLimit);
  }

  // x ~ (U2^T B)^{-T} up to column scaling; S x reproduces U1^T A columns.
  Eigen::MatrixXd a_compressed(rank, rank);
  const Eigen::MatrixXd c1 = pencil.s1 * x;
  const Eigen::MatrixXd c2 = pencil.s2 * x;
  for (int i = 0; i < rank; ++i)
    a_compressed.col(i) = c1.col(i).norm() >= c2.col(i).norm() ? c1.col(i) : c2.col(i);

  Factors f(3);
  f[0] = u1 * a_compressed;
  for (int i = 0; i < rank; ++i) {
    const double nrm = f[0].col(i).norm();
    if (nrm == 0.0) throw DecompositionError("cpd_gevd: collapsed factor column");
    f[0].col(i) /= nrm;
  }

  // Remaining factors from one least-squares solve against the mode-1
  // unfolding, then a rank-1 split of each combined column.
  const Eigen::MatrixXd w =
      f[0].colPivHouseholderQr().solve(t1);  // rank x (n2 n3)
  f[1].resize(n2, rank);
  f[2].resize(n3, rank);
  for (int i = 0; i < rank; ++i) {
    Eigen::MatrixXd m(n2, n3);
    for (int j = 0; j < n2; ++j)
      for (int k = 0; k < n3; ++k) m(j, k) = w(i, j * n3 + k);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    f[1].col(i) = svd.matrixU().col(0) * svd.singularValues()[0];
    f[2].col(i) = svd.matrixV().col(0);
  }
  return params_from_factors(f);
}

}  // namespace cpdcond
