#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace cpdcond {

// Thrown when inputs have inconsistent dimensions.
struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Thrown when an input is degenerate for the requested operation,
// e.g. a zero factor vector where a nonzero one is required.
struct DegenerateInputError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Thrown when a request exceeds what this implementation supports.
struct CapabilityError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Thrown when a decomposition algorithm cannot produce a result.
struct DecompositionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Thrown when an iteration fails to converge.
struct ConvergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Dimensions n_1,...,n_d of a tensor space together with a term count r.
struct Shape {
  std::vector<int> dims;
  int rank = 0;

  int order() const { return static_cast<int>(dims.size()); }

  /// Number of tensor entries.
  std::int64_t num_entries() const {
    std::int64_t p = 1;
    for (int n : dims) p *= n;
    return p;
  }

  /// sum_k (n_k - 1), the dimension of the projectivized rank-1 set.
  int sigma() const {
    int s = 0;
    for (int n : dims) s += n - 1;
    return s;
  }

  /// Length of one vectorized representative, sum_k n_k.
  int rep_length() const { return sigma() + order(); }

  /// Expected dimension r(sigma+1) of the rank-<=r set.
  int tangent_dim() const { return rank * (sigma() + 1); }

  /// Total parameter count r(sigma+d).
  int param_count() const { return rank * rep_length(); }

  /// True when r(sigma+1) <= num_entries().
  bool subgeneric() const { return static_cast<std::int64_t>(tangent_dim()) <= num_entries(); }

  void validate() const;

  bool operator==(const Shape& other) const { return dims == other.dims && rank == other.rank; }
};

/// One rank-1 term given by its d factor vectors a^(1),...,a^(d).
using Representative = std::vector<Eigen::VectorXd>;

/// Factor matrices: d matrices, the k-th of size n_k x r, column i being a_i^(k).
using Factors = std::vector<Eigen::MatrixXd>;

/// Vectorized factor matrices: r consecutive blocks, block i = (a_i^(1); ...; a_i^(d)).
struct Params {
  Shape shape;
  Eigen::VectorXd data;
};

/// A dense coordinate tensor, entries in Kronecker order (first index
/// slowest, last index fastest).
struct DenseTensor {
  std::vector<int> dims;
  Eigen::VectorXd values;

  std::int64_t num_entries() const {
    std::int64_t p = 1;
    for (int n : dims) p *= n;
    return p;
  }
};

/// Linear index of (i_1,...,i_d): ((i_1 n_2 + i_2) n_3 + ...) + i_d.
std::int64_t linear_index(const std::vector<int>& dims, const std::vector<int>& idx);

/// Kronecker product of a list of vectors.
Eigen::VectorXd kron_vectors(const std::vector<Eigen::VectorXd>& vs);

/// Stack r representatives into vectorized factor matrices.
Params vecr(const std::vector<Representative>& reps, const Shape& shape);

/// Inverse of vecr; exact (no arithmetic involved).
std::vector<Representative> unvecr(const Params& p);

Params params_from_factors(const Factors& factors);
Factors factors_from_params(const Params& p);
Shape shape_of(const Factors& factors);

/// The Segre map: entry (i_1,...,i_d) = prod_k a^(k)_{i_k}.
DenseTensor rank_one(const Representative& rep);

/// The tensor computation f: sum of rank_one over all r terms, accumulated
/// term by term in index order.
DenseTensor cpdgen(const Params& p);
DenseTensor cpdgen(const Factors& factors);

double frobenius_norm(const DenseTensor& t);

}  // namespace cpdcond
