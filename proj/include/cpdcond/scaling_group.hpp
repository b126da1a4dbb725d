#pragma once

#include "cpdcond/core.hpp"

namespace cpdcond {

/// Element of the indeterminacy group: a permutation of the r terms plus
/// per-term scalings theta_{k,i} for factors k = 2..d; the factor-1 scaling
/// is implied as (theta_{2,i} * ... * theta_{d,i})^(-1) so each rank-1 term
/// is unchanged.
struct GroupElement {
  std::vector<int> perm;    // output term i takes input term perm[i]
  Eigen::MatrixXd thetas;   // r x (d-1); (i, k-2) is theta_{k,i}

  static GroupElement identity(int rank, int order);
};

/// apply(compose(g, h), p) == apply(g, apply(h, p)).
GroupElement compose(const GroupElement& g, const GroupElement& h);
GroupElement inverse(const GroupElement& g);

Params apply_group(const GroupElement& g, const Params& p);

struct PairDistanceResult {
  double value = 0.0;
  Eigen::VectorXd thetas;  // optimal theta_2..theta_d
};

/// Local minimum of || vec(b) - D vec(c) || over the per-term scalings D,
/// by cyclic coordinate descent with 1-D Newton steps from the projection
/// initializer theta_k = <c^k, a^k> / ||c^k||^2.
PairDistanceResult pair_distance(const Representative& b, const Representative& c);

struct DistanceResult {
  double value = 0.0;
  GroupElement minimizer;         // apply_group(minimizer, q) is closest to p
  Eigen::MatrixXd per_pair_costs; // r x r pairwise minimal distances
};

/// Orbit distance d(p, q) = min over the group of || p - T q ||: pairwise
/// costs via pair_distance, optimal term assignment via the Hungarian
/// algorithm on the squared costs.
DistanceResult distance(const Params& p, const Params& q);

/// Solve the linear assignment problem for a square cost matrix; returns the
/// column assigned to each row, minimizing the total cost.
std::vector<int> solve_assignment(const Eigen::MatrixXd& cost);

struct IslResult {
  Params p_dot;                    // alternative representative of p
  Eigen::VectorXd delta;           // co-kernel remainder: p + nabla = p_dot + delta
  Eigen::MatrixXd gammas;          // r x (d-1) accumulated scalings for factors 2..d
  std::vector<double> nabla_norms; // ||nabla^(k)|| trace, starting at the input norm
  bool converged = false;
  bool precondition_ok = false;    // ||nabla|| <= 1/(2 lambda)
  double lambda = 0.0;
};

/// Non-convergence carries the norm trace for diagnosis.
struct IslConvergenceError : ConvergenceError {
  IslConvergenceError(const std::string& msg, std::vector<double> trace_)
      : ConvergenceError(msg), trace(std::move(trace_)) {}
  std::vector<double> trace;
};

/// The constant lambda = 2^(d+3) (d-1)^(3/2) max_i(chi_i^2 ||a_i^(1)||),
/// chi_i = 1 / min_{k>=2} ||a_i^(k)||.
double isl_lambda(const Params& p);

/// Iterated scaling: replace a kernel-direction perturbation nabla by a
/// rescaled representative p_dot of the same tensor plus a remainder delta
/// orthogonal to the kernel, with ||delta|| <= 2 lambda ||nabla||^2 for
/// admissible nabla. Stops when ||nabla^(k)|| <= 10 * eps (absolute).
IslResult iterated_scaling(const Params& p, const Eigen::VectorXd& nabla, int max_iter = 200);

/// Diagonal of the matrix relating Terracini matrices of the original and
/// rescaled representatives: T(p_dot) = T(p) * diag(result).
Eigen::VectorXd isl_rescale_diagonal(const Params& p, const Eigen::MatrixXd& gammas);

}  // namespace cpdcond
