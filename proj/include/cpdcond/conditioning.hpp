#pragma once

#include "cpdcond/core.hpp"

#include <utility>

namespace cpdcond {

/// Output of the norm-balanced condition number computation.
///
/// kappa_abs is 1/sigma_N; kappa_rel multiplies that by the ratio of the
/// tensor norm to the parameter norm. Both are +inf when the term count is
/// not subgeneric (subgeneric == false) or sigma_N underflows to zero.
struct ConditionReport {
  Eigen::VectorXd sigma;       // all singular values of the Terracini matrix, descending
  double sigma_n = 0.0;        // the N-th one, N = r(Sigma+1)
  double kappa_abs = 0.0;
  double kappa_rel = 0.0;
  double tensor_norm = 0.0;
  double param_norm = 0.0;
  bool accuracy_warning = false;  // sigma_N <= 100 * eps * sigma_1
  bool subgeneric = true;

  bool finite() const;
};

struct BalanceResult {
  Params params;
  Eigen::VectorXd gammas;  // per-term factor norm gamma_i = prod_k ||a_i^(k)||^(1/d)
};

/// Rescale each term so all its d factor vectors share the norm gamma_i.
/// The represented tensor is unchanged; the balanced parameter norm is
/// sqrt(d * sum_i gamma_i^2).
BalanceResult norm_balance(const Params& p);

/// The norm-balanced relative condition number: balance, build the Terracini
/// matrix, take all singular values, return kappa_abs = 1/sigma_N and
/// kappa_rel = kappa_abs * ||tensor|| / ||params||.
ConditionReport condition_number(const Params& p);
ConditionReport condition_number(const Factors& factors);

/// Condition number at the given representative, without balancing. Generally
/// differs from the canonical norm-balanced value.
ConditionReport condition_number_at(const Params& p);

/// Closed form for a rank-1 tensor of order d with norm alpha:
/// (kappa_abs, kappa_rel) = (alpha^(1/d - 1), sqrt(1/d)).
std::pair<double, double> rank1_condition(int d, double alpha);

/// Singular values of the norm-balanced rank-1 Terracini matrix:
/// sqrt(d) alpha^(1-1/d) once, alpha^(1-1/d) with multiplicity Sigma,
/// 0 with multiplicity d-1. Descending.
std::vector<double> rank1_terracini_singvals(const Shape& shape, double alpha);

/// Closed form for a weak 3-orthogonal tensor with term norms
/// alpha_1 >= ... >= alpha_r > 0.
std::pair<double, double> weak3_condition(const std::vector<double>& alphas, int d);

/// True iff every pair of terms is orthogonal in at least three factors.
bool is_weak3_orthogonal(const Params& p, double tol = 1e-12);

}  // namespace cpdcond
