#include "cpdcond/conditioning.hpp"

#include "cpdcond/terracini.hpp"

#include <cmath>
#include <limits>

namespace cpdcond {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

bool ConditionReport::finite() const { return subgeneric && std::isfinite(kappa_rel); }

BalanceResult norm_balance(const Params& p) {
  const Shape& shape = p.shape;
  const int d = shape.order();
  std::vector<Representative> reps = unvecr(p);

  BalanceResult out;
  out.gammas.resize(shape.rank);
  for (int i = 0; i < shape.rank; ++i) {
    double gamma = 1.0;
    for (int k = 0; k < d; ++k) {
      const double eta = reps[i][k].norm();
      if (eta == 0.0) throw DegenerateInputError("norm_balance: zero factor vector");
      gamma *= std::pow(eta, 1.0 / d);
      reps[i][k] /= eta;
    }
    for (int k = 0; k < d; ++k) reps[i][k] *= gamma;
    out.gammas[i] = gamma;
  }
  out.params = vecr(reps, shape);
  return out;
}

namespace {

ConditionReport finish_report(const Params& p, double param_norm) {
  ConditionReport report;
  const TerraciniMatrix t = build_terracini(p);
  report.sigma = singular_values(t.matrix);

  const int n = p.shape.tangent_dim();
  report.sigma_n = report.sigma[n - 1];
  report.kappa_abs = report.sigma_n > 0.0 ? 1.0 / report.sigma_n : kInf;
  report.tensor_norm = frobenius_norm(cpdgen(p));
  report.param_norm = param_norm;
  report.kappa_rel = report.kappa_abs * report.tensor_norm / report.param_norm;
  report.accuracy_warning =
      report.sigma[0] * 100.0 * std::numeric_limits<double>::epsilon() > report.sigma_n;
  report.subgeneric = true;
  return report;
}

}  // namespace

ConditionReport condition_number(const Params& p) {
  p.shape.validate();
  const BalanceResult balanced = norm_balance(p);
  if (!p.shape.subgeneric()) {
    ConditionReport report;
    report.subgeneric = false;
    report.kappa_abs = kInf;
    report.kappa_rel = kInf;
    report.sigma_n = 0.0;
    report.tensor_norm = frobenius_norm(cpdgen(balanced.params));
    report.param_norm = std::sqrt(p.shape.order()) * balanced.gammas.norm();
    return report;
  }
  const double param_norm = std::sqrt(p.shape.order()) * balanced.gammas.norm();
  return finish_report(balanced.params, param_norm);
}

ConditionReport condition_number(const Factors& factors) {
  return condition_number(params_from_factors(factors));
}

ConditionReport condition_number_at(const Params& p) {
  p.shape.validate();
  if (!p.shape.subgeneric()) {
    ConditionReport report;
    report.subgeneric = false;
    report.kappa_abs = kInf;
    report.kappa_rel = kInf;
    report.tensor_norm = frobenius_norm(cpdgen(p));
    report.param_norm = p.data.norm();
    return report;
  }
  return finish_report(p, p.data.norm());
}

std::pair<double, double> rank1_condition(int d, double alpha) {
  if (d < 2) throw CapabilityError("rank1_condition: order must be at least 2");
  if (!(alpha > 0.0)) throw DegenerateInputError("rank1_condition: alpha must be positive");
  return {std::pow(alpha, 1.0 / d - 1.0), std::sqrt(1.0 / d)};
}

std::vector<double> rank1_terracini_singvals(const Shape& shape, double alpha) {
  shape.validate();
  if (shape.rank != 1) throw CapabilityError("rank1_terracini_singvals: rank must be 1");
  if (!(alpha > 0.0))
    throw DegenerateInputError("rank1_terracini_singvals: alpha must be positive");
  const int d = shape.order();
  const double base = std::pow(alpha, 1.0 - 1.0 / d);
  std::vector<double> sv;
  sv.push_back(std::sqrt(static_cast<double>(d)) * base);
  sv.insert(sv.end(), shape.sigma(), base);
  sv.insert(sv.end(), d - 1, 0.0);
  return sv;
}

std::pair<double, double> weak3_condition(const std::vector<double>& alphas, int d) {
  if (d < 3) throw CapabilityError("weak3_condition: order must be at least 3");
  if (alphas.empty()) throw DegenerateInputError("weak3_condition: empty alpha list");
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    if (!(alphas[i] > 0.0)) throw DegenerateInputError("weak3_condition: alpha must be positive");
    if (i > 0 && alphas[i] > alphas[i - 1])
      throw DegenerateInputError("weak3_condition: alphas must be descending");
  }
  const double kappa_abs = std::pow(alphas.back(), 1.0 / d - 1.0);
  double tensor_sq = 0.0, param_sq = 0.0;
  for (double a : alphas) {
    tensor_sq += a * a;
    param_sq += d * std::pow(a, 2.0 / d);
  }
  return {kappa_abs, kappa_abs * std::sqrt(tensor_sq) / std::sqrt(param_sq)};
}

bool is_weak3_orthogonal(const Params& p, double tol) {
  p.shape.validate();
  if (p.shape.order() < 3) throw CapabilityError("is_weak3_orthogonal: order must be at least 3");
  const std::vector<Representative> reps = unvecr(p);
  for (std::size_t i = 0; i < reps.size(); ++i) {
    for (std::size_t j = i + 1; j < reps.size(); ++j) {
      int orthogonal = 0;
      for (int k = 0; k < p.shape.order(); ++k) {
        const double dot = std::abs(reps[i][k].dot(reps[j][k]));
        if (dot <= tol * reps[i][k].norm() * reps[j][k].norm()) ++orthogonal;
      }
      if (orthogonal < 3) return false;
    }
  }
  return true;
}

}  // namespace cpdcond
