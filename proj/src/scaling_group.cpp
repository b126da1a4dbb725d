#include "cpdcond/scaling_group.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>

namespace cpdcond {

GroupElement GroupElement::identity(int rank, int order) {
  GroupElement g;
  g.perm.resize(rank);
  for (int i = 0; i < rank; ++i) g.perm[i] = i;
  g.thetas = Eigen::MatrixXd::Ones(rank, order - 1);
  return g;
}

GroupElement compose(const GroupElement& g, const GroupElement& h) {
  if (g.perm.size() != h.perm.size() || g.thetas.cols() != h.thetas.cols())
    throw ShapeError("compose: group elements act on different spaces");
  const int r = static_cast<int>(g.perm.size());
  GroupElement out;
  out.perm.resize(r);
  out.thetas.resize(r, g.thetas.cols());
  for (int i = 0; i < r; ++i) {
    out.perm[i] = h.perm[g.perm[i]];
    out.thetas.row(i) = g.thetas.row(i).cwiseProduct(h.thetas.row(g.perm[i]));
  }
  return out;
}

GroupElement inverse(const GroupElement& g) {
  const int r = static_cast<int>(g.perm.size());
  GroupElement out;
  out.perm.resize(r);
  out.thetas.resize(r, g.thetas.cols());
  for (int i = 0; i < r; ++i) out.perm[g.perm[i]] = i;
  for (int i = 0; i < r; ++i)
    out.thetas.row(i) = g.thetas.row(out.perm[i]).cwiseInverse();
  return out;
}

Params apply_group(const GroupElement& g, const Params& p) {
  const Shape& shape = p.shape;
  const int d = shape.order();
  if (static_cast<int>(g.perm.size()) != shape.rank || g.thetas.cols() != d - 1)
    throw ShapeError("apply_group: element does not match shape");
  if ((g.thetas.array() == 0.0).any())
    throw DegenerateInputError("apply_group: zero scaling");

  const std::vector<Representative> reps = unvecr(p);
  std::vector<Representative> out(shape.rank);
  for (int i = 0; i < shape.rank; ++i) {
    const Representative& src = reps[g.perm[i]];
    out[i].resize(d);
    out[i][0] = src[0] / g.thetas.row(i).prod();
    for (int k = 1; k < d; ++k) out[i][k] = g.thetas(i, k - 1) * src[k];
  }
  return vecr(out, shape);
}

namespace {

// The per-pair objective
//   g(theta_2..theta_d) = ||a^1 - (prod theta)^{-1} c^1||^2
//                       + sum_{k>=2} ||a^k - theta_k c^k||^2.
// Derivatives only need the norms and inner products, but the value is
// evaluated on the vectors themselves: the expanded scalar form cancels
// catastrophically near a zero residual.
struct PairObjective {
  const Representative* b = nullptr;
  const Representative* c = nullptr;
  Eigen::VectorXd a2, c2, s;  // ||a^k||^2, ||c^k||^2, <c^k, a^k> for k = 1..d

  double eval(const Eigen::VectorXd& theta) const {
    const double t = theta.prod();
    double g = ((*b)[0] - (*c)[0] / t).squaredNorm();
    for (Eigen::Index k = 0; k < theta.size(); ++k)
      g += ((*b)[k + 1] - theta[k] * (*c)[k + 1]).squaredNorm();
    return g;
  }
};

// One cyclic sweep of backtracked 1-D Newton steps; returns the largest
// accepted |step|. Descent is monotone, so the final value never exceeds
// the value at the starting point.
double newton_sweep(const PairObjective& obj, Eigen::VectorXd& theta, double& value) {
  double max_step = 0.0;
  for (Eigen::Index k = 0; k < theta.size(); ++k) {
    double prod_rest = 1.0;
    for (Eigen::Index j = 0; j < theta.size(); ++j)
      if (j != k) prod_rest *= theta[j];
    const double t = theta[k];
    const double pinv = 1.0 / prod_rest;
    const double g1 = 2.0 * obj.c2[k + 1] * t - 2.0 * obj.s[k + 1] +
                      2.0 * obj.s[0] * pinv / (t * t) -
                      2.0 * obj.c2[0] * pinv * pinv / (t * t * t);
    const double g2 = 2.0 * obj.c2[k + 1] + 6.0 * obj.c2[0] * pinv * pinv / (t * t * t * t) -
                      4.0 * obj.s[0] * pinv / (t * t * t);
    double step;
    if (std::isfinite(g2) && g2 > 0.0) {
      step = -g1 / g2;
    } else {
      step = -0.1 * g1 / (2.0 * obj.c2[k + 1]);  // damped gradient fallback
    }
    if (!std::isfinite(step)) continue;
    double accepted = 0.0;
    for (int halvings = 0; halvings < 40; ++halvings) {
      const double next = t + step;
      // stay off the singular hyperplane theta_k = 0
      if (next != 0.0 && (next > 0.0) == (t > 0.0)) {
        theta[k] = next;
        const double candidate = obj.eval(theta);
        if (candidate <= value) {
          value = candidate;
          accepted = step;
          break;
        }
        theta[k] = t;
      }
      step *= 0.5;
    }
    max_step = std::max(max_step, std::abs(accepted));
  }
  return max_step;
}

double minimize_pair(const PairObjective& obj, Eigen::VectorXd& theta) {
  constexpr int kMaxSweeps = 500;
  double value = obj.eval(theta);
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    if (newton_sweep(obj, theta, value) < 1e-12) break;
  }
  return std::max(value, 0.0);
}

// Deterministic restart multipliers, log-uniform in [1/4, 4] with random sign.
struct RestartRng {
  std::uint64_t state = 0x9e3779b97f4a7c15ull;
  double next() {
    state ^= state << 13;
    state ^= state >> 7;
    state ^= state << 17;
    return static_cast<double>(state >> 11) * 0x1.0p-53;
  }
};

}  // namespace

PairDistanceResult pair_distance(const Representative& b, const Representative& c) {
  if (b.size() != c.size() || b.size() < 2)
    throw ShapeError("pair_distance: representatives disagree on order");
  const int d = static_cast<int>(b.size());

  PairObjective obj;
  obj.b = &b;
  obj.c = &c;
  obj.a2.resize(d);
  obj.c2.resize(d);
  obj.s.resize(d);
  double b_norm_sq = 0.0;
  for (int k = 0; k < d; ++k) {
    if (b[k].size() != c[k].size()) throw ShapeError("pair_distance: dimension mismatch");
    obj.a2[k] = b[k].squaredNorm();
    obj.c2[k] = c[k].squaredNorm();
    obj.s[k] = c[k].dot(b[k]);
    if (obj.c2[k] == 0.0) throw DegenerateInputError("pair_distance: zero factor vector in c");
    b_norm_sq += obj.a2[k];
  }

  Eigen::VectorXd theta0(d - 1);
  for (int k = 1; k < d; ++k) {
    const double proj = obj.s[k] / obj.c2[k];
    if (std::abs(obj.s[k]) > 1e-12 * std::sqrt(obj.a2[k] * obj.c2[k]))
      theta0[k - 1] = proj;
    else
      theta0[k - 1] = std::sqrt(obj.a2[k] / obj.c2[k]);
    if (theta0[k - 1] == 0.0) theta0[k - 1] = 1.0;
  }

  Eigen::VectorXd best_theta = theta0;
  double best_value = minimize_pair(obj, best_theta);

  // The identity scaling is always feasible; descending from it keeps the
  // result below the plain Euclidean distance.
  Eigen::VectorXd theta_id = Eigen::VectorXd::Ones(d - 1);
  const double value_id = minimize_pair(obj, theta_id);
  if (value_id < best_value) {
    best_value = value_id;
    best_theta = theta_id;
  }

  // Hedge against local minima when the initial guess is poor.
  if (obj.eval(theta0) > 0.25 * b_norm_sq) {
    RestartRng rng;
    for (int attempt = 0; attempt < 8; ++attempt) {
      Eigen::VectorXd theta = theta0;
      for (Eigen::Index k = 0; k < theta.size(); ++k) {
        theta[k] *= std::pow(4.0, 2.0 * rng.next() - 1.0);
        if (rng.next() < 0.25) theta[k] = -theta[k];
      }
      const double value = minimize_pair(obj, theta);
      if (value < best_value) {
        best_value = value;
        best_theta = theta;
      }
    }
  }

  PairDistanceResult out;
  out.value = std::sqrt(best_value);
  out.thetas = best_theta;
  return out;
}

std::vector<int> solve_assignment(const Eigen::MatrixXd& cost) {
  // Shortest augmenting path formulation of the Hungarian algorithm, O(n^3).
  const int n = static_cast<int>(cost.rows());
  if (cost.cols() != n) throw ShapeError("solve_assignment: cost matrix must be square");
  constexpr double kInf = std::numeric_limits<double>::infinity();

  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> match(n + 1, n);  // match[col] = row, n = unmatched
  for (int row = 0; row < n; ++row) {
    std::vector<double> min_slack(n + 1, kInf);
    std::vector<int> prev(n + 1, n);
    std::vector<char> used(n + 1, 0);
    int col = n;
    match[n] = row;
    do {
      used[col] = 1;
      const int cur_row = match[col];
      double delta = kInf;
      int next_col = n;
      for (int j = 0; j < n; ++j) {
        if (used[j]) continue;
        const double slack = cost(cur_row, j) - u[cur_row] - v[j];
        if (slack < min_slack[j]) {
          min_slack[j] = slack;
          prev[j] = col;
        }
        if (min_slack[j] < delta) {
          delta = min_slack[j];
          next_col = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          min_slack[j] -= delta;
        }
      }
      col = next_col;
    } while (match[col] != n);
    while (col != n) {
      const int pc = prev[col];
      match[col] = match[pc];
      col = pc;
    }
  }

  std::vector<int> assignment(n, -1);
  for (int j = 0; j < n; ++j)
    if (match[j] != n) assignment[match[j]] = j;
  return assignment;
}

DistanceResult distance(const Params& p, const Params& q) {
  if (!(p.shape == q.shape)) throw ShapeError("distance: shapes differ");
  const int r = p.shape.rank;
  const int d = p.shape.order();
  const std::vector<Representative> rp = unvecr(p);
  const std::vector<Representative> rq = unvecr(q);

  DistanceResult out;
  out.per_pair_costs.resize(r, r);
  std::vector<std::vector<Eigen::VectorXd>> thetas(r, std::vector<Eigen::VectorXd>(r));
  for (int i = 0; i < r; ++i) {
    for (int j = 0; j < r; ++j) {
      const PairDistanceResult pd = pair_distance(rp[i], rq[j]);
      out.per_pair_costs(i, j) = pd.value;
      thetas[i][j] = pd.thetas;
    }
  }

  const std::vector<int> assignment =
      solve_assignment(out.per_pair_costs.cwiseProduct(out.per_pair_costs));

  out.minimizer.perm = assignment;
  out.minimizer.thetas.resize(r, d - 1);
  double total_sq = 0.0;
  for (int i = 0; i < r; ++i) {
    const int j = assignment[i];
    out.minimizer.thetas.row(i) = thetas[i][j];
    total_sq += out.per_pair_costs(i, j) * out.per_pair_costs(i, j);
  }
  out.value = std::sqrt(total_sq);
  return out;
}

namespace {

// Per-term kernel block apparatus: K_i^H K_i = diag(alpha_2^2..alpha_d^2)
// + alpha_1^2 * 1 1^T, inverted by Sherman-Morrison.
struct KernelBlocks {
  Shape shape;
  std::vector<Representative> reps;          // of the base point p
  std::vector<Eigen::VectorXd> inv_diag;     // alpha_k^{-2}, k = 2..d, per term
  std::vector<double> sm_coeff;              // alpha_1^2 / (1 + alpha_1^2 sum alpha_k^{-2})

  explicit KernelBlocks(const Params& p) : shape(p.shape), reps(unvecr(p)) {
    const int d = shape.order();
    for (const Representative& rep : reps) {
      Eigen::VectorXd h(d - 1);
      for (int k = 1; k < d; ++k) {
        const double a2 = rep[k].squaredNorm();
        if (a2 == 0.0) throw DegenerateInputError("iterated_scaling: zero factor vector");
        h[k - 1] = 1.0 / a2;
      }
      const double a1_sq = rep[0].squaredNorm();
      if (a1_sq == 0.0) throw DegenerateInputError("iterated_scaling: zero factor vector");
      inv_diag.push_back(h);
      sm_coeff.push_back(a1_sq / (1.0 + a1_sq * h.sum()));
    }
  }

  // coordinates of the kernel component of x (per term): v = (K^H K)^{-1} K^H x
  Eigen::MatrixXd solve(const Eigen::VectorXd& x) const {
    const int d = shape.order();
    const int rl = shape.rep_length();
    Eigen::MatrixXd v(shape.rank, d - 1);
    for (int i = 0; i < shape.rank; ++i) {
      const Eigen::Index off = static_cast<Eigen::Index>(i) * rl;
      Eigen::VectorXd khx(d - 1);
      Eigen::Index foff = shape.dims[0];
      const double a1_dot = reps[i][0].dot(x.segment(off, shape.dims[0]));
      for (int k = 1; k < d; ++k) {
        khx[k - 1] = a1_dot - reps[i][k].dot(x.segment(off + foff, shape.dims[k]));
        foff += shape.dims[k];
      }
      const Eigen::VectorXd diag_part = inv_diag[i].cwiseProduct(khx);
      v.row(i) = diag_part - sm_coeff[i] * inv_diag[i] * inv_diag[i].dot(khx);
    }
    return v;
  }

  // K * v for per-term coordinates v
  Eigen::VectorXd expand(const Eigen::MatrixXd& v) const {
    const int d = shape.order();
    const int rl = shape.rep_length();
    Eigen::VectorXd x = Eigen::VectorXd::Zero(shape.param_count());
    for (int i = 0; i < shape.rank; ++i) {
      const Eigen::Index off = static_cast<Eigen::Index>(i) * rl;
      x.segment(off, shape.dims[0]) = v.row(i).sum() * reps[i][0];
      Eigen::Index foff = shape.dims[0];
      for (int k = 1; k < d; ++k) {
        x.segment(off + foff, shape.dims[k]) = -v(i, k - 1) * reps[i][k];
        foff += shape.dims[k];
      }
    }
    return x;
  }

  Eigen::VectorXd project(const Eigen::VectorXd& x) const { return expand(solve(x)); }
};

}  // namespace

double isl_lambda(const Params& p) {
  const std::vector<Representative> reps = unvecr(p);
  const int d = p.shape.order();
  double worst = 0.0;
  for (const Representative& rep : reps) {
    double min_tail = std::numeric_limits<double>::infinity();
    for (int k = 1; k < d; ++k) min_tail = std::min(min_tail, rep[k].norm());
    if (min_tail == 0.0) throw DegenerateInputError("isl_lambda: zero factor vector");
    worst = std::max(worst, rep[0].norm() / (min_tail * min_tail));
  }
  return std::pow(2.0, d + 3) * std::pow(d - 1.0, 1.5) * worst;
}

IslResult iterated_scaling(const Params& p, const Eigen::VectorXd& nabla, int max_iter) {
  p.shape.validate();
  if (nabla.size() != p.shape.param_count())
    throw ShapeError("iterated_scaling: perturbation length does not match shape");

  const int d = p.shape.order();
  const int r = p.shape.rank;
  const int rl = p.shape.rep_length();
  const KernelBlocks kernel(p);

  IslResult out;
  out.lambda = isl_lambda(p);
  out.precondition_ok = nabla.norm() <= 0.5 / out.lambda;
  out.gammas = Eigen::MatrixXd::Ones(r, d - 1);

  const Eigen::VectorXd p0 = p.data;
  Eigen::VectorXd pk = p.data;
  Eigen::VectorXd delta = Eigen::VectorXd::Zero(p.data.size());
  Eigen::VectorXd grad = nabla;
  double grad_norm = grad.norm();
  out.nabla_norms.push_back(grad_norm);

  const double floor = 10.0 * std::numeric_limits<double>::epsilon();
  int iter = 0;
  while (grad_norm > floor) {
    if (iter++ >= max_iter)
      throw IslConvergenceError("iterated_scaling: no convergence after max_iter iterations",
                                out.nabla_norms);
    const Eigen::MatrixXd v = kernel.solve(grad);
    out.gammas -= v;
    const Eigen::VectorXd z = pk + kernel.expand(v);
    for (int i = 0; i < r; ++i) {
      const Eigen::Index off = static_cast<Eigen::Index>(i) * rl;
      pk.segment(off, p.shape.dims[0]) =
          p0.segment(off, p.shape.dims[0]) / out.gammas.row(i).prod();
      Eigen::Index foff = p.shape.dims[0];
      for (int k = 1; k < d; ++k) {
        pk.segment(off + foff, p.shape.dims[k]) =
            out.gammas(i, k - 1) * p0.segment(off + foff, p.shape.dims[k]);
        foff += p.shape.dims[k];
      }
    }
    const Eigen::VectorXd resid = z - pk;
    grad = kernel.project(resid);
    delta += resid - grad;
    grad_norm = grad.norm();
    out.nabla_norms.push_back(grad_norm);
  }

  out.p_dot = Params{p.shape, pk};
  out.delta = delta;
  out.converged = true;
  return out;
}

Eigen::VectorXd isl_rescale_diagonal(const Params& p, const Eigen::MatrixXd& gammas) {
  const Shape& shape = p.shape;
  const int d = shape.order();
  if (gammas.rows() != shape.rank || gammas.cols() != d - 1)
    throw ShapeError("isl_rescale_diagonal: gammas do not match shape");
  if ((gammas.array() == 0.0).any())
    throw DegenerateInputError("isl_rescale_diagonal: zero scaling");

  Eigen::VectorXd diag(shape.param_count());
  Eigen::Index off = 0;
  for (int i = 0; i < shape.rank; ++i) {
    diag.segment(off, shape.dims[0]).setConstant(gammas.row(i).prod());
    off += shape.dims[0];
    for (int k = 1; k < d; ++k) {
      diag.segment(off, shape.dims[k]).setConstant(1.0 / gammas(i, k - 1));
      off += shape.dims[k];
    }
  }
  return diag;
}

}  // namespace cpdcond
