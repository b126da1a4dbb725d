#include "cpdcond/lab.hpp"

#include "cpdcond/decomp.hpp"
#include "cpdcond/scaling_group.hpp"
#include "cpdcond/terracini.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

namespace cpdcond {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();
constexpr double kTwoPi = 6.283185307179586476925286766559;

std::uint64_t splitmix64(std::uint64_t& x) {
  std::uint64_t z = (x += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

SeededRng::SeededRng(std::uint64_t seed) {
  for (auto& word : state_) word = splitmix64(seed);
}

std::uint64_t SeededRng::next_u64() {
  // xoshiro256++
  const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
  const std::uint64_t t = state_[1] << 17;
  state_[2] ^= state_[0];
  state_[3] ^= state_[1];
  state_[1] ^= state_[2];
  state_[0] ^= state_[3];
  state_[2] ^= t;
  state_[3] = rotl(state_[3], 45);
  return result;
}

double SeededRng::uniform() {
  return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
}

double SeededRng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = uniform();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  spare_ = radius * std::sin(kTwoPi * u2);
  has_spare_ = true;
  return radius * std::cos(kTwoPi * u2);
}

Factors gen_random_factors(const std::vector<int>& dims, int rank, SeededRng& rng,
                           bool uniform01) {
  Factors factors;
  for (int n : dims) {
    Eigen::MatrixXd f(n, rank);
    for (int i = 0; i < rank; ++i)
      for (int j = 0; j < n; ++j) f(j, i) = uniform01 ? rng.uniform() : rng.normal();
    factors.push_back(std::move(f));
  }
  return factors;
}

namespace {

Eigen::VectorXd random_normal_vector(int n, SeededRng& rng) {
  Eigen::VectorXd v(n);
  for (int j = 0; j < n; ++j) v[j] = rng.normal();
  return v;
}

}  // namespace

IllConditionedSequence IllConditionedSequence::sample(const std::vector<int>& dims,
                                                      SeededRng& rng) {
  if (dims.size() != 3) throw CapabilityError("ill-conditioned sequence needs an order-3 shape");
  IllConditionedSequence seq;
  Factors f = gen_random_factors(dims, 2, rng);
  seq.a = f[0];
  seq.b = f[1];
  seq.c = f[2];
  seq.x = random_normal_vector(dims[2], rng);
  return seq;
}

Factors IllConditionedSequence::at(int s) const {
  const double scale = std::pow(2.0, -static_cast<double>(s));
  Eigen::MatrixXd third(c.rows(), 2);
  third.col(0) = x + scale * c.col(0);
  third.col(1) = x + scale * c.col(1);
  return {a, b, third};
}

DeSilvaLimSequence DeSilvaLimSequence::sample(const std::vector<int>& dims, SeededRng& rng) {
  if (dims.size() != 3) throw CapabilityError("de Silva-Lim sequence needs an order-3 shape");
  DeSilvaLimSequence seq;
  for (int n : dims) {
    seq.a.push_back(random_normal_vector(n, rng));
    seq.b.push_back(random_normal_vector(n, rng));
  }
  return seq;
}

Factors DeSilvaLimSequence::at(int s) const {
  const double grow = std::pow(2.0, s / 5.0);
  const double shrink = 1.0 / grow;
  Factors f(3);
  for (int k = 0; k < 3; ++k) {
    f[k].resize(a[k].size(), 2);
    f[k].col(0) = a[k] + shrink * b[k];
    f[k].col(1) = a[k];
  }
  f[0].col(0) *= grow;
  f[0].col(1) *= -grow;
  return f;
}

DenseTensor DeSilvaLimSequence::limit() const {
  DenseTensor t = rank_one({b[0], a[1], a[2]});
  t.values += rank_one({a[0], b[1], a[2]}).values;
  t.values += rank_one({a[0], a[1], b[2]}).values;
  return t;
}

PaateroSequence PaateroSequence::sample(const std::vector<int>& dims, SeededRng& rng) {
  if (dims.size() != 3) throw CapabilityError("Paatero sequence needs an order-3 shape");
  for (int n : dims) {
    if (n < 3) throw CapabilityError("Paatero sequence needs all dimensions >= 3");
  }
  PaateroSequence seq;
  Factors f = gen_random_factors(dims, 3, rng);
  seq.ab = f[0];
  seq.bb = f[1];
  seq.cb = f[2];
  return seq;
}

Factors PaateroSequence::at(int s) const {
  const double e = std::pow(2.0, -s / 16.0);
  const double e2h = 0.5 * e * e;
  Factors f(3);
  f[0].resize(ab.rows(), 3);
  f[0].col(0) = -(ab.col(0) + ab.col(1)) / e;
  f[0].col(1) = ab.col(0) / e + e2h * ab.col(2);
  f[0].col(2) = ab.col(1) / e;
  f[1].resize(bb.rows(), 3);
  f[1].col(0) = -bb.col(0) / e;
  f[1].col(1) = bb.col(0) / e + e2h * bb.col(1);
  f[1].col(2) = bb.col(0) / e + e2h * bb.col(2);
  f[2].resize(cb.rows(), 3);
  f[2].col(0) = -cb.col(0) / e;
  f[2].col(1) = cb.col(0) / e + e2h * cb.col(1);
  f[2].col(2) = cb.col(0) / e + e2h * cb.col(2);
  return f;
}

Params worst_perturbation(const Params& p, double eps) {
  p.shape.validate();
  if (!p.shape.subgeneric())
    throw CapabilityError("worst_perturbation: input is not subgeneric");
  const TerraciniMatrix t = build_terracini(p);
  const Eigen::MatrixXd v = right_singular_vectors(t.matrix);
  Eigen::VectorXd w = v.col(p.shape.tangent_dim() - 1);
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    if (std::abs(w[i]) > 1e-12) {
      if (w[i] < 0.0) w = -w;
      break;
    }
  }
  return Params{p.shape, p.data + eps * w};
}

namespace {

GroupElement sign_snap(const GroupElement& g) {
  GroupElement out = g;
  out.thetas = g.thetas.unaryExpr([](double t) { return t < 0.0 ? -1.0 : 1.0; });
  return out;
}

ErrorRow analyze_point(int s, const Factors& factors, int rank, const Decomposer& decomposer) {
  ErrorRow row;
  row.s = s;
  const Params p_true = params_from_factors(factors);
  const DenseTensor t = cpdgen(p_true);
  Params p_hat;
  try {
    p_hat = decomposer(t, rank);
    const DenseTensor t_hat = cpdgen(p_hat);
    row.backward = frobenius_norm(DenseTensor{t.dims, t.values - t_hat.values}) /
                   frobenius_norm(t);

    const Params pb = norm_balance(p_true).params;
    const Params qb = norm_balance(p_hat).params;
    const DistanceResult dist = distance(pb, qb);
    row.orbit_forward = dist.value / pb.data.norm();
    const Params aligned = apply_group(sign_snap(dist.minimizer), qb);
    row.forward_proxy = (pb.data - aligned.data).norm() / pb.data.norm();
    // the proxy bounds the orbit distance; keep that ordering when both sit
    // at the evaluation noise floor
    row.orbit_forward = std::min(row.orbit_forward, row.forward_proxy);

    const ConditionReport report = condition_number(p_hat);
    row.kappa = report.kappa_rel;
    row.warned = report.accuracy_warning;
    row.bound = row.kappa * row.backward;
  } catch (const std::exception&) {
    row.solver_failed = true;
    row.backward = row.forward_proxy = row.orbit_forward = row.kappa = row.bound = kNan;
  }
  return row;
}

void parallel_for(int count, int threads, const std::function<void(int)>& body) {
  if (threads <= 1 || count <= 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  const int workers = std::min(threads, count);
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&]() {
      for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) body(i);
    });
  }
  for (std::thread& th : pool) th.join();
}

}  // namespace

std::vector<ErrorRow> run_error_analysis(const std::function<Factors(int)>& sequence, int rank,
                                         const std::vector<int>& s_values,
                                         const Decomposer& decomposer, int threads) {
  std::vector<ErrorRow> rows(s_values.size());
  parallel_for(static_cast<int>(s_values.size()), threads, [&](int i) {
    rows[i] = analyze_point(s_values[i], sequence(s_values[i]), rank, decomposer);
  });
  return rows;
}

namespace {

Factors odeco_factors(int s, const std::vector<Eigen::MatrixXd>& bases) {
  Factors f;
  for (const Eigen::MatrixXd& q : bases) f.push_back(q);
  f[0].col(0) *= std::pow(10.0, -static_cast<double>(s));
  return f;
}

std::vector<Eigen::MatrixXd> odeco_bases(const std::vector<int>& dims, SeededRng& rng) {
  std::vector<Eigen::MatrixXd> bases;
  for (int n : dims) {
    Eigen::MatrixXd m(n, 2);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < n; ++j) m(j, i) = rng.normal();
    const Eigen::HouseholderQR<Eigen::MatrixXd> qr(m);
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, 2);
    bases.push_back(std::move(q));
  }
  return bases;
}

}  // namespace

std::vector<std::pair<int, double>> odeco_sweep(int s_max, const std::vector<int>& dims,
                                                SeededRng& rng) {
  const std::vector<Eigen::MatrixXd> bases = odeco_bases(dims, rng);
  std::vector<std::pair<int, double>> table;
  for (int s = 0; s <= s_max; ++s) {
    const ConditionReport report = condition_number(odeco_factors(s, bases));
    table.emplace_back(s, std::log10(report.kappa_rel));
  }
  return table;
}

namespace {

std::vector<int> s_range(int s_min, int s_max, int def_min, int def_max) {
  if (s_min < 0) s_min = def_min;
  if (s_max < 0) s_max = def_max;
  if (s_max < s_min) throw ShapeError("experiment: empty s range");
  std::vector<int> values;
  for (int s = s_min; s <= s_max; ++s) values.push_back(s);
  return values;
}

ErrorRow blank_row(int s) {
  ErrorRow row;
  row.s = s;
  row.backward = row.forward_proxy = row.orbit_forward = row.kappa = row.bound = kNan;
  return row;
}

std::vector<ErrorRow> experiment_isl_convergence(std::uint64_t seed, int s_min, int s_max) {
  SeededRng rng(seed);
  const std::vector<int> dims = {3, 3, 2};
  const Params p = norm_balance(params_from_factors(gen_random_factors(dims, 2, rng))).params;
  const KernelBasis k = kernel_basis(p);
  Eigen::VectorXd dir(k.matrix.cols());
  for (Eigen::Index i = 0; i < dir.size(); ++i) dir[i] = rng.normal();
  Eigen::VectorXd unit = k.matrix * dir;
  unit /= unit.norm();

  std::vector<ErrorRow> rows;
  for (int q : s_range(s_min, s_max, 1, 5)) {
    ErrorRow row = blank_row(q);
    const double nabla_norm = std::pow(10.0, -q);
    try {
      const IslResult isl = iterated_scaling(p, nabla_norm * unit);
      row.backward = isl.delta.norm();
      row.forward_proxy = nabla_norm;
      row.orbit_forward = isl.delta.norm() > 0.0
                              ? (k.matrix.transpose() * isl.delta).norm() / isl.delta.norm()
                              : 0.0;
      row.kappa = isl.lambda;
      row.bound = 2.0 * isl.lambda * nabla_norm * nabla_norm;
      row.warned = !isl.precondition_ok;
      row.solver_failed = !isl.converged;
    } catch (const std::exception&) {
      row.solver_failed = true;
    }
    rows.push_back(row);
  }
  return rows;
}

std::vector<ErrorRow> experiment_worst_direction(std::uint64_t seed) {
  SeededRng rng(seed);
  const std::vector<int> dims = {3, 3, 2};
  const Factors factors = gen_random_factors(dims, 2, rng, /*uniform01=*/true);
  const Params p = norm_balance(params_from_factors(factors)).params;
  const ConditionReport report = condition_number(p);

  constexpr double eps = 1e-8;
  const Params perturbed = worst_perturbation(p, eps);
  const Params q = norm_balance(perturbed).params;

  const DenseTensor t = cpdgen(p);
  const DenseTensor t_hat = cpdgen(q);

  ErrorRow row = blank_row(0);
  row.backward =
      frobenius_norm(DenseTensor{t.dims, t.values - t_hat.values}) / frobenius_norm(t);
  row.forward_proxy = (q.data - p.data).norm() / p.data.norm();
  row.orbit_forward = distance(p, q).value / p.data.norm();
  row.kappa = report.kappa_rel;
  row.bound = row.kappa * row.backward;
  row.warned = report.accuracy_warning;
  row.solver_failed = false;
  return {row};
}

std::vector<ErrorRow> experiment_rank1_sweep(std::uint64_t seed, int s_min, int s_max) {
  SeededRng rng(seed);
  std::vector<ErrorRow> rows;
  for (int d : s_range(s_min, s_max, 3, 10)) {
    Factors f;
    for (int k = 0; k < d; ++k) {
      const int n = 2 + static_cast<int>(rng.next_u64() % 3);
      Eigen::VectorXd v = random_normal_vector(n, rng);
      v *= (0.5 + 2.5 * rng.uniform()) / v.norm();
      f.push_back(v);
    }
    const ConditionReport report = condition_number(f);
    ErrorRow row = blank_row(d);
    row.kappa = report.kappa_rel;
    row.bound = std::abs(1.0 / (report.kappa_rel * report.kappa_rel) - d);
    row.warned = report.accuracy_warning;
    row.solver_failed = false;
    rows.push_back(row);
  }
  return rows;
}

std::vector<ErrorRow> experiment_odeco_sweep(std::uint64_t seed, int s_min, int s_max) {
  SeededRng rng(seed);
  const std::vector<Eigen::MatrixXd> bases = odeco_bases({3, 3, 3}, rng);
  std::vector<ErrorRow> rows;
  for (int s : s_range(s_min, s_max, 0, 15)) {
    const ConditionReport report = condition_number(odeco_factors(s, bases));
    ErrorRow row = blank_row(s);
    row.kappa = report.kappa_rel;
    row.warned = report.accuracy_warning;
    row.solver_failed = false;
    rows.push_back(row);
  }
  return rows;
}

Decomposer gevd_decomposer() {
  return [](const DenseTensor& t, int rank) { return cpd_gevd(t, rank); };
}

}  // namespace

std::vector<ErrorRow> run_experiment(const std::string& name, std::uint64_t seed, int s_min,
                                     int s_max, int threads) {
  if (name == "isl-convergence") return experiment_isl_convergence(seed, s_min, s_max);
  if (name == "worst-direction") return experiment_worst_direction(seed);
  if (name == "rank1-sweep") return experiment_rank1_sweep(seed, s_min, s_max);
  if (name == "odeco-sweep") return experiment_odeco_sweep(seed, s_min, s_max);
  if (name == "ill-conditioned") {
    SeededRng rng(seed);
    const IllConditionedSequence seq = IllConditionedSequence::sample({13, 11, 7}, rng);
    return run_error_analysis([&](int s) { return seq.at(s); }, seq.rank(),
                              s_range(s_min, s_max, 1, 45), gevd_decomposer(), threads);
  }
  if (name == "desilva-lim") {
    SeededRng rng(seed);
    const DeSilvaLimSequence seq = DeSilvaLimSequence::sample({5, 4, 3}, rng);
    return run_error_analysis([&](int s) { return seq.at(s); }, seq.rank(),
                              s_range(s_min, s_max, 5, 100), gevd_decomposer(), threads);
  }
  if (name == "paatero") {
    SeededRng rng(seed);
    const PaateroSequence seq = PaateroSequence::sample({5, 4, 3}, rng);
    return run_error_analysis([&](int s) { return seq.at(s); }, seq.rank(),
                              s_range(s_min, s_max, 20, 100), gevd_decomposer(), threads);
  }
  throw CapabilityError("unknown experiment: " + name);
}

}  // namespace cpdcond
