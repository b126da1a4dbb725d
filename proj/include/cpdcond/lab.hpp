#pragma once

#include "cpdcond/conditioning.hpp"
#include "cpdcond/core.hpp"

#include <cstdint>
#include <functional>
#include <string>

namespace cpdcond {

/// Deterministic 64-bit generator: splitmix64 expands the seed into the
/// state of a xoshiro256++ stream. Standard-normal variates come from
/// Box-Muller on consecutive uniforms, with the second value of each pair
/// cached, so the call order fully determines the stream on every platform.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed);

  std::uint64_t next_u64();
  double uniform();  // in (0, 1]
  double normal();

 private:
  std::uint64_t state_[4];
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Factor matrices with i.i.d. standard-normal entries (uniform (0,1] when
/// uniform01 is set), filled factor by factor in column-major order.
Factors gen_random_factors(const std::vector<int>& dims, int rank, SeededRng& rng,
                           bool uniform01 = false);

/// One record of the error analysis at sequence parameter s.
struct ErrorRow {
  int s = 0;
  double backward = 0.0;       // ||t - t_hat|| / ||t||
  double forward_proxy = 0.0;  // ||p - p_hat|| / ||p||, balanced and aligned
  double orbit_forward = 0.0;  // distance(p, p_hat) / ||p||
  double kappa = 0.0;          // relative condition number at p_hat
  double bound = 0.0;          // kappa * backward
  bool warned = false;
  bool solver_failed = false;
};

/// Rank-2 sequence whose third-factor columns x + 2^{-s} a_i^(3) collapse
/// onto a common vector, driving the condition number up while the tensor
/// stays well approximated.
struct IllConditionedSequence {
  Eigen::MatrixXd a, b, c;  // n1 x 2, n2 x 2, n3 x 2
  Eigen::VectorXd x;        // n3

  static IllConditionedSequence sample(const std::vector<int>& dims, SeededRng& rng);
  Factors at(int s) const;
  int rank() const { return 2; }
};

/// The rank-2 sequence converging to a rank-3 border tensor:
/// 2^{s/5} (a^1 + 2^{-s/5} b^1) x ... - 2^{s/5} a^1 x a^2 x a^3.
struct DeSilvaLimSequence {
  std::vector<Eigen::VectorXd> a, b;  // per mode

  static DeSilvaLimSequence sample(const std::vector<int>& dims, SeededRng& rng);
  Factors at(int s) const;
  DenseTensor limit() const;
  int rank() const { return 2; }
};

/// Paatero's three-term sequence with eps = 2^{-s/16}.
struct PaateroSequence {
  Eigen::MatrixXd ab, bb, cb;  // n1 x 3, n2 x 3, n3 x 3 basis matrices

  static PaateroSequence sample(const std::vector<int>& dims, SeededRng& rng);
  Factors at(int s) const;
  int rank() const { return 3; }
};

/// p + eps * w where w is the right singular vector of the Terracini matrix
/// for sigma_N, sign-normalized so its first nonzero component is positive.
/// Expects norm-balanced p with a finite condition number.
Params worst_perturbation(const Params& p, double eps);

using Decomposer = std::function<Params(const DenseTensor&, int rank)>;

/// For each s: build the tensor, decompose it, norm-balance both parameter
/// vectors, align the computed one to the truth with the distance
/// minimizer's permutation and scaling signs, and record the errors.
/// Solver failures are recorded in the row, not thrown. Rows are computed
/// independently (in parallel when threads > 1) and returned in s order.
std::vector<ErrorRow> run_error_analysis(const std::function<Factors(int)>& sequence, int rank,
                                         const std::vector<int>& s_values,
                                         const Decomposer& decomposer, int threads = 1);

/// log10 of the condition number of 10^{-s} u1 x u2 x u3 + v1 x v2 x v3
/// with orthonormal per-mode pairs, for s = 0..s_max.
std::vector<std::pair<int, double>> odeco_sweep(int s_max, const std::vector<int>& dims,
                                                SeededRng& rng);

/// Named experiment entry point backing the CLI; every experiment fills the
/// shared ErrorRow schema (unused fields are NaN).
std::vector<ErrorRow> run_experiment(const std::string& name, std::uint64_t seed, int s_min,
                                     int s_max, int threads);

}  // namespace cpdcond
