#include "cpdcond/conditioning.hpp"

#include "cpdcond/terracini.hpp"

#include "fixtures.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace cpdcond;

TEST_CASE("norm_balance leaves a balanced decomposition unchanged") {
  const Params p = params_from_factors(fixtures::small_balanced());
  const BalanceResult b = norm_balance(p);
  CHECK((b.params.data - p.data).norm() <= 1e-15 * p.data.norm());
  CHECK(b.gammas[0] == doctest::Approx(std::sqrt(5.0)).epsilon(1e-14));
}

TEST_CASE("norm_balance equalizes factor norms within each term") {
  SeededRng rng(11);
  Representative rep;
  for (int n : {3, 4, 2}) {
    Eigen::VectorXd v = oracle::random_matrix(n, 1, rng);
    rep.push_back(v / v.norm());
  }
  rep[0] *= 2.0;
  const Params p = vecr({rep}, Shape{{3, 4, 2}, 1});
  const BalanceResult b = norm_balance(p);
  const Representative balanced = unvecr(b.params)[0];
  const double expected = std::pow(2.0, 1.0 / 3.0);
  for (const Eigen::VectorXd& v : balanced)
    CHECK(v.norm() == doctest::Approx(expected).epsilon(1e-13));
  CHECK(b.params.data.norm() ==
        doctest::Approx(std::sqrt(3.0) * b.gammas.norm()).epsilon(1e-13));
}

TEST_CASE("norm_balance preserves the tensor") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    SeededRng rng(400 + seed);
    const Params p = oracle::random_params({3, 2, 2}, 2, rng);
    const DenseTensor a = cpdgen(p);
    const DenseTensor b = cpdgen(norm_balance(p).params);
    CHECK((a.values - b.values).norm() <= 1e-13 * a.values.norm());
  }
}

TEST_CASE("norm_balance rejects zero factor vectors") {
  Representative rep = {Eigen::Vector2d(0, 0), Eigen::Vector2d(1, 1)};
  CHECK_THROWS_AS(norm_balance(vecr({rep}, Shape{{2, 2}, 1})), DegenerateInputError);
}

TEST_CASE("condition number of the small fixture") {
  const ConditionReport report = condition_number(fixtures::small_balanced());
  CHECK(report.kappa_rel == doctest::Approx(0.769).epsilon(0.0013));
  CHECK(report.subgeneric);
  CHECK_FALSE(report.accuracy_warning);
}

TEST_CASE("condition number of the truncated positive fixture") {
  const ConditionReport report = condition_number(fixtures::positive_truncated());
  CHECK(std::abs(report.kappa_rel - 18.410308) / 18.410308 <= 1e-4);
}

TEST_CASE("non-subgeneric input yields an infinite tagged report") {
  SeededRng rng(3);
  const Params p = oracle::random_params({2, 2, 2}, 3, rng);  // N = 12 > 8
  const ConditionReport report = condition_number(p);
  CHECK_FALSE(report.subgeneric);
  CHECK_FALSE(report.finite());
  CHECK(std::isinf(report.kappa_rel));
}

TEST_CASE("rank-1 tensors have relative condition 1/sqrt(d)") {
  SeededRng rng(7);
  for (int d : {2, 3, 6}) {
    std::vector<int> dims;
    Representative rep;
    for (int k = 0; k < d; ++k) {
      const int n = 2 + static_cast<int>(rng.next_u64() % 3);
      dims.push_back(n);
      Eigen::VectorXd v = oracle::random_matrix(n, 1, rng);
      rep.push_back((0.3 + 2.0 * rng.uniform()) * v);
    }
    const ConditionReport report = condition_number(vecr({rep}, Shape{dims, 1}));
    CHECK(report.kappa_rel == doctest::Approx(std::sqrt(1.0 / d)).epsilon(1e-12));
  }
}

TEST_CASE("rank1_condition closed form") {
  auto [ka1, kr1] = rank1_condition(3, 1.0);
  CHECK(ka1 == 1.0);
  CHECK(kr1 == doctest::Approx(0.5773502691896258).epsilon(1e-15));

  auto [ka8, kr8] = rank1_condition(3, 8.0);
  CHECK(ka8 == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(kr8 == kr1);

  // cross-check the absolute value against the full computation
  SeededRng rng(9);
  Representative rep;
  for (int n : {3, 2, 2}) {
    Eigen::VectorXd v = oracle::random_matrix(n, 1, rng);
    rep.push_back(v / v.norm());
  }
  rep[0] *= 8.0;
  const ConditionReport report = condition_number(vecr({rep}, Shape{{3, 2, 2}, 1}));
  CHECK(report.kappa_abs == doctest::Approx(0.25).epsilon(1e-10));

  CHECK_THROWS_AS(rank1_condition(3, 0.0), DegenerateInputError);
  CHECK_THROWS_AS(rank1_condition(1, 1.0), CapabilityError);
}

TEST_CASE("rank-1 law sweep over orders") {
  SeededRng rng(13);
  double worst = 0.0;
  for (int d = 2; d <= 10; ++d) {
    std::vector<int> dims(d, 2);
    Representative rep;
    for (int k = 0; k < d; ++k) {
      Eigen::VectorXd v = oracle::random_matrix(2, 1, rng);
      rep.push_back((0.5 + rng.uniform()) * v / v.norm());
    }
    const ConditionReport report = condition_number(vecr({rep}, Shape{dims, 1}));
    worst = std::max(worst,
                     std::abs(1.0 / (report.kappa_rel * report.kappa_rel) - d));
  }
  CHECK(worst <= 1e-11);
}

TEST_CASE("rank1_terracini_singvals closed form and SVD cross-check") {
  const std::vector<double> small = rank1_terracini_singvals(Shape{{2, 2, 2}, 1}, 1.0);
  REQUIRE(small.size() == 6);
  CHECK(small[0] == doctest::Approx(std::sqrt(3.0)).epsilon(1e-15));
  for (int i = 1; i <= 3; ++i) CHECK(small[i] == 1.0);
  CHECK(small[4] == 0.0);
  CHECK(small[5] == 0.0);

  SeededRng rng(21);
  for (double alpha : {1.0, 2.5}) {
    const Shape shape{{3, 3, 2}, 1};
    Representative rep;
    for (int n : shape.dims) {
      Eigen::VectorXd v = oracle::random_matrix(n, 1, rng);
      rep.push_back(std::pow(alpha, 1.0 / 3.0) * v / v.norm());
    }
    const Eigen::VectorXd sv = singular_values(build_terracini(vecr({rep}, shape)).matrix);
    const std::vector<double> expected = rank1_terracini_singvals(shape, alpha);
    REQUIRE(sv.size() == static_cast<Eigen::Index>(expected.size()));
    for (Eigen::Index i = 0; i < sv.size(); ++i)
      CHECK(std::abs(sv[i] - expected[i]) <= 1e-12 * expected[0]);
  }

  const std::vector<double> big = rank1_terracini_singvals(Shape{{2, 2, 2, 2}, 1}, 16.0);
  CHECK(big[0] == doctest::Approx(16.0).epsilon(1e-13));  // 2 * 16^(3/4)
}

TEST_CASE("weak3_condition reduces to rank1_condition for one term") {
  auto [ka, kr] = weak3_condition({2.0}, 3);
  auto [ka1, kr1] = rank1_condition(3, 2.0);
  CHECK(ka == doctest::Approx(ka1).epsilon(1e-15));
  CHECK(kr == doctest::Approx(kr1).epsilon(1e-15));
  CHECK_THROWS_AS(weak3_condition({1.0, 2.0}, 3), DegenerateInputError);
  CHECK_THROWS_AS(weak3_condition({1.0}, 2), CapabilityError);
}

namespace {

Factors odeco_pair(double alpha2, SeededRng& rng) {
  Factors f;
  for (int n : {3, 3, 3}) {
    const Eigen::MatrixXd m = oracle::random_matrix(n, 2, rng);
    const Eigen::HouseholderQR<Eigen::MatrixXd> qr(m);
    f.push_back(qr.householderQ() * Eigen::MatrixXd::Identity(n, 2));
  }
  f[0].col(1) *= alpha2;
  return f;
}

}  // namespace

TEST_CASE("weak3_condition matches the full computation on odeco tensors") {
  SeededRng rng(33);
  for (double alpha2 : {1.0, 0.37, 0.02}) {
    const Factors f = odeco_pair(alpha2, rng);
    const ConditionReport report = condition_number(f);
    auto [ka, kr] = weak3_condition({1.0, alpha2}, 3);
    CHECK(std::abs(report.kappa_rel - kr) <= 1e-8 * kr);
    CHECK(std::abs(report.kappa_abs - ka) <= 1e-8 * ka);
  }
}

TEST_CASE("odeco scaling table matches the closed form") {
  // log10(kappa) for 10^-s u x u' x u'' + v x v' x v'' follows
  // -0.2 + 2s/3 up to the small norm corrections.
  SeededRng rng(35);
  const Factors base = odeco_pair(1.0, rng);
  const double expected[] = {-0.2, 0.4, 1.1, 1.8, 2.4, 3.1, 3.8, 4.4,
                             5.1,  5.8, 6.4, 7.1, 7.8, 8.4, 9.1, 9.8};
  for (int s = 0; s <= 15; ++s) {
    Factors f = base;
    f[0].col(0) *= std::pow(10.0, -s);
    const ConditionReport report = condition_number(f);
    CHECK(std::abs(std::log10(report.kappa_rel) - expected[s]) <= 0.05);
  }
}

TEST_CASE("is_weak3_orthogonal classifies the standard cases") {
  SeededRng rng(37);
  CHECK(is_weak3_orthogonal(params_from_factors(odeco_pair(0.5, rng))));

  const Params dense = oracle::random_params({3, 3, 3}, 2, rng);
  CHECK_FALSE(is_weak3_orthogonal(dense));

  // border-rank style pair (a + b) x (a + b) x (a + b) vs a x a x a shares
  // no orthogonality in any factor
  Eigen::VectorXd a(3), b(3);
  a << 1, 0, 0;
  b << 1, 1, 0;
  const Params pair = params_from_factors({
      (Eigen::MatrixXd(3, 2) << b, a).finished(),
      (Eigen::MatrixXd(3, 2) << b, a).finished(),
      (Eigen::MatrixXd(3, 2) << b, a).finished(),
  });
  CHECK_FALSE(is_weak3_orthogonal(pair));
  CHECK_THROWS_AS(is_weak3_orthogonal(oracle::random_params({2, 2}, 1, rng)), CapabilityError);
}

TEST_CASE("relative condition number is scale invariant") {
  SeededRng rng(41);
  const Factors f = oracle::random_factors({3, 3, 2}, 2, rng);
  const double kappa = condition_number(f).kappa_rel;
  for (int e : {-6, -2, 0, 2, 6}) {
    for (double sign : {1.0, -1.0}) {
      Factors scaled = f;
      scaled[0] *= sign * std::pow(10.0, e);
      CHECK(std::abs(condition_number(scaled).kappa_rel - kappa) <= 1e-10 * kappa);
    }
  }
}

namespace {

Eigen::MatrixXd random_orthogonal(int n, SeededRng& rng) {
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(oracle::random_matrix(n, n, rng));
  return qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
}

}  // namespace

TEST_CASE("condition number is orthogonally invariant") {
  SeededRng rng(43);
  for (int trial = 0; trial < 10; ++trial) {
    const Factors f = oracle::random_factors({3, 3, 2}, 2, rng);
    const ConditionReport base = condition_number(f);
    Factors rotated = f;
    for (std::size_t k = 0; k < f.size(); ++k)
      rotated[k] = random_orthogonal(static_cast<int>(f[k].rows()), rng) * f[k];
    const ConditionReport rot = condition_number(rotated);
    CHECK(std::abs(rot.kappa_rel - base.kappa_rel) <= 1e-10 * base.kappa_rel);
    CHECK(std::abs(rot.kappa_abs - base.kappa_abs) <= 1e-10 * base.kappa_abs);
  }
}

TEST_CASE("relative condition number is bounded below by 1/d") {
  SeededRng rng(47);
  for (int trial = 0; trial < 100; ++trial) {
    const Factors f = oracle::random_factors({3, 3, 2}, 2, rng);
    const ConditionReport report = condition_number(f);
    if (!report.finite()) continue;
    CHECK(report.kappa_rel >= 1.0 / 3.0 - 1e-12);
  }
}

TEST_CASE("condition number is continuous") {
  SeededRng rng(53);
  const Params p = norm_balance(oracle::random_params({3, 3, 2}, 2, rng)).params;
  const double kappa = condition_number(p).kappa_rel;
  for (int dir = 0; dir < 10; ++dir) {
    Eigen::VectorXd step(p.data.size());
    for (Eigen::Index i = 0; i < step.size(); ++i) step[i] = rng.normal();
    step /= step.norm();
    double previous = std::numeric_limits<double>::infinity();
    for (double h : {1e-4, 1e-6, 1e-8}) {
      const Params q{p.shape, p.data + h * step};
      const double diff = std::abs(condition_number(q).kappa_rel - kappa);
      CHECK(diff <= previous + 1e-12);
      previous = diff;
    }
    CHECK(previous <= 1e-5 * kappa);
  }
}

TEST_CASE("absolute condition depends on the representative") {
  // unbalanced representative of the same tensor: kappa_abs differs
  const Params p = params_from_factors(fixtures::small_balanced());
  GroupElement g = GroupElement::identity(2, 3);
  g.thetas(0, 0) = 100.0;
  g.thetas(1, 1) = 0.01;
  const Params q = apply_group(g, p);

  const ConditionReport balanced = condition_number(p);
  const ConditionReport at_q = condition_number_at(q);
  CHECK(std::abs(at_q.kappa_abs - balanced.kappa_abs) > 0.1 * balanced.kappa_abs);
  // while the canonical norm-balanced value is representative-independent
  const ConditionReport rebalanced = condition_number(q);
  CHECK(rebalanced.kappa_rel == doctest::Approx(balanced.kappa_rel).epsilon(1e-10));
}
