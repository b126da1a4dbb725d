#pragma once

// Shared example decompositions used across the test suites.

#include "cpdcond/core.hpp"

namespace fixtures {

// Norm-balanced rank-2 decomposition in R^{3x3x2} with condition number
// close to 0.769 and a 4-dimensional Terracini kernel.
inline cpdcond::Factors small_balanced() {
  Eigen::MatrixXd a(3, 2), b(3, 2), c(2, 2);
  a << 2, 0, -1, 1, 0, 2;
  b << -1, -2, 2, 0, 0, 1;
  c << 1, -2, 2, 1;
  return {a, b, c};
}

// Random positive rank-2 decomposition in R^{3x3x2}, entries truncated to
// five significant digits; condition number close to 18.410308.
inline cpdcond::Factors positive_truncated() {
  Eigen::MatrixXd a(3, 2), b(3, 2), c(2, 2);
  a << 5.1518e-01, 8.8821e-01, 4.9802e-01, 3.6941e-01, 5.0806e-01, 1.1117e-01;
  b << 1.9032e-01, 7.5082e-01, 5.4218e-01, 1.6653e-01, 6.6436e-01, 5.8845e-01;
  c << 7.2302e-01, 6.9447e-01, 4.9879e-01, 6.7487e-01;
  return {a, b, c};
}

}  // namespace fixtures
