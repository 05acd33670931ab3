#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace tact {

/// Linear-interpolation percentile (the numpy "linear" convention) over an
/// unsorted sample; p in [0, 100].
double percentile(std::vector<double> values, double p);

/// Regularized incomplete beta I_x(a, b), double precision via the
/// Lentz continued fraction.
double reg_incomplete_beta(double a, double b, double x);

/// Two-sided Student-t survival probability for dof degrees of freedom.
double student_t_two_sided_p(double t, std::int64_t dof);

struct TTestResult {
  double t = 0.0;
  double p = 1.0;
  std::int64_t dof = 0;
  bool degenerate = false;  // zero-variance differences
};

/// Classical paired two-sided t-test on a−b with dof = n−1. Zero-variance
/// differences yield the degenerate flag with p pinned to exactly 0 or 1
/// instead of a crash.
TTestResult paired_t_test(std::span<const double> a, std::span<const double> b);

}  // namespace tact
