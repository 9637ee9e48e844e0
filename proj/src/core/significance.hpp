#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace qrkit {

/// Regularized incomplete beta function I_x(a, b), continued-fraction form.
double regularized_incomplete_beta(double a, double b, double x);

/// Two-sided p-value of Student's t statistic with `dof` degrees of freedom:
/// P(|T| >= |t|) = I_{dof/(dof+t^2)}(dof/2, 1/2).
double student_t_two_sided_p(double t, double dof);

struct PairedTTest {
  double t = 0.0;
  double p = 1.0;
  double mean_difference = 0.0;
  std::size_t n = 0;
};

/// Two-sided paired t-test on a - b. Requires equal lengths >= 2. When every
/// difference is identical, returns p = 1 if that difference is 0 and throws
/// Error("degenerate paired sample") otherwise.
PairedTTest paired_t_test(std::span<const double> a, std::span<const double> b);

/// Holm step-down procedure. Result[i] is true when hypothesis i is rejected.
std::vector<bool> holm_bonferroni(std::span<const double> p_values, double alpha = 0.05);

}  // namespace qrkit
