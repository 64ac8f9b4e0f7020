#pragma once

#include <cstddef>
#include <vector>

namespace phmmw {

/// Regularized incomplete beta I_x(a, b), continued-fraction evaluation
/// (relative accuracy about 1e-14).
double incomplete_beta(double x, double a, double b);

/// P(|T| >= |t|) for Student's t with `dof` degrees of freedom.
double student_t_two_tailed(double t, double dof);

struct TTestResult {
    double t = 0.0;
    double p = 1.0;
    std::size_t n = 0;
    double mean_difference = 0.0;
};

/// Paired two-tailed t-test on a - b. All-zero differences give t = 0, p = 1;
/// constant non-zero differences throw ZeroVariance.
TTestResult paired_t_test(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace phmmw
