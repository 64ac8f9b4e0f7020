#include "phmmw/stats.hpp"

#include <cmath>
#include <limits>

#include "phmmw/error.hpp"

namespace phmmw {

namespace {

// Modified Lentz evaluation of the incomplete beta continued fraction.
double beta_fraction(double x, double a, double b) {
    constexpr int kMaxIter = 1000;
    constexpr double kEps = 1e-16;
    constexpr double kTiny = 1e-300;
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < kEps) return h;
    }
    fail("NonConvergence", "incomplete beta continued fraction did not converge");
}

}  // namespace

double incomplete_beta(double x, double a, double b) {
    if (!(a > 0.0) || !(b > 0.0)) fail_input("InvalidParams", "incomplete beta needs a, b > 0");
    if (!(x >= 0.0 && x <= 1.0)) fail_input("InvalidParams", "incomplete beta needs 0 <= x <= 1");
    if (x == 0.0) return 0.0;
    if (x == 1.0) return 1.0;
    const double log_front =
        std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(log_front);
    if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_fraction(x, a, b) / a;
    return 1.0 - front * beta_fraction(1.0 - x, b, a) / b;
}

double student_t_two_tailed(double t, double dof) {
    if (!(dof > 0.0)) fail_input("InvalidParams", "degrees of freedom must be > 0");
    if (std::isinf(t)) return 0.0;
    return incomplete_beta(dof / (dof + t * t), dof / 2.0, 0.5);
}

TTestResult paired_t_test(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) fail_input("DimensionMismatch", "paired samples differ in length");
    const std::size_t n = a.size();
    if (n < 2) fail_input("InvalidParams", "paired t-test needs at least two pairs");
    std::vector<double> d(n);
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        d[i] = a[i] - b[i];
        mean += d[i];
    }
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (double x : d) ss += (x - mean) * (x - mean);
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));

    TTestResult r;
    r.n = n;
    r.mean_difference = mean;
    bool all_zero = true;
    for (double x : d) all_zero = all_zero && x == 0.0;
    if (all_zero) return r;
    if (!(sd > 0.0)) fail_input("ZeroVariance", "paired differences are constant and non-zero");
    r.t = mean / (sd / std::sqrt(static_cast<double>(n)));
    r.p = student_t_two_tailed(r.t, static_cast<double>(n - 1));
    return r;
}

}  // namespace phmmw
