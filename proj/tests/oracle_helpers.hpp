#pragma once

// Test-only oracles, independent of the library code paths they check.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

namespace oracle {

// adaptive Simpson quadrature
inline double simpson_step(const std::function<double(double)>& f, double a, double b, double fa,
                           double fm, double fb, double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if (depth <= 0 || std::fabs(left + right - whole) < 15.0 * tol)
        return left + right + (left + right - whole) / 15.0;
    return simpson_step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) +
           simpson_step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1);
}

inline double integrate(const std::function<double(double)>& f, double a, double b,
                        double tol = 1e-10, int depth = 48) {
    if (a == b) return 0.0;
    const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return simpson_step(f, a, b, fa, fm, fb, whole, tol, depth);
}

// Pre-partitioned adaptive quadrature. A narrow peak inside a wide interval
// is invisible to a three-point probe, so split the range into uniform
// panels first and refine each adaptively.
inline double integrate_panels(const std::function<double(double)>& f, double a, double b,
                               double tol = 1e-10, int panels = 256) {
    if (a == b) return 0.0;
    double sum = 0.0;
    const double width = (b - a) / panels;
    for (int i = 0; i < panels; ++i) {
        const double lo = a + i * width;
        const double hi = (i == panels - 1) ? b : lo + width;
        sum += integrate(f, lo, hi, tol / panels, 40);
    }
    return sum;
}

// sup |F_n - F| by brute force: a dense scan plus exact evaluation of both
// envelope candidates at every jump point of the empirical CDF
inline double ks_brute_force(std::vector<double> samples,
                             const std::function<double(double)>& cdf, int grid_points = 100000) {
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double d = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double F = cdf(samples[i]);
        d = std::max(d, std::fabs((static_cast<double>(i) + 1.0) / n - F));
        d = std::max(d, std::fabs(static_cast<double>(i) / n - F));
    }
    const double lo = samples.front() - 1.0, hi = samples.back() + 1.0;
    for (int g = 0; g <= grid_points; ++g) {
        const double x = lo + (hi - lo) * static_cast<double>(g) / grid_points;
        const double F = cdf(x);
        const auto it = std::upper_bound(samples.begin(), samples.end(), x);
        const double Fn = static_cast<double>(it - samples.begin()) / n;
        d = std::max(d, std::fabs(Fn - F));
    }
    return d;
}

// Kolmogorov CDF via the theta-function dual series
//   K(x) = sqrt(2 pi)/x * sum_{k>=1} exp(-(2k-1)^2 pi^2 / (8 x^2)),
// a different route than the alternating exponential series used by the
// implementation; inverted by bisection.
inline double kolmogorov_cdf_theta(double x) {
    if (x <= 0.0) return 0.0;
    double s = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double a = (2.0 * k - 1.0) * M_PI / x;
        const double term = std::exp(-a * a / 8.0);
        s += term;
        if (term < 1e-20) break;
    }
    return std::sqrt(2.0 * M_PI) / x * s;
}

inline double kolmogorov_critical_theta(double alpha) {
    double lo = 1e-3, hi = 4.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (1.0 - kolmogorov_cdf_theta(mid) > alpha)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

// five-point central difference, Richardson-free but high order
inline double derivative(const std::function<double(double)>& f, double x, double h = 1e-4) {
    return (-f(x + 2 * h) + 8 * f(x + h) - 8 * f(x - h) + f(x - 2 * h)) / (12.0 * h);
}

}  // namespace oracle
