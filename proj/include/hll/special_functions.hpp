#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>

namespace hll {

inline constexpr double euler_mascheroni = 0.57721566490153286060651209;

// ln Gamma(x) for x > 0 via the Lanczos approximation with g = 7, n = 9
// (Godfrey's coefficients; relative error below 1e-13 over the positive
// axis, comfortably inside the 1e-10 budget).
inline double log_gamma(double x) {
    if (!(x > 0.0))
        throw std::domain_error("log_gamma: argument must be positive");
    static constexpr double g = 7.0;
    static constexpr double coeff[9] = {
        0.99999999999980993,     676.5203681218851,     -1259.1392167224028,
        771.32342877765313,     -176.61502916214059,    12.507343278686905,
        -0.13857109526572012,   9.9843695780195716e-6,  1.5056327351493116e-7};
    if (x < 0.5) {
        // reflection keeps the series argument away from 0
        return std::log(M_PI / std::sin(M_PI * x)) - log_gamma(1.0 - x);
    }
    const double z = x - 1.0;
    double sum = coeff[0];
    for (int i = 1; i < 9; ++i) sum += coeff[i] / (z + i);
    const double t = z + g + 0.5;
    return 0.5 * std::log(2.0 * M_PI) + (z + 0.5) * std::log(t) - t + std::log(sum);
}

// digamma = d/dx ln Gamma(x); recurrence up to x >= 10 then the asymptotic
// series psi(x) ~ ln x - 1/(2x) - sum B_2n / (2n x^2n), truncated after the
// x^-10 term (absolute error below 1e-12 from 10 upward)
inline double digamma(double x) {
    if (!(x > 0.0))
        throw std::domain_error("digamma: argument must be positive");
    double result = 0.0;
    while (x < 10.0) {
        result -= 1.0 / x;
        x += 1.0;
    }
    const double inv = 1.0 / x, inv2 = inv * inv;
    result += std::log(x) - 0.5 * inv;
    result -= inv2 * (1.0 / 12.0 -
                      inv2 * (1.0 / 120.0 -
                              inv2 * (1.0 / 252.0 - inv2 * (1.0 / 240.0 - inv2 / 132.0))));
    return result;
}

// trigamma = psi'(x); same recurrence/asymptotic structure, needed by the
// Newton iteration of the Gamma MLE
inline double trigamma(double x) {
    if (!(x > 0.0))
        throw std::domain_error("trigamma: argument must be positive");
    double result = 0.0;
    while (x < 10.0) {
        result += 1.0 / (x * x);
        x += 1.0;
    }
    const double inv = 1.0 / x, inv2 = inv * inv;
    result += inv * (1.0 + 0.5 * inv +
                     inv2 * (1.0 / 6.0 -
                             inv2 * (1.0 / 30.0 - inv2 * (1.0 / 42.0 - inv2 / 30.0))));
    return result;
}

namespace detail {

// regularized lower incomplete gamma P(a, x) by power series, valid and
// fast for x < a + 1
inline double gamma_p_series(double a, double x) {
    double term = 1.0 / a;
    double sum = term;
    double ap = a;
    for (int n = 0; n < 500; ++n) {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if (std::fabs(term) < std::fabs(sum) * 1e-16) break;
    }
    return sum * std::exp(-x + a * std::log(x) - log_gamma(a));
}

// regularized upper incomplete gamma Q(a, x) by Lentz's modified continued
// fraction, stable for x >= a + 1
inline double gamma_q_continued_fraction(double a, double x) {
    const double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= 500; ++i) {
        const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::fabs(delta - 1.0) < 1e-16) break;
    }
    return h * std::exp(-x + a * std::log(x) - log_gamma(a));
}

}  // namespace detail

// regularized lower incomplete gamma P(a, x) = gamma(a, x) / Gamma(a),
// split between the series and the continued fraction at x = a + 1
inline double regularized_lower_gamma(double a, double x) {
    if (!(a > 0.0))
        throw std::domain_error("regularized_lower_gamma: shape must be positive");
    if (x < 0.0)
        throw std::domain_error("regularized_lower_gamma: x must be non-negative");
    if (x == 0.0) return 0.0;
    if (x < a + 1.0) return detail::gamma_p_series(a, x);
    return 1.0 - detail::gamma_q_continued_fraction(a, x);
}

// unnormalized lower incomplete gamma(a, x); overflows for a beyond ~170
// like Gamma(a) itself, callers needing large shapes use the regularized form
inline double lower_incomplete_gamma(double a, double x) {
    return regularized_lower_gamma(a, x) * std::exp(log_gamma(a));
}

// Kolmogorov asymptotic tail Q(c) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 c^2);
// Q(c) = P(sqrt(n) D_n > c) as n -> infinity
inline double kolmogorov_tail(double c) {
    if (c <= 0.0) return 1.0;
    double sum = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = std::exp(-2.0 * k * k * c * c);
        sum += (k % 2 == 1) ? term : -term;
        if (term < 1e-18) break;
    }
    return std::min(1.0, std::max(0.0, 2.0 * sum));
}

// c(alpha): solves Q(c) = alpha by bisection; monotone on (0, inf)
inline double kolmogorov_critical_coefficient(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::domain_error("kolmogorov_critical_coefficient: alpha in (0,1) required");
    double lo = 1e-3, hi = 4.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (kolmogorov_tail(mid) > alpha)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace hll
