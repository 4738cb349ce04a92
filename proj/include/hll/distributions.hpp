#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <variant>

#include "hll/rng.hpp"
#include "hll/special_functions.hpp"

namespace hll {

// Shape-parameter magnitudes below this use the Gumbel (xi = 0) branch of
// the GEV formulas; avoids catastrophic cancellation in (1 + xi z)^(-1/xi).
inline constexpr double gev_xi_zero_threshold = 1e-9;

struct exponential_params {
    double rate;  // 1/seconds

    explicit exponential_params(double rate_) : rate(rate_) {
        if (!(rate > 0.0) || !std::isfinite(rate))
            throw std::invalid_argument("exponential: rate must be positive and finite");
    }
};

struct gamma_params {
    double shape;  // dimensionless
    double rate;   // inverse scale, 1/seconds

    gamma_params(double shape_, double rate_) : shape(shape_), rate(rate_) {
        if (!(shape > 0.0) || !std::isfinite(shape))
            throw std::invalid_argument("gamma: shape must be positive and finite");
        if (!(rate > 0.0) || !std::isfinite(rate))
            throw std::invalid_argument("gamma: rate must be positive and finite");
    }
};

struct gev_params {
    double shape;     // xi; negative (Weibull), zero (Gumbel) or positive (Frechet)
    double scale;     // sigma, seconds
    double location;  // mu, seconds

    gev_params(double shape_, double scale_, double location_)
        : shape(shape_), scale(scale_), location(location_) {
        if (!(scale > 0.0) || !std::isfinite(scale))
            throw std::invalid_argument("gev: scale must be positive and finite");
        if (!std::isfinite(shape) || !std::isfinite(location))
            throw std::invalid_argument("gev: shape and location must be finite");
    }
};

using distribution = std::variant<exponential_params, gamma_params, gev_params>;

enum class family { exponential, gamma, gev };

inline family family_of(const distribution& d) {
    if (std::holds_alternative<exponential_params>(d)) return family::exponential;
    if (std::holds_alternative<gamma_params>(d)) return family::gamma;
    return family::gev;
}

inline int parameter_count(family f) {
    switch (f) {
        case family::exponential: return 1;
        case family::gamma: return 2;
        case family::gev: return 3;
    }
    return 0;
}

inline std::string family_name(family f) {
    switch (f) {
        case family::exponential: return "exponential";
        case family::gamma: return "gamma";
        case family::gev: return "gev";
    }
    return "?";
}

// lower end of the support (gev with xi > 0 is bounded below, xi < 0 above)
inline double support_min(const distribution& d) {
    if (const auto* g = std::get_if<gev_params>(&d)) {
        if (g->shape > gev_xi_zero_threshold) return g->location - g->scale / g->shape;
        return -std::numeric_limits<double>::infinity();
    }
    return 0.0;
}

inline double support_max(const distribution& d) {
    if (const auto* g = std::get_if<gev_params>(&d)) {
        if (g->shape < -gev_xi_zero_threshold) return g->location - g->scale / g->shape;
    }
    return std::numeric_limits<double>::infinity();
}

// ----- pdf ----------------------------------------------------------------
//
// Out-of-support points return 0 rather than throwing; fitting optimizers
// probe there.

inline double pdf(const exponential_params& p, double x) {
    if (x < 0.0) return 0.0;
    return p.rate * std::exp(-p.rate * x);
}

inline double pdf(const gamma_params& p, double x) {
    if (x < 0.0) return 0.0;
    if (x == 0.0) {
        // boundary of the support; finite only for shape >= 1
        return p.shape == 1.0 ? p.rate : 0.0;
    }
    const double lp = p.shape * std::log(p.rate) + (p.shape - 1.0) * std::log(x) -
                      p.rate * x - log_gamma(p.shape);
    return std::exp(lp);
}

inline double pdf(const gev_params& p, double x) {
    const double z = (x - p.location) / p.scale;
    if (std::fabs(p.shape) < gev_xi_zero_threshold) {
        const double t = std::exp(-z);
        return std::isinf(t) ? 0.0 : t * std::exp(-t) / p.scale;
    }
    const double w = 1.0 + p.shape * z;
    if (w <= 0.0) return 0.0;
    // t = w^(-1/xi); log-space keeps w^(...) from overflowing
    const double log_t = -std::log(w) / p.shape;
    const double t = std::exp(log_t);
    const double lp = (1.0 + p.shape) * log_t - t - std::log(p.scale);
    return std::exp(lp);
}

inline double pdf(const distribution& d, double x) {
    return std::visit([x](const auto& p) { return pdf(p, x); }, d);
}

// ----- cdf ----------------------------------------------------------------
//
// Clamped to 0/1 outside the support.

inline double cdf(const exponential_params& p, double x) {
    if (x <= 0.0) return 0.0;
    return -std::expm1(-p.rate * x);
}

inline double cdf(const gamma_params& p, double x) {
    if (x <= 0.0) return 0.0;
    return regularized_lower_gamma(p.shape, p.rate * x);
}

inline double cdf(const gev_params& p, double x) {
    const double z = (x - p.location) / p.scale;
    if (std::fabs(p.shape) < gev_xi_zero_threshold) {
        return std::exp(-std::exp(-z));
    }
    const double w = 1.0 + p.shape * z;
    if (w <= 0.0) return p.shape > 0.0 ? 0.0 : 1.0;
    return std::exp(-std::exp(-std::log(w) / p.shape));
}

inline double cdf(const distribution& d, double x) {
    return std::visit([x](const auto& p) { return cdf(p, x); }, d);
}

// ----- mean ---------------------------------------------------------------

inline double mean(const exponential_params& p) { return 1.0 / p.rate; }

inline double mean(const gamma_params& p) { return p.shape / p.rate; }

inline double mean(const gev_params& p) {
    if (p.shape >= 1.0)
        throw std::domain_error("gev: mean undefined for shape >= 1");
    if (std::fabs(p.shape) < gev_xi_zero_threshold)
        return p.location + p.scale * euler_mascheroni;
    const double g1 = std::exp(log_gamma(1.0 - p.shape));
    return p.location + p.scale * (g1 - 1.0) / p.shape;
}

inline double mean(const distribution& d) {
    return std::visit([](const auto& p) { return mean(p); }, d);
}

// ----- sampling -----------------------------------------------------------

inline double sample(const exponential_params& p, random_stream& rng) {
    return -std::log(rng.uniform_open()) / p.rate;
}

namespace detail {

// standard normal via Box-Muller; one variate per two uniforms keeps the
// stream layout simple and deterministic
inline double standard_normal(random_stream& rng) {
    const double u1 = rng.uniform_open();
    const double u2 = rng.uniform_open();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

// Marsaglia & Tsang (2000) squeeze method for shape >= 1
inline double gamma_sample_shape_ge1(double shape, random_stream& rng) {
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x, v;
        do {
            x = standard_normal(rng);
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = rng.uniform_open();
        if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
        if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
}

}  // namespace detail

inline double sample(const gamma_params& p, random_stream& rng) {
    if (p.shape >= 1.0) return detail::gamma_sample_shape_ge1(p.shape, rng) / p.rate;
    // boost transform for shape < 1: G(a) = G(a+1) * U^(1/a)
    const double g = detail::gamma_sample_shape_ge1(p.shape + 1.0, rng);
    const double u = rng.uniform_open();
    return g * std::pow(u, 1.0 / p.shape) / p.rate;
}

inline double sample(const gev_params& p, random_stream& rng) {
    const double u = rng.uniform_open();
    const double e = -std::log(u);  // standard exponential
    if (std::fabs(p.shape) < gev_xi_zero_threshold)
        return p.location - p.scale * std::log(e);
    return p.location + p.scale * (std::pow(e, -p.shape) - 1.0) / p.shape;
}

inline double sample(const distribution& d, random_stream& rng) {
    return std::visit([&rng](const auto& p) { return sample(p, rng); }, d);
}

}  // namespace hll
