#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hll/distributions.hpp"
#include "hll/kstest.hpp"
#include "hll/sample_set.hpp"
#include "hll/special_functions.hpp"

namespace hll {

struct fit_report {
    distribution dist = exponential_params(1.0);
    double ks_statistic = 0.0;
    double ks_critical = 0.0;
    bool passed = false;
    double empirical_mean = 0.0;  // T_ep
    double bestfit_mean = 0.0;    // T_bf; always mean(dist)
    std::size_t n = 0;
    double log_likelihood = 0.0;
};

struct fit_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// degenerate input (e.g. zero variance where a spread is required)
struct fit_degenerate_error : fit_error {
    using fit_error::fit_error;
};

// optimizer exhausted its budget; carries the best iterate found
struct gev_fit_failed_error : fit_error {
    gev_params best;
    gev_fit_failed_error(const std::string& msg, gev_params best_)
        : fit_error(msg), best(best_) {}
};

// ----- log-likelihoods ------------------------------------------------------

inline double log_likelihood(const exponential_params& p, const std::vector<double>& x) {
    double s = 0.0;
    for (double v : x) s += v;
    return static_cast<double>(x.size()) * std::log(p.rate) - p.rate * s;
}

inline double log_likelihood(const gamma_params& p, const std::vector<double>& x) {
    double slog = 0.0, s = 0.0;
    for (double v : x) {
        slog += std::log(v);
        s += v;
    }
    const double n = static_cast<double>(x.size());
    return n * (p.shape * std::log(p.rate) - log_gamma(p.shape)) +
           (p.shape - 1.0) * slog - p.rate * s;
}

inline double log_likelihood(const gev_params& p, const std::vector<double>& x) {
    double ll = 0.0;
    const double log_sigma = std::log(p.scale);
    if (std::fabs(p.shape) < gev_xi_zero_threshold) {
        for (double v : x) {
            const double z = (v - p.location) / p.scale;
            ll += -log_sigma - z - std::exp(-z);
        }
        return ll;
    }
    for (double v : x) {
        const double w = 1.0 + p.shape * (v - p.location) / p.scale;
        if (w <= 0.0) return -std::numeric_limits<double>::infinity();
        const double log_t = -std::log(w) / p.shape;
        ll += -log_sigma + (1.0 + p.shape) * log_t - std::exp(log_t);
    }
    return ll;
}

inline double log_likelihood(const distribution& d, const std::vector<double>& x) {
    return std::visit([&x](const auto& p) { return log_likelihood(p, x); }, d);
}

// ----- exponential -----------------------------------------------------------

// MLE: rate = 1 / sample mean
inline exponential_params fit_exponential(const sample_set& s) {
    require_positive_samples(s, "fit_exponential");
    return exponential_params(1.0 / stats::mean(s.values));
}

// ----- gamma -----------------------------------------------------------------

// MLE by Newton iteration on the shape:
//   ln(a) - psi(a) = ln(mean) - mean(ln x),   rate = a / mean
// started from the method-of-moments shape mean^2/variance.
inline gamma_params fit_gamma(const sample_set& s) {
    require_positive_samples(s, "fit_gamma");
    const double m = stats::mean(s.values);
    double mean_log = 0.0;
    for (double v : s.values) mean_log += std::log(v);
    mean_log /= static_cast<double>(s.values.size());
    const double target = std::log(m) - mean_log;  // >= 0 by Jensen
    if (!(target > 1e-13))
        throw fit_degenerate_error("fit_gamma: zero-variance samples (shape diverges)");

    const double var = stats::variance(s.values);
    double a = var > 0.0 ? m * m / var : 1.0;
    if (!(a > 0.0) || !std::isfinite(a)) a = 1.0;
    for (int it = 0; it < 100; ++it) {
        const double f = std::log(a) - digamma(a) - target;
        const double fp = 1.0 / a - trigamma(a);
        double step = f / fp;
        double next = a - step;
        if (next <= 0.0) next = 0.5 * a;  // keep the iterate in-domain
        if (std::fabs(next - a) < 1e-10 * std::max(1.0, std::fabs(a))) {
            a = next;
            break;
        }
        a = next;
    }
    return gamma_params(a, a / m);
}

// ----- gev -------------------------------------------------------------------

namespace detail {

// probability-weighted-moment initial guess (Hosking 1985; his k is -xi)
inline gev_params gev_pwm_initial(const std::vector<double>& sorted) {
    const std::size_t n = sorted.size();
    const double nd = static_cast<double>(n);
    double b0 = 0.0, b1 = 0.0, b2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double j = static_cast<double>(i + 1);
        b0 += sorted[i];
        b1 += (j - 1.0) / (nd - 1.0) * sorted[i];
        b2 += (j - 1.0) * (j - 2.0) / ((nd - 1.0) * (nd - 2.0)) * sorted[i];
    }
    b0 /= nd;
    b1 /= nd;
    b2 /= nd;
    const double l1 = b0, l2 = 2.0 * b1 - b0, l3 = 6.0 * b2 - 6.0 * b1 + b0;
    if (!(l2 > 0.0)) throw fit_degenerate_error("fit_gev: zero dispersion");
    const double t3 = l3 / l2;
    const double c = 2.0 / (3.0 + t3) - std::log(2.0) / std::log(3.0);
    const double k = 7.8590 * c + 2.9554 * c * c;
    if (std::fabs(k) < 1e-8) {
        const double sigma = l2 / std::log(2.0);
        return gev_params(0.0, sigma, l1 - euler_mascheroni * sigma);
    }
    const double g = std::exp(log_gamma(1.0 + k));
    const double sigma = l2 * k / ((1.0 - std::pow(2.0, -k)) * g);
    const double mu = l1 - sigma * (1.0 - g) / k;
    return gev_params(-k, std::max(sigma, 1e-12), mu);
}

// Nelder-Mead on (xi, log sigma, mu) with a fixed evaluation budget.
// Returns the best point and its objective value.
template <typename F>
std::pair<std::array<double, 3>, double> nelder_mead3(F&& f, std::array<double, 3> x0,
                                                      int budget) {
    constexpr int dim = 3;
    std::array<std::array<double, 3>, 4> simplex;
    std::array<double, 4> fv;
    simplex[0] = x0;
    for (int i = 0; i < dim; ++i) {
        simplex[i + 1] = x0;
        const double step = std::max(0.05 * std::fabs(x0[i]), 0.02);
        simplex[i + 1][i] += step;
    }
    int evals = 0;
    for (int i = 0; i < dim + 1; ++i) fv[i] = f(simplex[i]), ++evals;

    auto order = [&] {
        std::array<int, 4> idx{0, 1, 2, 3};
        std::sort(idx.begin(), idx.end(), [&](int a, int b) { return fv[a] < fv[b]; });
        std::array<std::array<double, 3>, 4> s2;
        std::array<double, 4> f2;
        for (int i = 0; i < 4; ++i) s2[i] = simplex[idx[i]], f2[i] = fv[idx[i]];
        simplex = s2;
        fv = f2;
    };
    auto combine = [](const std::array<double, 3>& a, double wa, const std::array<double, 3>& b,
                      double wb) {
        std::array<double, 3> r;
        for (int i = 0; i < 3; ++i) r[i] = wa * a[i] + wb * b[i];
        return r;
    };

    while (evals < budget) {
        order();
        double spread = 0.0;
        for (int i = 1; i < 4; ++i)
            for (int j = 0; j < 3; ++j)
                spread = std::max(spread, std::fabs(simplex[i][j] - simplex[0][j]));
        if (spread < 1e-10 && std::fabs(fv[3] - fv[0]) < 1e-12) break;

        std::array<double, 3> centroid{0, 0, 0};  // of the best three vertices
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) centroid[j] += simplex[i][j] / 3.0;

        const auto reflected = combine(centroid, 2.0, simplex[3], -1.0);
        const double fr = f(reflected);
        ++evals;
        if (fr < fv[0]) {
            const auto expanded = combine(centroid, 3.0, simplex[3], -2.0);
            const double fe = f(expanded);
            ++evals;
            if (fe < fr) {
                simplex[3] = expanded;
                fv[3] = fe;
            } else {
                simplex[3] = reflected;
                fv[3] = fr;
            }
        } else if (fr < fv[2]) {
            simplex[3] = reflected;
            fv[3] = fr;
        } else {
            const auto contracted = combine(centroid, 0.5, simplex[3], 0.5);
            const double fc = f(contracted);
            ++evals;
            if (fc < fv[3]) {
                simplex[3] = contracted;
                fv[3] = fc;
            } else {
                for (int i = 1; i < 4; ++i) {
                    simplex[i] = combine(simplex[0], 0.5, simplex[i], 0.5);
                    fv[i] = f(simplex[i]);
                    ++evals;
                }
            }
        }
    }
    order();
    return {simplex[0], fv[0]};
}

}  // namespace detail

inline constexpr std::size_t gev_min_samples = 100;
inline constexpr int gev_simplex_budget = 2000;

// Maximum-likelihood GEV fit: probability-weighted-moment start, then a
// derivative-free simplex search on (xi, log sigma, mu). Derivatives blow
// up at the support boundary, so the search is kept gradient-free and the
// objective returns +inf whenever a sample falls outside the candidate
// support.
inline gev_params fit_gev(const sample_set& s) {
    require_finite_samples(s, "fit_gev");
    if (s.values.size() < gev_min_samples)
        throw fit_error("fit_gev: refused, need at least 100 samples for a stable fit");

    std::vector<double> sorted = s.values;
    std::sort(sorted.begin(), sorted.end());
    gev_params init = detail::gev_pwm_initial(sorted);

    auto negll = [&sorted](const std::array<double, 3>& p) {
        const double xi = p[0], sigma = std::exp(p[1]), mu = p[2];
        if (!std::isfinite(sigma) || sigma <= 0.0) return std::numeric_limits<double>::infinity();
        double ll;
        try {
            ll = log_likelihood(gev_params(xi, sigma, mu), sorted);
        } catch (const std::invalid_argument&) {
            return std::numeric_limits<double>::infinity();
        }
        return std::isfinite(ll) ? -ll : std::numeric_limits<double>::infinity();
    };

    std::array<double, 3> x0{init.shape, std::log(init.scale), init.location};
    if (!std::isfinite(negll(x0))) {
        // PWM start can place samples outside the support; shrink xi toward
        // the Gumbel case until feasible
        for (double f : {0.5, 0.25, 0.1, 0.0}) {
            x0[0] = init.shape * f;
            if (std::isfinite(negll(x0))) break;
        }
    }
    if (!std::isfinite(negll(x0)))
        throw gev_fit_failed_error("fit_gev: no feasible starting point", init);

    const auto [best, fbest] = detail::nelder_mead3(negll, x0, gev_simplex_budget);
    if (!std::isfinite(fbest))
        throw gev_fit_failed_error("fit_gev: optimizer failed to find a finite optimum",
                                   gev_params(x0[0], std::exp(x0[1]), x0[2]));
    gev_params fitted(best[0], std::exp(best[1]), best[2]);
    // guarantee likelihood dominance over the initializer; the simplex always
    // keeps its best vertex, and the start is a vertex
    return fitted;
}

// ----- model selection -------------------------------------------------------

// Within this KS-distance band, candidate fits count as tied and the
// fewer-parameter family wins.
inline constexpr double selection_tie_band = 1e-3;

inline distribution fit_family(family f, const sample_set& s) {
    switch (f) {
        case family::exponential: return fit_exponential(s);
        case family::gamma: return fit_gamma(s);
        case family::gev: return fit_gev(s);
    }
    throw std::invalid_argument("fit_family: unknown family");
}

inline fit_report make_fit_report(const sample_set& s, const distribution& d,
                                  double significance) {
    fit_report r;
    r.dist = d;
    const ks_result ks = ks_test(s, d, significance);
    r.ks_statistic = ks.statistic;
    r.ks_critical = ks.critical_value;
    r.passed = ks.passed;
    r.empirical_mean = stats::mean(s.values);
    r.bestfit_mean = mean(d);
    r.n = s.values.size();
    r.log_likelihood = log_likelihood(d, s.values);
    return r;
}

// Fits every candidate family, scores each by its KS statistic and returns
// the report for the winner. Families whose fit throws are skipped; if all
// fail, the errors are aggregated.
inline fit_report select_best_fit(const sample_set& s, const std::vector<family>& candidates,
                                  double significance = 0.01) {
    if (candidates.empty())
        throw std::invalid_argument("select_best_fit: no candidate families");
    require_positive_samples(s, "select_best_fit");

    struct scored {
        family fam;
        distribution dist;
        double d;
    };
    std::vector<scored> fits;
    std::string errors;
    for (family f : candidates) {
        try {
            distribution d = fit_family(f, s);
            fits.push_back({f, d, ks_statistic(s, d)});
        } catch (const std::exception& e) {
            errors += family_name(f) + ": " + e.what() + "; ";
        }
    }
    if (fits.empty())
        throw fit_error("select_best_fit: all candidate fits failed: " + errors);

    const auto best =
        std::min_element(fits.begin(), fits.end(),
                         [](const scored& a, const scored& b) { return a.d < b.d; });
    scored chosen = *best;
    for (const scored& c : fits) {
        if (std::fabs(c.d - best->d) < selection_tie_band &&
            parameter_count(c.fam) < parameter_count(chosen.fam))
            chosen = c;
    }
    return make_fit_report(s, chosen.dist, significance);
}

// ----- outlier runs ----------------------------------------------------------

struct outlier_filter_result {
    std::vector<sample_set> kept;
    std::vector<std::string> excluded;  // "<run_id>: mean=<m> threshold=<t>"
    double threshold = 0.0;
};

// Drops runs whose mean latency exceeds median + k * MAD of the run means.
// The reference methodology excludes runs with "remarkably long" means but
// names no threshold; k is the knob (default 5).
inline outlier_filter_result filter_outlier_runs(const std::vector<sample_set>& runs,
                                                 double k = 5.0) {
    if (runs.size() < 3)
        throw std::invalid_argument("filter_outlier_runs: need at least 3 runs");
    std::vector<double> means(runs.size());
    for (std::size_t i = 0; i < runs.size(); ++i) {
        require_positive_samples(runs[i], "filter_outlier_runs");
        means[i] = stats::mean(runs[i].values);
    }
    const double med = stats::median(means);
    const double mad = stats::mad(means);
    outlier_filter_result out;
    out.threshold = med + k * mad;
    for (std::size_t i = 0; i < runs.size(); ++i) {
        if (means[i] <= out.threshold || mad == 0.0) {
            out.kept.push_back(runs[i]);
        } else {
            out.excluded.push_back(runs[i].run_id + ": mean=" + std::to_string(means[i]) +
                                   " threshold=" + std::to_string(out.threshold));
        }
    }
    return out;
}

}  // namespace hll
