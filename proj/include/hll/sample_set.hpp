#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace hll {

struct scenario_meta {
    double lambda_t = 0.0;
    int block_size = 0;
    double block_timeout = 0.0;
};

// One batch of latency observations, all strictly positive.
struct sample_set {
    std::vector<double> values;
    std::string run_id;
    scenario_meta meta;

    std::size_t size() const { return values.size(); }
};

inline void require_positive_samples(const sample_set& s, const char* who) {
    if (s.values.empty())
        throw std::invalid_argument(std::string(who) + ": empty sample set");
    for (double v : s.values)
        if (!(v > 0.0) || !std::isfinite(v))
            throw std::invalid_argument(std::string(who) + ": samples must be positive and finite");
}

// The gev family is supported on the whole real line, so its fit only
// requires finite inputs.
inline void require_finite_samples(const sample_set& s, const char* who) {
    if (s.values.empty())
        throw std::invalid_argument(std::string(who) + ": empty sample set");
    for (double v : s.values)
        if (!std::isfinite(v))
            throw std::invalid_argument(std::string(who) + ": samples must be finite");
}

namespace stats {

inline double mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

inline double variance(const std::vector<double>& v) {
    const double m = mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size());
}

inline double median(std::vector<double> v) {
    if (v.empty()) throw std::invalid_argument("median: empty input");
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + mid, v.end());
    double hi = v[mid];
    if (v.size() % 2 == 1) return hi;
    std::nth_element(v.begin(), v.begin() + mid - 1, v.begin() + mid);
    return 0.5 * (v[mid - 1] + hi);
}

// median absolute deviation (unscaled)
inline double mad(const std::vector<double>& v) {
    const double med = median(v);
    std::vector<double> dev(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) dev[i] = std::fabs(v[i] - med);
    return median(std::move(dev));
}

}  // namespace stats

}  // namespace hll
