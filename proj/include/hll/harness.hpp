#pragma once

#include <atomic>
#include <bit>
#include <cmath>
#include <cstdlib>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "hll/fitting.hpp"
#include "hll/simulator.hpp"

namespace hll {

// ----- histograms and empirical CDF tables ---------------------------------

struct histogram {
    double bin_width = 0.0;
    double origin = 0.0;                        // lower edge of bin 0
    std::vector<std::pair<double, long>> bins;  // (lower edge, count)
    long total = 0;

    // Probability per unit time, so a fitted pdf overlays directly
    double normalized_height(std::size_t i) const {
        return static_cast<double>(bins[i].second) /
               (static_cast<double>(total) * bin_width);
    }

    // lower edge of the tallest bin (first one on ties)
    double mode_lower_edge() const {
        std::size_t best = 0;
        for (std::size_t i = 1; i < bins.size(); ++i)
            if (bins[i].second > bins[best].second) best = i;
        return bins[best].first;
    }
};

inline histogram make_histogram(const std::vector<double>& samples, double bin_width) {
    if (samples.empty()) throw std::invalid_argument("make_histogram: empty input");
    if (!(bin_width > 0.0)) throw std::invalid_argument("make_histogram: bin width must be > 0");
    double lo = samples[0], hi = samples[0];
    for (double v : samples) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const double origin = std::floor(lo / bin_width) * bin_width;
    const std::size_t nbins =
        static_cast<std::size_t>(std::floor((hi - origin) / bin_width)) + 1;
    histogram h;
    h.bin_width = bin_width;
    h.origin = origin;
    h.bins.resize(nbins);
    for (std::size_t i = 0; i < nbins; ++i)
        h.bins[i] = {origin + static_cast<double>(i) * bin_width, 0};
    for (double v : samples) {
        std::size_t idx = static_cast<std::size_t>((v - origin) / bin_width);
        if (idx >= nbins) idx = nbins - 1;  // top edge
        ++h.bins[idx].second;
    }
    h.total = static_cast<long>(samples.size());
    return h;
}

// sorted (x, i/n) pairs
inline std::vector<std::pair<double, double>> make_cdf(std::vector<double> samples) {
    if (samples.empty()) throw std::invalid_argument("make_cdf: empty input");
    std::sort(samples.begin(), samples.end());
    std::vector<std::pair<double, double>> out(samples.size());
    const double n = static_cast<double>(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i)
        out[i] = {samples[i], (static_cast<double>(i) + 1.0) / n};
    return out;
}

// ----- regime detection ------------------------------------------------------

enum class regime { feasible, timeout_dominant, size_dominant };

inline const char* to_string(regime r) {
    switch (r) {
        case regime::feasible: return "feasible";
        case regime::timeout_dominant: return "timeout-dominant";
        case regime::size_dominant: return "size-dominant";
    }
    return "?";
}

struct regime_thresholds {
    double timeout_cut = 0.95;   // TimeoutDominant when >= this fraction of blocks
    double size_cut = 0.95;      // SizeDominant needs this much size cutting...
    double tail_fraction = 0.01; // ...plus at least this much mass beyond mean + 4 sd
};

struct regime_verdict {
    regime label = regime::feasible;
    double timeout_cut_fraction = 0.0;
    double size_cut_fraction = 0.0;
    double tail_fraction = 0.0;  // P(total > mean + 4 sd)
    regime_thresholds thresholds;
};

inline regime_verdict detect_regime(const std::vector<block_record>& blocks,
                                    const std::vector<latency_sample>& samples,
                                    regime_thresholds th = {}) {
    if (blocks.empty() || samples.empty())
        throw std::invalid_argument("detect_regime: empty input");
    regime_verdict v;
    v.thresholds = th;
    long timeout_cuts = 0;
    for (const auto& b : blocks)
        if (b.reason == cut_reason::timeout) ++timeout_cuts;
    v.timeout_cut_fraction = static_cast<double>(timeout_cuts) / static_cast<double>(blocks.size());
    v.size_cut_fraction = 1.0 - v.timeout_cut_fraction;

    std::vector<double> totals(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) totals[i] = samples[i].total_latency;
    const double m = stats::mean(totals);
    const double sd = std::sqrt(stats::variance(totals));
    long tail = 0;
    for (double t : totals)
        if (t > m + 4.0 * sd) ++tail;
    v.tail_fraction = static_cast<double>(tail) / static_cast<double>(totals.size());

    if (v.timeout_cut_fraction >= th.timeout_cut)
        v.label = regime::timeout_dominant;
    else if (v.size_cut_fraction >= th.size_cut && v.tail_fraction >= th.tail_fraction)
        v.label = regime::size_dominant;
    else
        v.label = regime::feasible;
    return v;
}

// ----- sweep specification ----------------------------------------------------

struct sweep_spec {
    std::vector<double> lambda_t;
    std::vector<int> block_size;
    std::vector<double> block_timeout;
    int runs_per_point = 10;  // "averaged over ten test runs"
    sim_config base;          // n_tx, service models, warmup; seed is set per run
    double outlier_k = 5.0;
    regime_thresholds thresholds;
    double significance = 0.01;

    void validate_invariants() const {
        if (lambda_t.empty() || block_size.empty() || block_timeout.empty())
            throw std::invalid_argument("sweep_spec: empty grid axis");
        if (runs_per_point < 1)
            throw std::invalid_argument("sweep_spec: runs_per_point must be >= 1");
        sim_config probe = base;
        probe.lambda_t = lambda_t.front();
        probe.block_size = block_size.front();
        probe.block_timeout = block_timeout.front();
        probe.validate_invariants();
    }
};

// per-run seed: hash of base seed, grid coordinates and run index
inline std::uint64_t derive_run_seed(std::uint64_t base_seed, double lambda_t, int block_size,
                                     double block_timeout, int run_index) {
    std::uint64_t h = mix64(base_seed);
    h = mix64(h ^ std::bit_cast<std::uint64_t>(lambda_t));
    h = mix64(h ^ static_cast<std::uint64_t>(block_size));
    h = mix64(h ^ std::bit_cast<std::uint64_t>(block_timeout));
    h = mix64(h ^ static_cast<std::uint64_t>(run_index));
    return h;
}

// ----- per-point experiment ----------------------------------------------------

// Averaged-over-runs fit for one latency type: parameters and KS statistic
// are arithmetic means over surviving runs; the pooled fit backs the
// empirical mean and sample count.
struct latency_type_summary {
    std::string latency_type;
    family fitted_family = family::gamma;
    std::vector<double> avg_params;  // family-ordered parameter means
    double avg_ks_statistic = 0.0;
    double ks_critical = 0.0;  // at the per-run sample count
    bool passed = false;       // avg KS < critical
    double empirical_mean = 0.0;
    double bestfit_mean = 0.0;  // mean of the averaged-parameter distribution
    std::size_t n_per_run = 0;
    std::size_t n_pooled = 0;
};

struct point_summary {
    double lambda_t = 0.0;
    int block_size = 0;
    double block_timeout = 0.0;
    std::vector<latency_type_summary> per_type;
    std::optional<fit_report> best_fit_total;  // select_best_fit cross-check on pooled totals
    std::string best_fit_family;
    regime_verdict verdict;
    double mean_total = 0.0;       // over surviving runs
    int runs_used = 0;
    std::vector<std::string> excluded_runs;
    std::vector<std::string> errors;
};

namespace detail {

inline std::vector<double> params_of(const distribution& d) {
    if (const auto* e = std::get_if<exponential_params>(&d)) return {e->rate};
    if (const auto* g = std::get_if<gamma_params>(&d)) return {g->shape, g->rate};
    const auto& v = std::get<gev_params>(d);
    return {v.shape, v.scale, v.location};
}

inline distribution from_params(family f, const std::vector<double>& p) {
    switch (f) {
        case family::exponential: return exponential_params(p[0]);
        case family::gamma: return gamma_params(p[0], p[1]);
        case family::gev: return gev_params(p[0], p[1], p[2]);
    }
    throw std::invalid_argument("from_params: unknown family");
}

inline latency_type_summary summarize_type(const std::string& name, family fam,
                                           const std::vector<std::vector<double>>& runs,
                                           double significance) {
    latency_type_summary out;
    out.latency_type = name;
    out.fitted_family = fam;
    std::vector<double> param_sums;
    double ks_sum = 0.0;
    std::size_t n_run = 0, n_pool = 0;
    double pooled_sum = 0.0;
    int fitted = 0;
    for (const auto& values : runs) {
        sample_set run_set{values, "", {}};
        const distribution d = fit_family(fam, run_set);
        const auto p = params_of(d);
        if (param_sums.empty()) param_sums.assign(p.size(), 0.0);
        for (std::size_t i = 0; i < p.size(); ++i) param_sums[i] += p[i];
        ks_sum += ks_statistic(run_set, d);
        ++fitted;
        n_run = values.size();
        n_pool += values.size();
        for (double v : values) pooled_sum += v;
    }
    out.avg_params = param_sums;
    for (double& v : out.avg_params) v /= static_cast<double>(fitted);
    out.avg_ks_statistic = ks_sum / static_cast<double>(fitted);
    out.ks_critical = ks_critical(n_run, significance);
    out.passed = out.avg_ks_statistic < out.ks_critical;
    out.empirical_mean = pooled_sum / static_cast<double>(n_pool);
    out.bestfit_mean = mean(from_params(fam, out.avg_params));
    out.n_per_run = n_run;
    out.n_pooled = n_pool;
    return out;
}

}  // namespace detail

inline point_summary run_experiment(double lambda_t, int block_size, double block_timeout,
                                    const sweep_spec& spec) {
    point_summary out;
    out.lambda_t = lambda_t;
    out.block_size = block_size;
    out.block_timeout = block_timeout;

    sim_config cfg = spec.base;
    cfg.lambda_t = lambda_t;
    cfg.block_size = block_size;
    cfg.block_timeout = block_timeout;

    std::vector<sim_result> results;
    std::vector<sample_set> total_runs;
    for (int r = 0; r < spec.runs_per_point; ++r) {
        cfg.seed = derive_run_seed(spec.base.seed, lambda_t, block_size, block_timeout, r);
        results.push_back(run_simulation(cfg));
        sample_set run_set;
        run_set.run_id = "run" + std::to_string(r);
        run_set.meta = {lambda_t, block_size, block_timeout};
        run_set.values.reserve(results.back().samples.size());
        for (const auto& s : results.back().samples) run_set.values.push_back(s.total_latency);
        total_runs.push_back(std::move(run_set));
    }

    // outlier-run exclusion on total-latency run means
    std::vector<int> kept_idx;
    if (spec.runs_per_point >= 3) {
        const auto filtered = filter_outlier_runs(total_runs, spec.outlier_k);
        out.excluded_runs = filtered.excluded;
        for (int r = 0; r < spec.runs_per_point; ++r) {
            bool excluded = false;
            for (const auto& e : filtered.excluded)
                if (e.rfind(total_runs[static_cast<std::size_t>(r)].run_id + ":", 0) == 0)
                    excluded = true;
            if (!excluded) kept_idx.push_back(r);
        }
    } else {
        for (int r = 0; r < spec.runs_per_point; ++r) kept_idx.push_back(r);
    }
    out.runs_used = static_cast<int>(kept_idx.size());

    // per-latency-type runs, surviving only
    std::vector<std::vector<double>> endorse, order, validate_v, total;
    std::vector<block_record> pooled_blocks;
    std::vector<latency_sample> pooled_samples;
    for (int r : kept_idx) {
        const auto& res = results[static_cast<std::size_t>(r)];
        std::vector<double> e, o, v, t;
        e.reserve(res.samples.size());
        for (const auto& s : res.samples) {
            e.push_back(s.endorse_latency);
            o.push_back(s.order_latency);
            v.push_back(s.validate_latency);
            t.push_back(s.total_latency);
        }
        endorse.push_back(std::move(e));
        order.push_back(std::move(o));
        validate_v.push_back(std::move(v));
        total.push_back(std::move(t));
        pooled_blocks.insert(pooled_blocks.end(), res.blocks.begin(), res.blocks.end());
        pooled_samples.insert(pooled_samples.end(), res.samples.begin(), res.samples.end());
    }

    // discovered families per latency type: endorsing Exponential, ordering
    // Gamma, validation GEV, ledger commitment Gamma
    struct typed {
        const char* name;
        family fam;
        std::vector<std::vector<double>>* runs;
    };
    const typed types[] = {{"endorse", family::exponential, &endorse},
                           {"order", family::gamma, &order},
                           {"validate", family::gev, &validate_v},
                           {"total", family::gamma, &total}};
    for (const auto& t : types) {
        try {
            out.per_type.push_back(
                detail::summarize_type(t.name, t.fam, *t.runs, spec.significance));
        } catch (const std::exception& e) {
            out.errors.push_back(std::string(t.name) + ": " + e.what());
        }
    }

    // best-fit cross-check over pooled totals
    sample_set pooled_total;
    pooled_total.run_id = "pooled";
    pooled_total.meta = {lambda_t, block_size, block_timeout};
    for (const auto& t : total)
        pooled_total.values.insert(pooled_total.values.end(), t.begin(), t.end());
    try {
        out.best_fit_total = select_best_fit(
            pooled_total, {family::exponential, family::gamma, family::gev}, spec.significance);
        out.best_fit_family = family_name(family_of(out.best_fit_total->dist));
    } catch (const std::exception& e) {
        out.errors.push_back(std::string("best_fit: ") + e.what());
    }

    out.mean_total = stats::mean(pooled_total.values);
    out.verdict = detect_regime(pooled_blocks, pooled_samples, spec.thresholds);
    return out;
}

// ----- full sweep ---------------------------------------------------------------

inline unsigned harness_thread_cap() {
    if (const char* env = std::getenv("HLL_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v >= 1) return static_cast<unsigned>(v);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

// Cartesian product evaluated in (lambda_t, block_size, block_timeout)
// lexicographic order. Points run on a worker pool; the result table is a
// deterministic fold in grid order regardless of completion order.
inline std::vector<point_summary> sweep(const sweep_spec& spec) {
    spec.validate_invariants();
    struct coord {
        double l;
        int s;
        double t;
    };
    std::vector<coord> grid;
    for (double l : spec.lambda_t)
        for (int s : spec.block_size)
            for (double t : spec.block_timeout) grid.push_back({l, s, t});

    std::vector<point_summary> table(grid.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= grid.size()) return;
            table[i] = run_experiment(grid[i].l, grid[i].s, grid[i].t, spec);
        }
    };
    const unsigned n_threads =
        std::min<unsigned>(harness_thread_cap(), static_cast<unsigned>(grid.size()));
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned i = 0; i < n_threads; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    return table;
}

}  // namespace hll
