#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "hll/fitting.hpp"
#include "hll/harness.hpp"
#include "hll/simulator.hpp"

namespace hll {

struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct io_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace io_detail {

using nlohmann::json;

inline std::pair<int, int> line_col(const std::string& text, std::size_t byte) {
    int line = 1, col = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

inline void reject_unknown_keys(const json& obj, const std::vector<std::string>& allowed,
                                const std::string& where) {
    for (const auto& [key, value] : obj.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
            throw config_error("unknown key \"" + key + "\" at " + where);
    }
}

template <typename T>
T get_field(const json& obj, const std::string& key, const std::string& where) {
    if (!obj.contains(key))
        throw config_error("missing key \"" + key + "\" at " + where);
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw config_error("bad value for \"" + key + "\" at " + where);
    }
}

template <typename T>
T get_or(const json& obj, const std::string& key, T fallback, const std::string& where) {
    if (!obj.contains(key)) return fallback;
    return get_field<T>(obj, key, where);
}

inline service_model parse_service_model(const json& obj, const std::string& where) {
    if (!obj.is_object()) throw config_error("service model must be an object at " + where);
    const auto fam = get_field<std::string>(obj, "family", where);
    try {
        if (fam == "exponential" || fam == "exp") {
            reject_unknown_keys(obj, {"family", "rate"}, where);
            return exponential_params(get_field<double>(obj, "rate", where));
        }
        if (fam == "gamma") {
            reject_unknown_keys(obj, {"family", "shape", "rate"}, where);
            return gamma_params(get_field<double>(obj, "shape", where),
                                get_field<double>(obj, "rate", where));
        }
        if (fam == "gev") {
            reject_unknown_keys(obj, {"family", "shape", "scale", "location"}, where);
            return gev_params(get_field<double>(obj, "shape", where),
                              get_field<double>(obj, "scale", where),
                              get_field<double>(obj, "location", where));
        }
        if (fam == "constant") {
            reject_unknown_keys(obj, {"family", "value"}, where);
            return fixed_delay(get_field<double>(obj, "value", where));
        }
    } catch (const std::invalid_argument& e) {
        throw config_error(std::string(e.what()) + " at " + where);
    }
    throw config_error("unknown service-model family \"" + fam + "\" at " + where);
}

inline json service_model_json(const service_model& m) {
    json j;
    if (const auto* e = std::get_if<exponential_params>(&m)) {
        j["family"] = "exponential";
        j["rate"] = e->rate;
    } else if (const auto* g = std::get_if<gamma_params>(&m)) {
        j["family"] = "gamma";
        j["shape"] = g->shape;
        j["rate"] = g->rate;
    } else if (const auto* v = std::get_if<gev_params>(&m)) {
        j["family"] = "gev";
        j["shape"] = v->shape;
        j["scale"] = v->scale;
        j["location"] = v->location;
    } else {
        j["family"] = "constant";
        j["value"] = std::get<fixed_delay>(m).value;
    }
    return j;
}

inline void apply_common_sim_fields(const json& obj, sim_config& cfg, const std::string& where) {
    if (obj.contains("endorse_model"))
        cfg.endorse_model = parse_service_model(obj.at("endorse_model"), where + "/endorse_model");
    if (obj.contains("order_overhead_model"))
        cfg.order_overhead_model =
            parse_service_model(obj.at("order_overhead_model"), where + "/order_overhead_model");
    if (obj.contains("validate_model")) {
        const json& vm = obj.at("validate_model");
        if (!vm.is_object()) throw config_error("validate_model must be an object at " + where);
        reject_unknown_keys(vm, {"base", "per_tx"}, where + "/validate_model");
        if (vm.contains("base"))
            cfg.validate.base = parse_service_model(vm.at("base"), where + "/validate_model/base");
        if (vm.contains("per_tx"))
            cfg.validate.per_tx =
                parse_service_model(vm.at("per_tx"), where + "/validate_model/per_tx");
    }
}

}  // namespace io_detail

using parsed_config = std::variant<sim_config, sweep_spec>;

// Key-value config with nested sections (JSON). Unknown keys are rejected
// with their location; syntax errors carry line/column. A "grid" section
// makes it a sweep spec, otherwise it is a single-run config.
inline parsed_config parse_config_text(const std::string& text, const std::string& path = "<config>") {
    using nlohmann::json;
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        const auto [line, col] = io_detail::line_col(text, e.byte > 0 ? e.byte - 1 : 0);
        throw config_error(path + ":" + std::to_string(line) + ":" + std::to_string(col) +
                           ": " + e.what());
    }
    if (!root.is_object()) throw config_error(path + ": top level must be an object");

    const bool is_sweep = root.contains("grid");
    try {
        if (!is_sweep) {
            io_detail::reject_unknown_keys(
                root,
                {"lambda_t", "block_size", "block_timeout", "n_tx", "warmup_discard", "seed",
                 "endorse_model", "order_overhead_model", "validate_model"},
                path);
            sim_config cfg;
            cfg.lambda_t = io_detail::get_field<double>(root, "lambda_t", path);
            cfg.block_size = io_detail::get_field<int>(root, "block_size", path);
            cfg.block_timeout = io_detail::get_field<double>(root, "block_timeout", path);
            cfg.n_tx = io_detail::get_or<int>(root, "n_tx", 1000, path);
            cfg.warmup_discard = io_detail::get_or<int>(root, "warmup_discard", 0, path);
            cfg.seed = io_detail::get_or<std::uint64_t>(root, "seed", 0, path);
            io_detail::apply_common_sim_fields(root, cfg, path);
            try {
                cfg.validate_invariants();
            } catch (const std::invalid_argument& e) {
                throw config_error(path + ": " + e.what());
            }
            return cfg;
        }
        io_detail::reject_unknown_keys(
            root,
            {"grid", "runs_per_point", "n_tx", "warmup_discard", "outlier_k", "significance",
             "regime_thresholds", "endorse_model", "order_overhead_model", "validate_model"},
            path);
        sweep_spec spec;
        const nlohmann::json& grid = root.at("grid");
        io_detail::reject_unknown_keys(grid, {"lambda_t", "block_size", "block_timeout"},
                                       path + "/grid");
        spec.lambda_t = io_detail::get_field<std::vector<double>>(grid, "lambda_t", path + "/grid");
        spec.block_size =
            io_detail::get_field<std::vector<int>>(grid, "block_size", path + "/grid");
        spec.block_timeout =
            io_detail::get_field<std::vector<double>>(grid, "block_timeout", path + "/grid");
        spec.runs_per_point = io_detail::get_or<int>(root, "runs_per_point", 10, path);
        spec.base.n_tx = io_detail::get_or<int>(root, "n_tx", 1000, path);
        spec.base.warmup_discard = io_detail::get_or<int>(root, "warmup_discard", 0, path);
        spec.outlier_k = io_detail::get_or<double>(root, "outlier_k", 5.0, path);
        spec.significance = io_detail::get_or<double>(root, "significance", 0.01, path);
        if (root.contains("regime_thresholds")) {
            const nlohmann::json& th = root.at("regime_thresholds");
            io_detail::reject_unknown_keys(th, {"timeout_cut", "size_cut", "tail_fraction"},
                                           path + "/regime_thresholds");
            spec.thresholds.timeout_cut =
                io_detail::get_or<double>(th, "timeout_cut", 0.95, path);
            spec.thresholds.size_cut = io_detail::get_or<double>(th, "size_cut", 0.95, path);
            spec.thresholds.tail_fraction =
                io_detail::get_or<double>(th, "tail_fraction", 0.01, path);
        }
        io_detail::apply_common_sim_fields(root, spec.base, path);
        try {
            spec.validate_invariants();
        } catch (const std::invalid_argument& e) {
            throw config_error(path + ": " + e.what());
        }
        return spec;
    } catch (const nlohmann::json::exception& e) {
        throw config_error(path + ": " + e.what());
    }
}

inline parsed_config parse_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw config_error("cannot open config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str(), path);
}

// ----- emission -----------------------------------------------------------------

// 9 significant digits, %g form: enough to round-trip the latencies stably
inline std::string format_g9(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

// write-temp-then-rename; partial output never lands under the final name
inline void atomic_write(const std::filesystem::path& path, const std::string& content) {
    namespace fs = std::filesystem;
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw io_error("cannot open for writing: " + tmp.string());
        out << content;
        if (!out) throw io_error("write failed: " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) throw io_error("rename failed: " + path.string() + ": " + ec.message());
}

inline constexpr const char* samples_csv_header =
    "run_id,tx_id,t_gen,endorse_latency,order_latency,validate_latency,total_latency,block_id,"
    "cut_reason";

inline std::string emit_samples_csv(const std::string& run_id,
                                    const std::vector<latency_sample>& samples) {
    std::string out = samples_csv_header;
    out += '\n';
    for (const auto& s : samples) {
        out += run_id;
        out += ',';
        out += std::to_string(s.tx_id);
        out += ',';
        out += format_g9(s.t_gen);
        out += ',';
        out += format_g9(s.endorse_latency);
        out += ',';
        out += format_g9(s.order_latency);
        out += ',';
        out += format_g9(s.validate_latency);
        out += ',';
        out += format_g9(s.total_latency);
        out += ',';
        out += std::to_string(s.block_id);
        out += ',';
        out += to_string(s.reason);
        out += '\n';
    }
    return out;
}

inline std::string emit_blocks_csv(const std::vector<block_record>& blocks) {
    std::string out = "block_id,n_tx,cut_reason,cut_time,validation_start,commit_time\n";
    for (const auto& b : blocks) {
        out += std::to_string(b.block_id);
        out += ',';
        out += std::to_string(b.tx_ids.size());
        out += ',';
        out += to_string(b.reason);
        out += ',';
        out += format_g9(b.cut_time);
        out += ',';
        out += format_g9(b.validation_start);
        out += ',';
        out += format_g9(b.commit_time);
        out += '\n';
    }
    return out;
}

struct parsed_samples {
    std::vector<double> values;
    std::vector<latency_sample> rows;  // full rows when the sample header was present
    bool had_header = false;
};

// Accepts the emitted sample schema (column selected by name) or a bare
// one-number-per-line list.
inline parsed_samples parse_samples_csv(const std::string& text,
                                        const std::string& column = "total_latency",
                                        const std::string& path = "<samples>") {
    parsed_samples out;
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw io_error(path + ": empty samples file");
    auto split = [](const std::string& l) {
        std::vector<std::string> f;
        std::string cur;
        for (char c : l) {
            if (c == ',') {
                f.push_back(cur);
                cur.clear();
            } else if (c != '\r') {
                cur += c;
            }
        }
        f.push_back(cur);
        return f;
    };
    const auto header = split(line);
    int col = -1;
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == column) col = static_cast<int>(i);
    if (col >= 0) {
        out.had_header = true;
        const bool full_schema = line == samples_csv_header;
        std::size_t line_no = 1;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.empty()) continue;
            const auto f = split(line);
            if (f.size() != header.size())
                throw io_error(path + ":" + std::to_string(line_no) + ": wrong field count");
            try {
                out.values.push_back(std::stod(f[static_cast<std::size_t>(col)]));
                if (full_schema) {
                    latency_sample s;
                    s.tx_id = std::stoi(f[1]);
                    s.t_gen = std::stod(f[2]);
                    s.endorse_latency = std::stod(f[3]);
                    s.order_latency = std::stod(f[4]);
                    s.validate_latency = std::stod(f[5]);
                    s.total_latency = std::stod(f[6]);
                    s.block_id = std::stoi(f[7]);
                    s.reason = f[8] == "size" ? cut_reason::size : cut_reason::timeout;
                    out.rows.push_back(s);
                }
            } catch (const std::exception&) {
                throw io_error(path + ":" + std::to_string(line_no) + ": bad number");
            }
        }
        return out;
    }
    // bare numeric list; first line must already be a number
    std::size_t line_no = 0;
    std::istringstream again(text);
    while (std::getline(again, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        try {
            out.values.push_back(std::stod(line));
        } catch (const std::exception&) {
            throw io_error(path + ":" + std::to_string(line_no) +
                           ": expected a number or the sample CSV header");
        }
    }
    if (out.values.empty()) throw io_error(path + ": no samples");
    return out;
}

// ----- fit report JSON ------------------------------------------------------------

inline nlohmann::json fit_report_json(const fit_report& r) {
    nlohmann::json j;
    const family f = family_of(r.dist);
    j["family"] = family_name(f);
    nlohmann::json params;
    if (const auto* e = std::get_if<exponential_params>(&r.dist)) {
        params["rate"] = e->rate;
    } else if (const auto* g = std::get_if<gamma_params>(&r.dist)) {
        params["shape"] = g->shape;
        params["rate"] = g->rate;
    } else {
        const auto& v = std::get<gev_params>(r.dist);
        params["shape"] = v.shape;
        params["scale"] = v.scale;
        params["location"] = v.location;
    }
    j["params"] = params;
    j["ks_statistic"] = r.ks_statistic;
    j["ks_critical"] = r.ks_critical;
    j["passed"] = r.passed;
    j["empirical_mean"] = r.empirical_mean;
    j["bestfit_mean"] = r.bestfit_mean;
    j["n"] = r.n;
    j["log_likelihood"] = r.log_likelihood;
    return j;
}

inline fit_report fit_report_from_json(const nlohmann::json& j) {
    fit_report r;
    const std::string fam = j.at("family").get<std::string>();
    const nlohmann::json& p = j.at("params");
    if (fam == "exponential")
        r.dist = exponential_params(p.at("rate").get<double>());
    else if (fam == "gamma")
        r.dist = gamma_params(p.at("shape").get<double>(), p.at("rate").get<double>());
    else if (fam == "gev")
        r.dist = gev_params(p.at("shape").get<double>(), p.at("scale").get<double>(),
                            p.at("location").get<double>());
    else
        throw io_error("fit report: unknown family " + fam);
    r.ks_statistic = j.at("ks_statistic").get<double>();
    r.ks_critical = j.at("ks_critical").get<double>();
    r.passed = j.at("passed").get<bool>();
    r.empirical_mean = j.at("empirical_mean").get<double>();
    r.bestfit_mean = j.at("bestfit_mean").get<double>();
    r.n = j.at("n").get<std::size_t>();
    r.log_likelihood = j.value("log_likelihood", 0.0);
    return r;
}

// ----- sweep table -----------------------------------------------------------------

inline constexpr const char* sweep_table_header =
    "lambda_t,block_size,block_timeout,alpha,beta,ks_statistic,ks_critical,passed,"
    "empirical_mean,bestfit_mean,best_fit_family,regime,runs_used";

// Rows mirror the reference result table (estimated Gamma parameters of the
// total latency, KS statistic, empirical and best-fit means) plus the
// regime label; ordered by (lambda_t, block_size, block_timeout).
inline std::string emit_sweep_table_csv(std::vector<point_summary> table) {
    std::sort(table.begin(), table.end(), [](const point_summary& a, const point_summary& b) {
        if (a.lambda_t != b.lambda_t) return a.lambda_t < b.lambda_t;
        if (a.block_size != b.block_size) return a.block_size < b.block_size;
        return a.block_timeout < b.block_timeout;
    });
    std::string out = sweep_table_header;
    out += '\n';
    for (const auto& p : table) {
        const latency_type_summary* total = nullptr;
        for (const auto& t : p.per_type)
            if (t.latency_type == "total") total = &t;
        out += format_g9(p.lambda_t);
        out += ',';
        out += std::to_string(p.block_size);
        out += ',';
        out += format_g9(p.block_timeout);
        out += ',';
        if (total && total->avg_params.size() == 2) {
            out += format_g9(total->avg_params[0]);
            out += ',';
            out += format_g9(total->avg_params[1]);
            out += ',';
            out += format_g9(total->avg_ks_statistic);
            out += ',';
            out += format_g9(total->ks_critical);
            out += ',';
            out += total->passed ? "true" : "false";
            out += ',';
            out += format_g9(total->empirical_mean);
            out += ',';
            out += format_g9(total->bestfit_mean);
        } else {
            out += ",,,,,,";
        }
        out += ',';
        out += p.best_fit_family;
        out += ',';
        out += to_string(p.verdict.label);
        out += ',';
        out += std::to_string(p.runs_used);
        out += '\n';
    }
    return out;
}

inline nlohmann::json point_summary_json(const point_summary& p) {
    nlohmann::json j;
    j["lambda_t"] = p.lambda_t;
    j["block_size"] = p.block_size;
    j["block_timeout"] = p.block_timeout;
    j["mean_total"] = p.mean_total;
    j["runs_used"] = p.runs_used;
    j["excluded_runs"] = p.excluded_runs;
    j["errors"] = p.errors;
    j["regime"] = to_string(p.verdict.label);
    j["timeout_cut_fraction"] = p.verdict.timeout_cut_fraction;
    j["size_cut_fraction"] = p.verdict.size_cut_fraction;
    j["tail_fraction"] = p.verdict.tail_fraction;
    if (p.best_fit_total) j["best_fit_total"] = fit_report_json(*p.best_fit_total);
    nlohmann::json types = nlohmann::json::array();
    for (const auto& t : p.per_type) {
        nlohmann::json tj;
        tj["latency_type"] = t.latency_type;
        tj["family"] = family_name(t.fitted_family);
        tj["avg_params"] = t.avg_params;
        tj["avg_ks_statistic"] = t.avg_ks_statistic;
        tj["ks_critical"] = t.ks_critical;
        tj["passed"] = t.passed;
        tj["empirical_mean"] = t.empirical_mean;
        tj["bestfit_mean"] = t.bestfit_mean;
        tj["n_per_run"] = t.n_per_run;
        tj["n_pooled"] = t.n_pooled;
        types.push_back(tj);
    }
    j["per_type"] = types;
    return j;
}

// Histogram and CDF emission for downstream plotting: plain columns, no
// plotting dependency.
inline std::string emit_histogram_csv(const histogram& h) {
    std::string out = "bin_lower,count,probability_per_dt\n";
    for (std::size_t i = 0; i < h.bins.size(); ++i) {
        out += format_g9(h.bins[i].first);
        out += ',';
        out += std::to_string(h.bins[i].second);
        out += ',';
        out += format_g9(h.normalized_height(i));
        out += '\n';
    }
    return out;
}

inline std::string emit_cdf_csv(const std::vector<std::pair<double, double>>& cdf_table) {
    std::string out = "x,cdf\n";
    for (const auto& [x, p] : cdf_table) {
        out += format_g9(x);
        out += ',';
        out += format_g9(p);
        out += '\n';
    }
    return out;
}

}  // namespace hll
