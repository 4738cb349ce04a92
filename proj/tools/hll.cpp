// hll - Hyperledger-Fabric-style latency simulator and distribution-fitting
// toolkit. Subcommands: simulate, fit, kstest, sweep, report.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "hll/io.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_usage = 1;    // usage or config errors
constexpr int exit_runtime = 2;  // runtime or fit failures

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw hll::config_error("cannot open: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

hll::distribution parse_dist_spec(const std::string& spec) {
    const auto colon = spec.find(':');
    if (colon == std::string::npos)
        throw hll::config_error("distribution spec must look like family:p1[,p2[,p3]]");
    const std::string fam = spec.substr(0, colon);
    std::vector<double> params;
    std::stringstream rest(spec.substr(colon + 1));
    std::string tok;
    while (std::getline(rest, tok, ','))
        params.push_back(std::stod(tok));
    if ((fam == "exp" || fam == "exponential") && params.size() == 1)
        return hll::exponential_params(params[0]);
    if (fam == "gamma" && params.size() == 2)
        return hll::gamma_params(params[0], params[1]);
    if (fam == "gev" && params.size() == 3)
        return hll::gev_params(params[0], params[1], params[2]);
    throw hll::config_error("bad distribution spec \"" + spec +
                            "\" (expected exp:rate | gamma:shape,rate | gev:shape,scale,location)");
}

std::string stamp_line() {
    const auto now = std::chrono::system_clock::now();
    const auto t = std::chrono::system_clock::to_time_t(now);
    char buf[64];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

int cmd_simulate(const std::string& config_path, std::uint64_t seed, const std::string& out_dir,
                 double bin_width, bool stamp) {
    auto parsed = hll::parse_config(config_path);
    auto* cfg = std::get_if<hll::sim_config>(&parsed);
    if (!cfg) throw hll::config_error(config_path + ": expected a simulation config, got a sweep");
    cfg->seed = seed;
    const auto result = hll::run_simulation(*cfg);

    fs::create_directories(out_dir);
    const std::string run_id = "seed" + std::to_string(seed);
    hll::atomic_write(fs::path(out_dir) / "samples.csv",
                      hll::emit_samples_csv(run_id, result.samples));
    hll::atomic_write(fs::path(out_dir) / "blocks.csv", hll::emit_blocks_csv(result.blocks));

    // per-latency-type histograms and empirical CDF tables for plotting
    const std::pair<const char*, double hll::latency_sample::*> columns[] = {
        {"endorse", &hll::latency_sample::endorse_latency},
        {"order", &hll::latency_sample::order_latency},
        {"validate", &hll::latency_sample::validate_latency},
        {"total", &hll::latency_sample::total_latency},
    };
    for (const auto& [name, member] : columns) {
        std::vector<double> values;
        values.reserve(result.samples.size());
        for (const auto& s : result.samples) values.push_back(s.*member);
        hll::atomic_write(fs::path(out_dir) / ("hist_" + std::string(name) + ".csv"),
                          hll::emit_histogram_csv(hll::make_histogram(values, bin_width)));
        hll::atomic_write(fs::path(out_dir) / ("cdf_" + std::string(name) + ".csv"),
                          hll::emit_cdf_csv(hll::make_cdf(std::move(values))));
    }
    if (stamp)
        hll::atomic_write(fs::path(out_dir) / "stamp.txt", stamp_line() + "\n");
    return exit_ok;
}

int cmd_fit(const std::string& samples_path, const std::string& column, const std::string& family,
            double alpha, const std::string& out_path) {
    const auto parsed = hll::parse_samples_csv(read_file(samples_path), column, samples_path);
    hll::sample_set s;
    s.values = parsed.values;
    s.run_id = samples_path;

    hll::fit_report report;
    if (family == "auto") {
        report = hll::select_best_fit(
            s, {hll::family::exponential, hll::family::gamma, hll::family::gev}, alpha);
    } else {
        hll::family f;
        if (family == "exp" || family == "exponential")
            f = hll::family::exponential;
        else if (family == "gamma")
            f = hll::family::gamma;
        else if (family == "gev")
            f = hll::family::gev;
        else
            throw hll::config_error("unknown family \"" + family + "\"");
        report = hll::make_fit_report(s, hll::fit_family(f, s), alpha);
    }
    const std::string text = hll::fit_report_json(report).dump(2) + "\n";
    if (out_path.empty())
        std::cout << text;
    else
        hll::atomic_write(out_path, text);
    return exit_ok;
}

int cmd_kstest(const std::string& samples_path, const std::string& column,
               const std::string& dist_spec, double alpha) {
    const auto parsed = hll::parse_samples_csv(read_file(samples_path), column, samples_path);
    hll::sample_set s;
    s.values = parsed.values;
    const auto d = parse_dist_spec(dist_spec);
    const auto r = hll::ks_test(s, d, alpha);
    nlohmann::json j;
    j["statistic"] = r.statistic;
    j["critical_value"] = r.critical_value;
    j["significance"] = r.significance;
    j["n"] = r.n;
    j["passed"] = r.passed;
    std::cout << j.dump(2) << "\n";
    return exit_ok;
}

int cmd_sweep(const std::string& config_path, std::uint64_t seed, const std::string& out_dir,
              bool stamp) {
    auto parsed = hll::parse_config(config_path);
    auto* spec = std::get_if<hll::sweep_spec>(&parsed);
    if (!spec) throw hll::config_error(config_path + ": expected a sweep config (with a grid)");
    spec->base.seed = seed;
    const auto table = hll::sweep(*spec);

    fs::create_directories(out_dir);
    hll::atomic_write(fs::path(out_dir) / "sweep_table.csv", hll::emit_sweep_table_csv(table));
    nlohmann::json points = nlohmann::json::array();
    for (const auto& p : table) points.push_back(hll::point_summary_json(p));
    nlohmann::json root;
    root["seed"] = seed;
    root["points"] = points;
    if (stamp) root["generated_at"] = stamp_line();
    hll::atomic_write(fs::path(out_dir) / "reports.json", root.dump(2) + "\n");
    return exit_ok;
}

int cmd_report(const std::string& in_dir, const std::string& out_path) {
    const auto text = read_file((fs::path(in_dir) / "reports.json").string());
    nlohmann::json root = nlohmann::json::parse(text);
    std::vector<hll::point_summary> table;
    for (const auto& pj : root.at("points")) {
        hll::point_summary p;
        p.lambda_t = pj.at("lambda_t").get<double>();
        p.block_size = pj.at("block_size").get<int>();
        p.block_timeout = pj.at("block_timeout").get<double>();
        p.mean_total = pj.at("mean_total").get<double>();
        p.runs_used = pj.at("runs_used").get<int>();
        p.best_fit_family = pj.contains("best_fit_total")
                                ? pj.at("best_fit_total").at("family").get<std::string>()
                                : "";
        const std::string reg = pj.at("regime").get<std::string>();
        p.verdict.label = reg == "timeout-dominant" ? hll::regime::timeout_dominant
                          : reg == "size-dominant"  ? hll::regime::size_dominant
                                                    : hll::regime::feasible;
        for (const auto& tj : pj.at("per_type")) {
            hll::latency_type_summary t;
            t.latency_type = tj.at("latency_type").get<std::string>();
            t.avg_params = tj.at("avg_params").get<std::vector<double>>();
            t.avg_ks_statistic = tj.at("avg_ks_statistic").get<double>();
            t.ks_critical = tj.at("ks_critical").get<double>();
            t.passed = tj.at("passed").get<bool>();
            t.empirical_mean = tj.at("empirical_mean").get<double>();
            t.bestfit_mean = tj.at("bestfit_mean").get<double>();
            p.per_type.push_back(std::move(t));
        }
        table.push_back(std::move(p));
    }
    hll::atomic_write(out_path, hll::emit_sweep_table_csv(table));
    return exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"HLF transaction-pipeline latency simulator and fitting toolkit"};
    app.require_subcommand(1);

    std::string config_path, out_dir, out_path, samples_path, dist_spec;
    std::string column = "total_latency";
    std::string family = "auto";
    double alpha = 0.01;
    double bin_width = 0.1;
    std::uint64_t seed = 0;
    bool stamp = false;

    auto* sim = app.add_subcommand("simulate", "run one seeded simulation");
    sim->add_option("--config", config_path, "config file (JSON)")->required();
    sim->add_option("--seed", seed, "RNG seed")->required();
    sim->add_option("--out", out_dir, "output directory")->required();
    sim->add_option("--bin-width", bin_width, "histogram bin width, seconds (default 0.1)");
    sim->add_flag("--stamp", stamp, "include a timestamp file");

    auto* fit = app.add_subcommand("fit", "fit a distribution to latency samples");
    fit->add_option("--samples", samples_path, "samples CSV")->required();
    fit->add_option("--column", column, "column to read (default total_latency)");
    fit->add_option("--family", family, "exp|gamma|gev|auto");
    fit->add_option("--alpha", alpha, "KS significance level");
    fit->add_option("--out", out_path, "output JSON (stdout when omitted)");

    auto* ks = app.add_subcommand("kstest", "KS goodness-of-fit test");
    ks->add_option("--samples", samples_path, "samples CSV")->required();
    ks->add_option("--column", column, "column to read (default total_latency)");
    ks->add_option("--dist", dist_spec, "family:params, e.g. gamma:8.9573,5.5858")->required();
    ks->add_option("--alpha", alpha, "KS significance level");

    auto* sw = app.add_subcommand("sweep", "run a parameter sweep");
    sw->add_option("--config", config_path, "sweep config file (JSON)")->required();
    sw->add_option("--seed", seed, "base RNG seed")->required();
    sw->add_option("--out", out_dir, "output directory")->required();
    sw->add_flag("--stamp", stamp, "include a timestamp in reports.json");

    auto* rep = app.add_subcommand("report", "rebuild the table from sweep output");
    rep->add_option("--in", out_dir, "sweep output directory")->required();
    rep->add_option("--out", out_path, "table CSV path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? exit_ok : exit_usage;
    }

    try {
        if (sim->parsed()) return cmd_simulate(config_path, seed, out_dir, bin_width, stamp);
        if (fit->parsed()) return cmd_fit(samples_path, column, family, alpha, out_path);
        if (ks->parsed()) return cmd_kstest(samples_path, column, dist_spec, alpha);
        if (sw->parsed()) return cmd_sweep(config_path, seed, out_dir, stamp);
        if (rep->parsed()) return cmd_report(out_dir, out_path);
    } catch (const hll::config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return exit_usage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_usage;
    } catch (const hll::fit_error& e) {
        std::cerr << "fit error: " << e.what() << "\n";
        return exit_runtime;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_runtime;
    }
    return exit_usage;
}
