#include <catch2/catch_amalgamated.hpp>

#include <variant>

#include "hll/io.hpp"

using namespace hll;

TEST_CASE("minimal config fills service-model defaults") {
    const auto parsed = parse_config_text(
        R"({"lambda_t": 10, "block_size": 10, "block_timeout": 2.0, "seed": 42})");
    REQUIRE(std::holds_alternative<sim_config>(parsed));
    const auto& cfg = std::get<sim_config>(parsed);
    CHECK(cfg.lambda_t == 10.0);
    CHECK(cfg.seed == 42);
    CHECK(cfg.n_tx == 1000);
    const auto* endorse = std::get_if<exponential_params>(&cfg.endorse_model);
    REQUIRE(endorse != nullptr);
    CHECK(endorse->rate == 94.5);
    CHECK(std::holds_alternative<gamma_params>(cfg.order_overhead_model));
    CHECK(std::holds_alternative<gamma_params>(cfg.validate.base));
}

TEST_CASE("config invariant violations name the field") {
    CHECK_THROWS_WITH(
        parse_config_text(R"({"lambda_t": 10, "block_size": 0, "block_timeout": 2})"),
        Catch::Matchers::ContainsSubstring("block_size"));
    CHECK_THROWS_WITH(
        parse_config_text(R"({"lambda_t": -1, "block_size": 5, "block_timeout": 2})"),
        Catch::Matchers::ContainsSubstring("lambda_t"));
}

TEST_CASE("unknown keys are rejected with their location") {
    CHECK_THROWS_WITH(
        parse_config_text(
            R"({"lambda_t": 10, "block_size": 5, "block_timeout": 2, "blok_size": 1})"),
        Catch::Matchers::ContainsSubstring("blok_size"));
    CHECK_THROWS_WITH(
        parse_config_text(R"({"lambda_t": 10, "block_size": 5, "block_timeout": 2,
                              "endorse_model": {"family": "exponential", "rate": 9, "x": 1}})"),
        Catch::Matchers::ContainsSubstring("endorse_model"));
}

TEST_CASE("syntax errors carry line and column") {
    try {
        parse_config_text("{\n  \"lambda_t\": 10,\n  oops\n}", "bad.json");
        FAIL("expected config_error");
    } catch (const config_error& e) {
        CHECK(std::string(e.what()).find("bad.json:3:") != std::string::npos);
    }
}

TEST_CASE("sweep config parses grid and knobs") {
    const auto parsed = parse_config_text(R"({
        "grid": {"lambda_t": [10, 11], "block_size": [20], "block_timeout": [1.0]},
        "runs_per_point": 5,
        "n_tx": 500,
        "outlier_k": 4.0,
        "regime_thresholds": {"timeout_cut": 0.9}
    })");
    REQUIRE(std::holds_alternative<sweep_spec>(parsed));
    const auto& spec = std::get<sweep_spec>(parsed);
    CHECK(spec.lambda_t == std::vector<double>{10.0, 11.0});
    CHECK(spec.block_size == std::vector<int>{20});
    CHECK(spec.runs_per_point == 5);
    CHECK(spec.base.n_tx == 500);
    CHECK(spec.outlier_k == 4.0);
    CHECK(spec.thresholds.timeout_cut == 0.9);
    CHECK(spec.thresholds.size_cut == 0.95);
}

TEST_CASE("service model variants parse") {
    const auto parsed = parse_config_text(R"({
        "lambda_t": 10, "block_size": 5, "block_timeout": 2,
        "endorse_model": {"family": "constant", "value": 0.0},
        "order_overhead_model": {"family": "gev", "shape": 0.1, "scale": 0.2, "location": 0.3},
        "validate_model": {"base": {"family": "gamma", "shape": 2, "rate": 4},
                           "per_tx": {"family": "exp", "rate": 100}}
    })");
    const auto& cfg = std::get<sim_config>(parsed);
    CHECK(std::get<fixed_delay>(cfg.endorse_model).value == 0.0);
    CHECK(std::get<gev_params>(cfg.order_overhead_model).scale == 0.2);
    CHECK(std::get<gamma_params>(cfg.validate.base).rate == 4.0);
    CHECK(std::get<exponential_params>(cfg.validate.per_tx).rate == 100.0);
}

TEST_CASE("samples CSV round-trips byte-identically") {
    sim_config cfg;
    cfg.n_tx = 200;
    cfg.seed = 31;
    const auto res = run_simulation(cfg);
    const std::string text = emit_samples_csv("seed31", res.samples);
    const auto parsed = parse_samples_csv(text);
    REQUIRE(parsed.had_header);
    REQUIRE(parsed.rows.size() == res.samples.size());
    const std::string again = emit_samples_csv("seed31", parsed.rows);
    CHECK(text == again);
}

TEST_CASE("samples CSV accepts a bare numeric column") {
    const auto parsed = parse_samples_csv("1.5\n2.5\n0.75\n");
    CHECK_FALSE(parsed.had_header);
    CHECK(parsed.values == std::vector<double>{1.5, 2.5, 0.75});
    CHECK_THROWS_AS(parse_samples_csv("abc\n1.0\n"), io_error);
    CHECK_THROWS_AS(parse_samples_csv(""), io_error);
}

TEST_CASE("fit report serializes reported table values") {
    fit_report r;
    r.dist = gamma_params(8.9573, 5.5858);
    r.ks_statistic = 0.0457;
    r.ks_critical = ks_critical(1000, 0.01);
    r.passed = r.ks_statistic < r.ks_critical;
    r.empirical_mean = 1.6066;
    r.bestfit_mean = mean(r.dist);
    r.n = 1000;
    const auto j = fit_report_json(r);
    CHECK(j.at("family") == "gamma");
    CHECK(j.at("params").at("shape").get<double>() == 8.9573);
    CHECK(j.at("params").at("rate").get<double>() == 5.5858);
    CHECK(j.at("empirical_mean").get<double>() == 1.6066);
    CHECK(j.at("bestfit_mean").get<double>() == Catch::Approx(1.6035).margin(1e-4));
    CHECK(j.at("passed").get<bool>());
}

TEST_CASE("fit report JSON is a round-trip fixed point") {
    random_stream rng(8);
    sample_set s;
    for (int i = 0; i < 2000; ++i) s.values.push_back(sample(gamma_params(7.0, 5.0), rng));
    const auto report = select_best_fit(s, {family::gamma, family::gev});
    const auto j = fit_report_json(report);
    const auto round = fit_report_json(fit_report_from_json(j));
    CHECK(j.dump(2) == round.dump(2));
    CHECK(j.at("bestfit_mean").get<double>() == report.bestfit_mean);
}

TEST_CASE("sweep table rows are ordered lexicographically") {
    point_summary a, b, c;
    a.lambda_t = 10.0;
    a.block_size = 20;
    a.block_timeout = 2.0;
    b.lambda_t = 8.0;
    b.block_size = 30;
    b.block_timeout = 1.0;
    c.lambda_t = 10.0;
    c.block_size = 10;
    c.block_timeout = 1.0;
    const std::string csv = emit_sweep_table_csv({a, b, c});
    const auto l1 = csv.find("\n8,");
    const auto l2 = csv.find("\n10,10,");
    const auto l3 = csv.find("\n10,20,");
    CHECK(l1 != std::string::npos);
    CHECK(l1 < l2);
    CHECK(l2 < l3);
}

TEST_CASE("shipped scenario file parses to the expected sweep") {
    const auto parsed = parse_config(std::string(HLL_CONFIG_DIR) + "/table1_sweep.json");
    REQUIRE(std::holds_alternative<sweep_spec>(parsed));
    const auto& spec = std::get<sweep_spec>(parsed);
    CHECK(spec.lambda_t == std::vector<double>{10.0, 11.0, 12.0, 13.0});
    CHECK(spec.block_size == std::vector<int>{20});
    CHECK(spec.block_timeout == std::vector<double>{1.0});
    CHECK(spec.runs_per_point == 10);
    CHECK(spec.base.n_tx == 1000);
}

TEST_CASE("atomic write replaces the target completely") {
    namespace fs = std::filesystem;
    const auto dir = fs::temp_directory_path() / "hll_io_test";
    fs::create_directories(dir);
    const auto path = dir / "out.txt";
    atomic_write(path, "first\n");
    atomic_write(path, "second\n");
    std::ifstream in(path);
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    CHECK(content == "second\n");
    CHECK_FALSE(fs::exists(dir / "out.txt.tmp"));
    fs::remove_all(dir);
}
