#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "satrm/harness.hpp"

using namespace satrm;

TEST_CASE("minimal scenario file picks up the standard link budget") {
    const Scenario sc = scenario_from_json(R"({"r_target": [2, 2, 3, 3.5, 4]})");
    CHECK(sc.num_feeds() == 4);
    CHECK(sc.num_users() == 5);
    CHECK(sc.physics.g_max_linear == doctest::Approx(std::pow(10.0, 3.85)).epsilon(1e-12));
    CHECK(sc.physics.g_rx_linear == doctest::Approx(std::pow(10.0, 3.97)).epsilon(1e-12));
    CHECK(sc.physics.t_sys_kelvin == 150.0);
    CHECK(sc.physics.bandwidth_hz == 400e6);
    CHECK(sc.physics.per_feed_power_w == doctest::Approx(0.1419).epsilon(1e-12));
    CHECK(sc.physics.rain_mu_db == -2.6);
    CHECK(sc.physics.rain_sigma_db == 1.63);
    CHECK(sc.perturbation.delta_fb_rad ==
          doctest::Approx(5.0 * 0.017453292519943295).epsilon(1e-12));
    CHECK(sc.opts.eta == 0.91);
    CHECK(sc.opts.max_iter == 20);
    CHECK(sc.opts.tol == 1e-4);
    CHECK(sc.geometry.user_positions.size() == 5);
}

TEST_CASE("scenario validation names offending fields") {
    CHECK_THROWS_WITH_AS(scenario_from_json(R"({"r_target": [1, 2]})"),
                         doctest::Contains("r_target"), std::invalid_argument);
    CHECK_THROWS_AS(scenario_from_json("{"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(scenario_from_json(R"({"trials": 0, "r_target": [1,1,1,1,1]})"),
                         doctest::Contains("trials"), std::invalid_argument);
}

TEST_CASE("scenario save/load round-trip") {
    Scenario sc = default_scenario(42);
    sc.opts.eta = 0.73;
    sc.opts.objective_norm = ObjectiveNorm::l1;
    sc.trials = 7;
    const Scenario back = scenario_from_json(scenario_to_json(sc));
    CHECK(back.seed == sc.seed);
    CHECK(back.trials == sc.trials);
    CHECK((back.r_target - sc.r_target).cwiseAbs().maxCoeff() == 0.0);
    CHECK(back.opts.eta == sc.opts.eta);
    CHECK(back.opts.objective_norm == sc.opts.objective_norm);
    CHECK(back.geometry.user_positions.size() == sc.geometry.user_positions.size());
    for (std::size_t i = 0; i < sc.geometry.user_positions.size(); ++i)
        CHECK((back.geometry.user_positions[i] - sc.geometry.user_positions[i]).norm() <
              1e-9);
    CHECK(back.physics.g_max_linear ==
          doctest::Approx(sc.physics.g_max_linear).epsilon(1e-12));
    CHECK(back.perturbation.delta_fb_rad ==
          doctest::Approx(sc.perturbation.delta_fb_rad).epsilon(1e-12));
    // a second cycle is byte-stable
    CHECK(scenario_to_json(back) == scenario_to_json(scenario_from_json(scenario_to_json(back))));
}

TEST_CASE("paired trials reuse the identical channel per trial index") {
    const Scenario sc = default_scenario(5);
    const std::uint64_t t0 = RandomStream::mix(RandomStream::mix(sc.seed, 0x7472696cULL), 0);
    const ChannelSet a = synthesize_channel(sc, t0);
    const ChannelSet b = synthesize_channel(sc, t0);
    CHECK(a.content_hash() == b.content_hash());
}

TEST_CASE("run_trials is deterministic across runs and thread counts") {
    Scenario sc = default_scenario(11);
    sc.trials = 2;
    const std::string a = format_results(run_trials(sc, Scheme::rm_sdma, 1), EmitFormat::csv);
    const std::string b = format_results(run_trials(sc, Scheme::rm_sdma, 1), EmitFormat::csv);
    const std::string c = format_results(run_trials(sc, Scheme::rm_sdma, 2), EmitFormat::csv);
    CHECK(a == b);
    CHECK(a == c);
}

TEST_CASE("metric identities hold row by row") {
    Scenario sc = default_scenario(13);
    sc.trials = 2;
    const MetricsTable table = run_trials(sc, Scheme::rm_rsma, 2);
    REQUIRE(table.rows.size() == 10);
    for (const auto& row : table.rows) {
        CHECK(row.unmet * row.unused == 0.0);
        if (row.unmet > 0.0 || row.unused > 0.0)
            CHECK(row.unmet - row.unused ==
                  doctest::Approx(row.target_bps_hz - row.rate_bps_hz).epsilon(1e-12));
        CHECK(row.satisfaction_pct >= 0.0);
        CHECK(row.satisfaction_pct <= 100.0);
        if (row.unmet == 0.0)
            CHECK(row.satisfaction_pct == 100.0);
        else
            CHECK(row.satisfaction_pct < 100.0);
    }
}

TEST_CASE("aggregates equal a recomputation from the rows") {
    Scenario sc = default_scenario(17);
    sc.trials = 3;
    const MetricsTable table = run_trials(sc, Scheme::mmse_rsma, 2);
    const auto aggs = table.aggregates();
    REQUIRE(aggs.size() == 1);

    std::vector<double> trial_means;
    for (int t = 0; t < 3; ++t) {
        double sum = 0.0;
        int n = 0;
        bool ok = true;
        for (const auto& row : table.rows)
            if (row.trial == t) {
                sum += row.satisfaction_pct;
                ++n;
                ok = ok && row.ok;
            }
        if (ok && n > 0)
            trial_means.push_back(sum / n);
    }
    double mean = 0.0;
    for (double v : trial_means)
        mean += v;
    mean /= trial_means.size();
    CHECK(aggs[0].trials_ok == static_cast<int>(trial_means.size()));
    CHECK(aggs[0].mean_satisfaction_pct == doctest::Approx(mean).epsilon(1e-12));
}

TEST_CASE("emission rejects tables without successful trials") {
    MetricsTable table;
    TrialRecord dead;
    dead.scheme = "RM-RSMA";
    dead.ok = false;
    dead.status = "error: synthetic";
    table.rows.push_back(dead);
    CHECK_THROWS_AS(format_results(table, EmitFormat::csv), std::runtime_error);
}

TEST_CASE("CSV values round-trip at the emitted precision") {
    Scenario sc = default_scenario(19);
    sc.trials = 1;
    const MetricsTable table = run_trials(sc, Scheme::rm_sdma, 1);
    const std::string csv = format_results(table, EmitFormat::csv);

    std::istringstream lines(csv);
    std::string line;
    std::getline(lines, line); // header
    CHECK(line ==
          "scheme,trial,user,target_bps_hz,rate_bps_hz,unmet,unused,satisfaction_pct,power_w,"
          "iterations,status");
    int row_idx = 0;
    while (std::getline(lines, line)) {
        std::istringstream fields(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(fields, cell, ','))
            cells.push_back(cell);
        REQUIRE(cells.size() == 11);
        const auto& row = table.rows[static_cast<std::size_t>(row_idx)];
        CHECK(std::stod(cells[4]) ==
              doctest::Approx(row.rate_bps_hz).epsilon(1e-8)); // 9 significant digits
        CHECK(std::stod(cells[7]) == doctest::Approx(row.satisfaction_pct).epsilon(1e-8));
        ++row_idx;
    }
    CHECK(row_idx == 5);
}

TEST_CASE("JSON emission mirrors the CSV rows and adds aggregates") {
    Scenario sc = default_scenario(23);
    sc.trials = 1;
    const MetricsTable table = run_trials(sc, Scheme::rm_sdma, 1);
    const std::string json = format_results(table, EmitFormat::json);
    CHECK(json.find("\"rows\"") != std::string::npos);
    CHECK(json.find("\"aggregates\"") != std::string::npos);
    CHECK(json.find("\"mean_satisfaction_pct\"") != std::string::npos);
    CHECK(json.find("RM-SDMA") != std::string::npos);
}

TEST_CASE("effective rates clamp the common part to what is decodable") {
    Eigen::VectorXd r_common(2), r_private(2), c(2);
    r_common << 1.0, 2.0;
    r_private << 0.5, 0.5;
    c << 1.0, 1.0; // sum 2 > min common rate 1 -> scale by 0.5
    const Eigen::VectorXd eff = effective_total_rates(r_common, r_private, c);
    CHECK(eff(0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(eff(1) == doctest::Approx(1.0).epsilon(1e-12));

    c << 0.2, 0.2; // decodable: unchanged
    const Eigen::VectorXd same = effective_total_rates(r_common, r_private, c);
    CHECK(same(0) == doctest::Approx(0.7).epsilon(1e-12));
}

TEST_CASE("ablation coincides with RM-RSMA when both deltas are zero") {
    Scenario sc = default_scenario(29);
    sc.trials = 1;
    sc.perturbation = PerturbationModel{0.0, 0.0};
    const ChannelSet ch = synthesize_channel(sc, 31);
    const PerturbationStats st = build_stats(ch.h_hat, sc.perturbation);
    RmOptions a = sc.opts;
    a.scheme = Scheme::rm_rsma;
    RmOptions b = sc.opts;
    b.scheme = Scheme::rm_rsma_noinfo;
    const RmSolution sa = solve_scheme(ch, st, sc, a);
    const RmSolution sb = solve_scheme(ch, st, sc, b);
    CHECK((sa.precoder.p - sb.precoder.p).cwiseAbs().maxCoeff() == 0.0);
    CHECK((sa.rates.r_total - sb.rates.r_total).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("eta sweep reports one row per (norm, grid point) with valid ranges") {
    Scenario sc = default_scenario(37);
    sc.trials = 2;
    const auto rows = sweep_eta(sc, {0.5, 0.9}, 2);
    REQUIRE(rows.size() == 4); // two norms x two grid points
    for (const auto& row : rows) {
        CHECK(row.mean_gap >= 0.0);
        CHECK(row.mean_power_w >= 0.0);
        CHECK(row.mean_power_w <= 4.0 * sc.physics.per_feed_power_w + 1e-6);
    }
    CHECK_THROWS_AS(sweep_eta(sc, {0.0, 0.5}, 1), std::invalid_argument);
}

TEST_CASE("delta sweep scores every scheme including the ablation") {
    Scenario sc = default_scenario(41);
    sc.trials = 2;
    const auto rows = sweep_delta_fb(sc, {0.0}, 0.0, 2, 200);
    REQUIRE(rows.size() == 5);
    double rsma = -1.0, noinfo = -2.0;
    for (const auto& row : rows) {
        CHECK(row.mean_satisfaction_pct >= 0.0);
        CHECK(row.mean_satisfaction_pct <= 100.0);
        if (row.scheme == Scheme::rm_rsma)
            rsma = row.mean_satisfaction_pct;
        if (row.scheme == Scheme::rm_rsma_noinfo)
            noinfo = row.mean_satisfaction_pct;
    }
    // at (0, 0) the ablation designs with the same (zero) statistics
    CHECK(rsma == doctest::Approx(noinfo).epsilon(1e-9));
    CHECK_THROWS_AS(sweep_delta_fb(sc, {-1.0}, 2.0, 1, 10), std::invalid_argument);
}

TEST_CASE("golden CSV snapshot for the pinned regression scenario") {
    std::ifstream golden(std::string(SATRM_TEST_DATA_DIR) + "/golden_run.csv",
                         std::ios::binary);
    REQUIRE_MESSAGE(golden.good(), "golden_run.csv missing");
    std::stringstream expected;
    expected << golden.rdbuf();

    Scenario sc = default_scenario(2024);
    sc.trials = 2;
    const MetricsTable table = run_trials(sc, Scheme::rm_rsma, 2);
    CHECK(format_results(table, EmitFormat::csv) == expected.str());
}
