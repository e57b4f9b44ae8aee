// SPDX-License-Identifier: Apache-2.0
//
// satrm: RSMA rate-matching precoder design and link simulation for
// multibeam LEO satellite downlinks
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>

#include "satrm/harness.hpp"

namespace {

std::vector<double> parse_grid(const std::string& text) {
    std::vector<double> out;
    if (text.find(':') != std::string::npos) {
        double a = 0.0, b = 0.0, step = 0.0;
        if (std::sscanf(text.c_str(), "%lf:%lf:%lf", &a, &b, &step) != 3 || step <= 0.0)
            throw std::invalid_argument("grid must be a:b:step with step > 0");
        for (double v = a; v <= b + 1e-12; v += step)
            out.push_back(v);
        return out;
    }
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ','))
        out.push_back(std::stod(item));
    if (out.empty())
        throw std::invalid_argument("empty grid");
    return out;
}

void write_text(const std::string& path, const std::string& text) {
    if (path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw std::runtime_error("cannot write " + path);
    os << text;
}

std::string fmt9(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"rate-matching RSMA precoder design for multibeam LEO downlinks"};
    app.require_subcommand(1);

    std::string scenario_path, out_path, format = "csv", scheme_name, objective = "both";
    std::string grid_text;
    int trials_override = -1, threads = 1, draws = 2000, precoders = 20;
    long long seed_override = -1;
    double delta_ce_deg = 2.0;

    CLI::App* run = app.add_subcommand("run", "run seeded Monte Carlo trials of one scheme");
    run->add_option("--scenario", scenario_path, "scenario JSON file")->required();
    run->add_option("--scheme", scheme_name, "RM-RSMA | RM-SDMA | MMSE-RSMA | RM-4color");
    run->add_option("--trials", trials_override, "override trial count");
    run->add_option("--seed", seed_override, "override master seed");
    run->add_option("--out", out_path, "output path (default stdout)");
    run->add_option("--format", format, "csv | json")
        ->check(CLI::IsMember({"csv", "json"}));
    run->add_option("--threads", threads, "worker threads (output is identical)");

    CLI::App* sweep_eta_cmd =
        app.add_subcommand("sweep-eta", "rate gap and power versus the regularization weight");
    sweep_eta_cmd->add_option("--scenario", scenario_path, "scenario JSON file")->required();
    sweep_eta_cmd->add_option("--grid", grid_text, "a:b:step or comma list")->required();
    sweep_eta_cmd->add_option("--objective", objective, "l1 | l2 | both")
        ->check(CLI::IsMember({"l1", "l2", "both"}));
    sweep_eta_cmd->add_option("--out", out_path, "output path (default stdout)");
    sweep_eta_cmd->add_option("--threads", threads, "worker threads");

    CLI::App* sweep_delta_cmd = app.add_subcommand(
        "sweep-delta", "satisfaction versus the feedback phase-error level");
    sweep_delta_cmd->add_option("--scenario", scenario_path, "scenario JSON file")->required();
    sweep_delta_cmd->add_option("--grid", grid_text, "a:b:step or comma list (degrees)")
        ->required();
    sweep_delta_cmd->add_option("--delta-ce", delta_ce_deg, "estimation error (degrees)");
    sweep_delta_cmd->add_option("--draws", draws, "Monte Carlo draws per evaluation");
    sweep_delta_cmd->add_option("--out", out_path, "output path (default stdout)");
    sweep_delta_cmd->add_option("--threads", threads, "worker threads");

    CLI::App* validate = app.add_subcommand(
        "validate-rates", "compare closed-form rates against the Monte Carlo oracle");
    validate->add_option("--scenario", scenario_path, "scenario JSON file (default built-in)");
    validate->add_option("--draws", draws, "Monte Carlo draws");
    validate->add_option("--precoders", precoders, "random feasible precoders to test");
    validate->add_option("--seed", seed_override, "override master seed");

    CLI::App* self = app.add_subcommand("selftest", "run the invariant suite");
    (void)self;

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (run->parsed()) {
            satrm::Scenario sc = satrm::load_scenario(scenario_path);
            if (trials_override > 0)
                sc.trials = trials_override;
            if (seed_override >= 0)
                sc.seed = static_cast<std::uint64_t>(seed_override);
            const satrm::Scheme scheme =
                scheme_name.empty() ? sc.opts.scheme : satrm::scheme_from_string(scheme_name);
            const satrm::MetricsTable table = satrm::run_trials(sc, scheme, threads);
            write_text(out_path, satrm::format_results(table,
                                                       format == "json"
                                                           ? satrm::EmitFormat::json
                                                           : satrm::EmitFormat::csv));
            return 0;
        }

        if (sweep_eta_cmd->parsed()) {
            const satrm::Scenario sc = satrm::load_scenario(scenario_path);
            const std::vector<double> grid = parse_grid(grid_text);
            const auto rows = satrm::sweep_eta(sc, grid, threads);
            std::string text = "eta,objective,mean_gap_bps_hz,mean_power_w\n";
            for (const auto& row : rows) {
                if (objective != "both" && objective != satrm::to_string(row.norm))
                    continue;
                text += fmt9(row.eta);
                text += ",";
                text += satrm::to_string(row.norm);
                text += "," + fmt9(row.mean_gap) + "," + fmt9(row.mean_power_w) + "\n";
            }
            write_text(out_path, text);
            return 0;
        }

        if (sweep_delta_cmd->parsed()) {
            const satrm::Scenario sc = satrm::load_scenario(scenario_path);
            const std::vector<double> grid = parse_grid(grid_text);
            const auto rows = satrm::sweep_delta_fb(sc, grid, delta_ce_deg, threads, draws);
            std::string text = "delta_fb_deg,scheme,mean_satisfaction_pct\n";
            for (const auto& row : rows) {
                text += fmt9(row.delta_fb_deg);
                text += ",";
                text += satrm::to_string(row.scheme);
                text += "," + fmt9(row.mean_satisfaction_pct) + "\n";
            }
            write_text(out_path, text);
            return 0;
        }

        if (validate->parsed()) {
            satrm::Scenario sc = scenario_path.empty() ? satrm::default_scenario(1)
                                                : satrm::load_scenario(scenario_path);
            if (seed_override >= 0)
                sc.seed = static_cast<std::uint64_t>(seed_override);
            const satrm::ChannelSet channels = satrm::synthesize_channel(sc, sc.seed);
            const satrm::PerturbationStats stats =
                satrm::build_stats(channels.h_hat, sc.perturbation);
            satrm::RandomStream rng =
                satrm::RandomStream::from(sc.seed, satrm::stream_purpose::kMonteCarlo);
            double worst = 0.0;
            for (int i = 0; i < precoders; ++i) {
                satrm::Precoder pre;
                pre.p.resize(sc.num_feeds(), sc.num_users() + 1);
                for (int c = 0; c < sc.num_users() + 1; ++c)
                    for (int r = 0; r < sc.num_feeds(); ++r)
                        pre.p(r, c) = std::complex<double>(rng.normal(), rng.normal());
                for (int r = 0; r < sc.num_feeds(); ++r)
                    pre.p.row(r) *= std::sqrt(0.5 * sc.physics.per_feed_power_w) /
                                    pre.p.row(r).norm();
                pre.c = Eigen::VectorXd::Zero(sc.num_users());
                const Eigen::VectorXd rc = satrm::common_rate(pre, stats, 1.0);
                const Eigen::VectorXd rp = satrm::private_rate(pre, stats, 1.0);
                const satrm::InstantaneousRates inst = satrm::instantaneous_rate_sample(
                    channels.h_hat, pre, sc.perturbation, 1.0, rng, draws);
                for (int u = 0; u < sc.num_users(); ++u) {
                    worst = std::max(worst, std::abs(rc(u) - inst.common(u)) /
                                                std::max(inst.common(u), 0.01));
                    worst = std::max(worst, std::abs(rp(u) - inst.priv(u)) /
                                                std::max(inst.priv(u), 0.01));
                }
            }
            std::cout << "max relative approximation error over " << precoders
                      << " precoders x " << draws << " draws: " << fmt9(worst) << "\n";
            return worst <= 0.15 ? 0 : 2;
        }

        // selftest
        return satrm::selftest(std::cout) ? 0 : 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
