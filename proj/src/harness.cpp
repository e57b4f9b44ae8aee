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

#include "satrm/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace satrm {

namespace {

constexpr double kDegToRad = 0.017453292519943295;
constexpr double kRadToDeg = 57.29577951308232;

std::string fmt9(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::uint64_t trial_seed(std::uint64_t seed, int trial) {
    return RandomStream::mix(RandomStream::mix(seed, stream_purpose::kTrial),
                             static_cast<std::uint64_t>(trial));
}

template <typename Fn>
void parallel_for(int count, int threads, Fn&& fn) {
    threads = std::max(1, std::min(threads, count));
    if (threads == 1) {
        for (int i = 0; i < count; ++i)
            fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1))
                fn(i);
        });
    }
    for (auto& th : pool)
        th.join();
}

} // namespace

// --- scenario defaults and layout drawing -----------------------------

std::vector<Eigen::Vector2d> draw_user_positions(const Geometry& geometry, std::uint64_t seed) {
    RandomStream rng = RandomStream::from(seed, stream_purpose::kUserLayout);
    std::vector<Eigen::Vector2d> positions;
    positions.reserve(geometry.user_beam_assignment.size());
    for (int beam : geometry.user_beam_assignment) {
        const Eigen::Vector2d center = geometry.beam_centers[static_cast<std::size_t>(beam)];
        const double radius = geometry.beam_radius_m * std::sqrt(rng.uniform());
        const double angle = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
        positions.emplace_back(center.x() + radius * std::cos(angle),
                               center.y() + radius * std::sin(angle));
    }
    return positions;
}

Scenario default_scenario(std::uint64_t seed) {
    Scenario sc;
    sc.seed = seed;
    sc.trials = 20;
    sc.geometry.sat_altitude_m = 600e3;
    sc.geometry.beam_radius_m = 10e3;
    sc.geometry.beam_centers = {{-10e3, -10e3}, {10e3, -10e3}, {-10e3, 10e3}, {10e3, 10e3}};
    sc.geometry.user_beam_assignment = {0, 1, 2, 3, 3};
    sc.geometry.user_positions = draw_user_positions(sc.geometry, seed);
    sc.perturbation.delta_fb_rad = 5.0 * kDegToRad;
    sc.perturbation.delta_ce_rad = 2.0 * kDegToRad;
    sc.r_target.resize(5);
    sc.r_target << 2.0, 2.0, 3.0, 3.5, 4.0;
    return sc;
}

// --- scenario (de)serialization ----------------------------------------

namespace {

using nlohmann::json;

[[noreturn]] void field_error(const std::string& field, const std::string& what) {
    throw std::invalid_argument("scenario field '" + field + "': " + what);
}

template <typename T>
T get_field(const json& j, const std::string& field, const T& fallback) {
    if (!j.contains(field))
        return fallback;
    try {
        return j.at(field).get<T>();
    } catch (const json::exception& e) {
        field_error(field, e.what());
    }
}

std::vector<Eigen::Vector2d> parse_points(const json& arr, const std::string& field) {
    std::vector<Eigen::Vector2d> out;
    if (!arr.is_array())
        field_error(field, "expected an array of [x, y] pairs");
    for (const auto& item : arr) {
        if (!item.is_array() || item.size() != 2)
            field_error(field, "expected [x, y] pairs");
        out.emplace_back(item[0].get<double>(), item[1].get<double>());
    }
    return out;
}

} // namespace

Scenario scenario_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("scenario: JSON parse error: ") + e.what());
    }

    Scenario sc;
    sc.seed = get_field<std::uint64_t>(j, "seed", 1);
    sc.trials = get_field<int>(j, "trials", 20);

    const Scenario defaults = default_scenario(sc.seed);
    sc.geometry = defaults.geometry;
    sc.perturbation = defaults.perturbation;

    bool positions_given = false;
    if (j.contains("geometry")) {
        const json& g = j.at("geometry");
        sc.geometry.sat_altitude_m =
            get_field<double>(g, "sat_altitude_m", sc.geometry.sat_altitude_m);
        sc.geometry.beam_radius_m =
            get_field<double>(g, "beam_radius_m", sc.geometry.beam_radius_m);
        if (g.contains("beam_centers_m"))
            sc.geometry.beam_centers = parse_points(g.at("beam_centers_m"), "beam_centers_m");
        if (g.contains("user_beam_assignment"))
            sc.geometry.user_beam_assignment =
                get_field<std::vector<int>>(g, "user_beam_assignment", {});
        if (g.contains("user_positions_m")) {
            sc.geometry.user_positions =
                parse_points(g.at("user_positions_m"), "user_positions_m");
            positions_given = true;
        }
    }
    if (!positions_given) {
        if (sc.geometry.user_beam_assignment.empty())
            field_error("geometry.user_beam_assignment", "missing");
        for (int beam : sc.geometry.user_beam_assignment)
            if (beam < 0 || beam >= sc.geometry.num_feeds())
                field_error("geometry.user_beam_assignment", "beam index out of range");
        sc.geometry.user_positions = draw_user_positions(sc.geometry, sc.seed);
    }

    if (j.contains("physics")) {
        const json& p = j.at("physics");
        LinkPhysics& ph = sc.physics;
        ph.carrier_freq_hz = get_field<double>(p, "carrier_freq_hz", ph.carrier_freq_hz);
        ph.bandwidth_hz = get_field<double>(p, "bandwidth_hz", ph.bandwidth_hz);
        if (p.contains("theta_3db_deg"))
            ph.theta_3db_rad = p.at("theta_3db_deg").get<double>() * kDegToRad;
        if (p.contains("g_max_dbi"))
            ph.g_max_linear = std::pow(10.0, p.at("g_max_dbi").get<double>() / 10.0);
        if (p.contains("g_rx_dbi"))
            ph.g_rx_linear = std::pow(10.0, p.at("g_rx_dbi").get<double>() / 10.0);
        ph.t_sys_kelvin = get_field<double>(p, "t_sys_kelvin", ph.t_sys_kelvin);
        ph.rain_mu_db = get_field<double>(p, "rain_mu_db", ph.rain_mu_db);
        ph.rain_sigma_db = get_field<double>(p, "rain_sigma_db", ph.rain_sigma_db);
        ph.per_feed_power_w = get_field<double>(p, "per_feed_power_w", ph.per_feed_power_w);
        ph.noise_variance = get_field<double>(p, "noise_variance", ph.noise_variance);
    }

    if (j.contains("perturbation")) {
        const json& p = j.at("perturbation");
        if (p.contains("delta_fb_deg"))
            sc.perturbation.delta_fb_rad = p.at("delta_fb_deg").get<double>() * kDegToRad;
        if (p.contains("delta_ce_deg"))
            sc.perturbation.delta_ce_rad = p.at("delta_ce_deg").get<double>() * kDegToRad;
    }

    if (!j.contains("r_target"))
        field_error("r_target", "missing (bps/Hz per user)");
    const std::vector<double> demands = get_field<std::vector<double>>(j, "r_target", {});
    sc.r_target = Eigen::Map<const Eigen::VectorXd>(demands.data(),
                                                    static_cast<Eigen::Index>(demands.size()));

    if (j.contains("options")) {
        const json& o = j.at("options");
        RmOptions& opts = sc.opts;
        opts.eta = get_field<double>(o, "eta", opts.eta);
        if (o.contains("objective"))
            opts.objective_norm =
                objective_norm_from_string(o.at("objective").get<std::string>());
        opts.max_iter = get_field<int>(o, "max_iter", opts.max_iter);
        opts.tol = get_field<double>(o, "tol", opts.tol);
        if (o.contains("scheme"))
            opts.scheme = scheme_from_string(o.at("scheme").get<std::string>());
        opts.mmse_reg_scale = get_field<double>(o, "mmse_reg_scale", opts.mmse_reg_scale);
        opts.beam_colors = get_field<std::vector<int>>(o, "beam_colors", opts.beam_colors);
    }

    sc.validate();
    return sc;
}

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open scenario file: " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return scenario_from_json(buffer.str());
}

std::string scenario_to_json(const Scenario& sc) {
    std::ostringstream os;
    auto points = [&](const std::vector<Eigen::Vector2d>& pts) {
        std::string out = "[";
        for (std::size_t i = 0; i < pts.size(); ++i) {
            out += (i ? ", [" : "[") + fmt17(pts[i].x()) + ", " + fmt17(pts[i].y()) + "]";
        }
        return out + "]";
    };
    os << "{\n";
    os << "  \"seed\": " << sc.seed << ",\n";
    os << "  \"trials\": " << sc.trials << ",\n";
    os << "  \"r_target\": [";
    for (Eigen::Index i = 0; i < sc.r_target.size(); ++i)
        os << (i ? ", " : "") << fmt17(sc.r_target(i));
    os << "],\n";
    os << "  \"geometry\": {\n";
    os << "    \"sat_altitude_m\": " << fmt17(sc.geometry.sat_altitude_m) << ",\n";
    os << "    \"beam_radius_m\": " << fmt17(sc.geometry.beam_radius_m) << ",\n";
    os << "    \"beam_centers_m\": " << points(sc.geometry.beam_centers) << ",\n";
    os << "    \"user_positions_m\": " << points(sc.geometry.user_positions) << ",\n";
    os << "    \"user_beam_assignment\": [";
    for (std::size_t i = 0; i < sc.geometry.user_beam_assignment.size(); ++i)
        os << (i ? ", " : "") << sc.geometry.user_beam_assignment[i];
    os << "]\n  },\n";
    os << "  \"physics\": {\n";
    os << "    \"carrier_freq_hz\": " << fmt17(sc.physics.carrier_freq_hz) << ",\n";
    os << "    \"bandwidth_hz\": " << fmt17(sc.physics.bandwidth_hz) << ",\n";
    os << "    \"theta_3db_deg\": " << fmt17(sc.physics.theta_3db_rad * kRadToDeg) << ",\n";
    os << "    \"g_max_dbi\": " << fmt17(10.0 * std::log10(sc.physics.g_max_linear)) << ",\n";
    os << "    \"g_rx_dbi\": " << fmt17(10.0 * std::log10(sc.physics.g_rx_linear)) << ",\n";
    os << "    \"t_sys_kelvin\": " << fmt17(sc.physics.t_sys_kelvin) << ",\n";
    os << "    \"rain_mu_db\": " << fmt17(sc.physics.rain_mu_db) << ",\n";
    os << "    \"rain_sigma_db\": " << fmt17(sc.physics.rain_sigma_db) << ",\n";
    os << "    \"per_feed_power_w\": " << fmt17(sc.physics.per_feed_power_w) << ",\n";
    os << "    \"noise_variance\": " << fmt17(sc.physics.noise_variance) << "\n  },\n";
    os << "  \"perturbation\": {\n";
    os << "    \"delta_fb_deg\": " << fmt17(sc.perturbation.delta_fb_rad * kRadToDeg) << ",\n";
    os << "    \"delta_ce_deg\": " << fmt17(sc.perturbation.delta_ce_rad * kRadToDeg)
       << "\n  },\n";
    os << "  \"options\": {\n";
    os << "    \"eta\": " << fmt17(sc.opts.eta) << ",\n";
    os << "    \"objective\": \"" << to_string(sc.opts.objective_norm) << "\",\n";
    os << "    \"max_iter\": " << sc.opts.max_iter << ",\n";
    os << "    \"tol\": " << fmt17(sc.opts.tol) << ",\n";
    os << "    \"scheme\": \"" << to_string(sc.opts.scheme) << "\"";
    os << ",\n    \"mmse_reg_scale\": " << fmt17(sc.opts.mmse_reg_scale);
    if (!sc.opts.beam_colors.empty()) {
        os << ",\n    \"beam_colors\": [";
        for (std::size_t i = 0; i < sc.opts.beam_colors.size(); ++i)
            os << (i ? ", " : "") << sc.opts.beam_colors[i];
        os << "]";
    }
    os << "\n  }\n}\n";
    return os.str();
}

void save_scenario(const Scenario& scenario, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write scenario file: " + path);
    out << scenario_to_json(scenario);
}

// --- metrics ------------------------------------------------------------

Eigen::VectorXd effective_total_rates(const Eigen::VectorXd& r_common,
                                      const Eigen::VectorXd& r_private,
                                      const Eigen::VectorXd& c) {
    const double csum = c.sum();
    if (csum <= 1e-12)
        return r_private;
    const double scale = std::clamp(r_common.minCoeff() / csum, 0.0, 1.0);
    return r_private + scale * c;
}

Eigen::VectorXd evaluate_solution_mc(const ChannelSet& channels, const RmSolution& solution,
                                     const PerturbationModel& model, double sigma2,
                                     RandomStream& rng, int n_draws) {
    if (solution.groups.empty()) {
        const InstantaneousRates inst = instantaneous_rate_sample(
            channels.h_hat, solution.precoder, model, sigma2, rng, n_draws);
        return effective_total_rates(inst.common, inst.priv, solution.precoder.c);
    }

    Eigen::VectorXd rates = Eigen::VectorXd::Zero(channels.num_users());
    for (const ColorGroup& group : solution.groups) {
        if (group.users.empty())
            continue;
        const int gf = static_cast<int>(group.feeds.size());
        const int gu = static_cast<int>(group.users.size());
        Eigen::MatrixXcd h_group(gf, gu);
        Precoder part;
        part.p = Eigen::MatrixXcd::Zero(gf, gu + 1);
        part.c = Eigen::VectorXd::Zero(gu);
        for (int uu = 0; uu < gu; ++uu) {
            const int user = group.users[static_cast<std::size_t>(uu)];
            for (int ff = 0; ff < gf; ++ff) {
                const int feed = group.feeds[static_cast<std::size_t>(ff)];
                h_group(ff, uu) = channels.h_hat(feed, user);
                part.p(ff, uu + 1) = solution.precoder.p(feed, user + 1);
            }
        }
        const InstantaneousRates inst =
            instantaneous_rate_sample(h_group, part, model, sigma2 / 4.0, rng, n_draws);
        for (int uu = 0; uu < gu; ++uu)
            rates(group.users[static_cast<std::size_t>(uu)]) = 0.25 * inst.priv(uu);
    }
    return rates;
}

namespace {

double satisfaction_pct(double rate, double target) {
    if (target <= 0.0)
        return 100.0;
    return 100.0 * std::min(rate / target, 1.0);
}

bool status_ok(RmStatus status) {
    return status == RmStatus::converged || status == RmStatus::iteration_cap;
}

struct TrialOutcome {
    std::vector<TrialRecord> rows;
};

TrialOutcome one_trial(const Scenario& scenario, Scheme scheme, int trial) {
    const int k = scenario.num_users();
    TrialOutcome out;
    out.rows.reserve(static_cast<std::size_t>(k));
    try {
        const ChannelSet channels =
            synthesize_channel(scenario, trial_seed(scenario.seed, trial));
        const PerturbationStats stats = build_stats(channels.h_hat, scenario.perturbation);
        RmOptions opts = scenario.opts;
        opts.scheme = scheme;
        const RmSolution sol = solve_scheme(channels, stats, scenario, opts);
        const Eigen::VectorXd rates = effective_total_rates(
            sol.rates.r_common, sol.rates.r_private, sol.precoder.c);
        for (int user = 0; user < k; ++user) {
            TrialRecord rec;
            rec.scheme = to_string(scheme);
            rec.trial = trial;
            rec.user = user;
            rec.target_bps_hz = scenario.r_target(user);
            rec.rate_bps_hz = rates(user);
            rec.unmet = std::max(rec.target_bps_hz - rec.rate_bps_hz, 0.0);
            rec.unused = std::max(rec.rate_bps_hz - rec.target_bps_hz, 0.0);
            rec.satisfaction_pct = satisfaction_pct(rec.rate_bps_hz, rec.target_bps_hz);
            rec.power_w = sol.power_used_w;
            rec.iterations = sol.iterations;
            rec.status = to_string(sol.status);
            rec.ok = status_ok(sol.status);
            out.rows.push_back(std::move(rec));
        }
    } catch (const std::exception& e) {
        for (int user = 0; user < k; ++user) {
            TrialRecord rec;
            rec.scheme = to_string(scheme);
            rec.trial = trial;
            rec.user = user;
            rec.target_bps_hz = scenario.r_target(user);
            rec.status = std::string("error: ") + e.what();
            rec.ok = false;
            out.rows.push_back(std::move(rec));
        }
    }
    return out;
}

} // namespace

MetricsTable run_trials(const Scenario& scenario, Scheme scheme, int threads) {
    scenario.validate();
    std::vector<TrialOutcome> outcomes(static_cast<std::size_t>(scenario.trials));
    parallel_for(scenario.trials, threads, [&](int t) {
        outcomes[static_cast<std::size_t>(t)] = one_trial(scenario, scheme, t);
    });
    MetricsTable table;
    for (const auto& outcome : outcomes)
        table.rows.insert(table.rows.end(), outcome.rows.begin(), outcome.rows.end());
    return table;
}

std::vector<SchemeAggregate> MetricsTable::aggregates() const {
    std::vector<SchemeAggregate> out;
    std::vector<std::string> order;
    for (const auto& row : rows)
        if (std::find(order.begin(), order.end(), row.scheme) == order.end())
            order.push_back(row.scheme);

    for (const auto& scheme : order) {
        SchemeAggregate agg;
        agg.scheme = scheme;
        // per-trial user means first, then averaged over trials
        std::vector<double> trial_sat, trial_power, trial_iters;
        int current_trial = -1;
        double sat_sum = 0.0;
        int sat_count = 0;
        bool trial_ok = true;
        double power = 0.0;
        int iters = 0;
        auto flush = [&]() {
            if (current_trial < 0)
                return;
            if (trial_ok && sat_count > 0) {
                trial_sat.push_back(sat_sum / sat_count);
                trial_power.push_back(power);
                trial_iters.push_back(iters);
            } else {
                ++agg.failures;
            }
        };
        for (const auto& row : rows) {
            if (row.scheme != scheme)
                continue;
            if (row.trial != current_trial) {
                flush();
                current_trial = row.trial;
                sat_sum = 0.0;
                sat_count = 0;
                trial_ok = true;
            }
            sat_sum += row.satisfaction_pct;
            ++sat_count;
            trial_ok = trial_ok && row.ok;
            power = row.power_w;
            iters = row.iterations;
        }
        flush();

        agg.trials_ok = static_cast<int>(trial_sat.size());
        if (!trial_sat.empty()) {
            double mean = 0.0;
            for (double v : trial_sat)
                mean += v;
            mean /= static_cast<double>(trial_sat.size());
            agg.mean_satisfaction_pct = mean;
            if (trial_sat.size() > 1) {
                double var = 0.0;
                for (double v : trial_sat)
                    var += (v - mean) * (v - mean);
                agg.std_satisfaction_pct =
                    std::sqrt(var / static_cast<double>(trial_sat.size() - 1));
            }
            double pw = 0.0, it = 0.0;
            for (double v : trial_power)
                pw += v;
            for (double v : trial_iters)
                it += v;
            agg.mean_power_w = pw / static_cast<double>(trial_power.size());
            agg.mean_iterations = it / static_cast<double>(trial_iters.size());
        }
        out.push_back(std::move(agg));
    }
    return out;
}

// --- sweeps --------------------------------------------------------------

std::vector<EtaSweepRow> sweep_eta(const Scenario& scenario, const std::vector<double>& grid,
                                   int threads) {
    scenario.validate();
    for (double eta : grid)
        if (!(eta > 0.0 && eta <= 1.0))
            throw std::invalid_argument("sweep_eta: grid values must lie in (0, 1]");

    std::vector<EtaSweepRow> out;
    for (ObjectiveNorm norm : {ObjectiveNorm::l1, ObjectiveNorm::l2}) {
        for (double eta : grid) {
            Scenario sc = scenario;
            sc.opts.eta = eta;
            sc.opts.objective_norm = norm;
            std::vector<double> gaps(static_cast<std::size_t>(sc.trials),
                                     std::numeric_limits<double>::quiet_NaN());
            std::vector<double> powers(static_cast<std::size_t>(sc.trials), 0.0);
            parallel_for(sc.trials, threads, [&](int t) {
                try {
                    const ChannelSet channels =
                        synthesize_channel(sc, trial_seed(sc.seed, t));
                    const PerturbationStats stats =
                        build_stats(channels.h_hat, sc.perturbation);
                    const RmSolution sol = solve_scheme(channels, stats, sc, sc.opts);
                    if (!status_ok(sol.status))
                        return;
                    gaps[static_cast<std::size_t>(t)] =
                        (sc.r_target - (sol.precoder.c + sol.alpha_p)).norm();
                    powers[static_cast<std::size_t>(t)] = sol.power_used_w;
                } catch (const std::exception&) {
                    // failed trials stay NaN and are skipped below
                }
            });
            EtaSweepRow row;
            row.eta = eta;
            row.norm = norm;
            int n = 0;
            for (int t = 0; t < sc.trials; ++t) {
                if (std::isnan(gaps[static_cast<std::size_t>(t)]))
                    continue;
                row.mean_gap += gaps[static_cast<std::size_t>(t)];
                row.mean_power_w += powers[static_cast<std::size_t>(t)];
                ++n;
            }
            if (n > 0) {
                row.mean_gap /= n;
                row.mean_power_w /= n;
            }
            out.push_back(row);
        }
    }
    return out;
}

std::vector<DeltaSweepRow> sweep_delta_fb(const Scenario& scenario,
                                          const std::vector<double>& grid_deg,
                                          double delta_ce_deg, int threads, int mc_draws) {
    scenario.validate();
    for (double d : grid_deg)
        if (d < 0.0)
            throw std::invalid_argument("sweep_delta_fb: deltas must be non-negative");

    const Scheme schemes[] = {Scheme::rm_rsma, Scheme::rm_rsma_noinfo, Scheme::mmse_rsma,
                              Scheme::rm_sdma, Scheme::rm_4color};
    std::vector<DeltaSweepRow> out;
    for (double delta_deg : grid_deg) {
        Scenario sc = scenario;
        sc.perturbation.delta_fb_rad = delta_deg * kDegToRad;
        sc.perturbation.delta_ce_rad = delta_ce_deg * kDegToRad;
        for (Scheme scheme : schemes) {
            std::vector<double> sat(static_cast<std::size_t>(sc.trials),
                                    std::numeric_limits<double>::quiet_NaN());
            parallel_for(sc.trials, threads, [&](int t) {
                try {
                    const ChannelSet channels =
                        synthesize_channel(sc, trial_seed(sc.seed, t));
                    const PerturbationStats stats =
                        build_stats(channels.h_hat, sc.perturbation);
                    RmOptions opts = sc.opts;
                    opts.scheme = scheme;
                    const RmSolution sol = solve_scheme(channels, stats, sc, opts);
                    if (!status_ok(sol.status))
                        return;
                    RandomStream rng = RandomStream::from(
                        sc.seed, stream_purpose::kMonteCarlo, static_cast<std::uint64_t>(t));
                    const Eigen::VectorXd rates = evaluate_solution_mc(
                        channels, sol, sc.perturbation, sc.physics.noise_variance, rng,
                        mc_draws);
                    double mean = 0.0;
                    for (int user = 0; user < sc.num_users(); ++user)
                        mean += satisfaction_pct(rates(user), sc.r_target(user));
                    sat[static_cast<std::size_t>(t)] = mean / sc.num_users();
                } catch (const std::exception&) {
                }
            });
            DeltaSweepRow row;
            row.delta_fb_deg = delta_deg;
            row.scheme = scheme;
            int n = 0;
            for (double v : sat) {
                if (std::isnan(v))
                    continue;
                row.mean_satisfaction_pct += v;
                ++n;
            }
            if (n > 0)
                row.mean_satisfaction_pct /= n;
            out.push_back(row);
        }
    }
    return out;
}

// --- emission --------------------------------------------------------------

std::string format_results(const MetricsTable& table, EmitFormat format) {
    bool any_ok = false;
    for (const auto& row : table.rows)
        any_ok = any_ok || row.ok;
    if (!any_ok)
        throw std::runtime_error("emit_results: no successful trials to emit");

    std::ostringstream os;
    if (format == EmitFormat::csv) {
        os << "scheme,trial,user,target_bps_hz,rate_bps_hz,unmet,unused,satisfaction_pct,"
              "power_w,iterations,status\n";
        for (const auto& r : table.rows) {
            os << r.scheme << ',' << r.trial << ',' << r.user << ',' << fmt9(r.target_bps_hz)
               << ',' << fmt9(r.rate_bps_hz) << ',' << fmt9(r.unmet) << ',' << fmt9(r.unused)
               << ',' << fmt9(r.satisfaction_pct) << ',' << fmt9(r.power_w) << ','
               << r.iterations << ',' << r.status << '\n';
        }
        return os.str();
    }

    os << "{\n  \"rows\": [\n";
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& r = table.rows[i];
        os << "    {\"scheme\": \"" << r.scheme << "\", \"trial\": " << r.trial
           << ", \"user\": " << r.user << ", \"target_bps_hz\": " << fmt9(r.target_bps_hz)
           << ", \"rate_bps_hz\": " << fmt9(r.rate_bps_hz) << ", \"unmet\": " << fmt9(r.unmet)
           << ", \"unused\": " << fmt9(r.unused) << ", \"satisfaction_pct\": "
           << fmt9(r.satisfaction_pct) << ", \"power_w\": " << fmt9(r.power_w)
           << ", \"iterations\": " << r.iterations << ", \"status\": \"" << r.status << "\"}"
           << (i + 1 < table.rows.size() ? "," : "") << "\n";
    }
    os << "  ],\n  \"aggregates\": [\n";
    const auto aggs = table.aggregates();
    for (std::size_t i = 0; i < aggs.size(); ++i) {
        const auto& a = aggs[i];
        os << "    {\"scheme\": \"" << a.scheme << "\", \"trials_ok\": " << a.trials_ok
           << ", \"failures\": " << a.failures << ", \"mean_satisfaction_pct\": "
           << fmt9(a.mean_satisfaction_pct) << ", \"std_satisfaction_pct\": "
           << fmt9(a.std_satisfaction_pct) << ", \"mean_power_w\": " << fmt9(a.mean_power_w)
           << ", \"mean_iterations\": " << fmt9(a.mean_iterations) << "}"
           << (i + 1 < aggs.size() ? "," : "") << "\n";
    }
    os << "  ]\n}\n";
    return os.str();
}

void emit_results(const MetricsTable& table, EmitFormat format, const std::string& path) {
    const std::string text = format_results(table, format);
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("emit_results: cannot write " + path);
    out << text;
    if (!out)
        throw std::runtime_error("emit_results: write failed for " + path);
}

// --- selftest ---------------------------------------------------------------

namespace {

bool check(std::ostream& os, const std::string& name, bool pass) {
    os << (pass ? "[ ok ] " : "[FAIL] ") << name << "\n";
    return pass;
}

Eigen::MatrixXcd random_channel(int nt, int k, RandomStream& rng, double scale = 1.0) {
    Eigen::MatrixXcd h(nt, k);
    for (int c = 0; c < k; ++c)
        for (int r = 0; r < nt; ++r)
            h(r, c) = scale * std::complex<double>(rng.normal(), rng.normal()) / std::sqrt(2.0);
    return h;
}

} // namespace

bool selftest(std::ostream& os) {
    bool all = true;
    const double rad5 = 5.0 * kDegToRad;

    {
        RandomStream rng(101);
        const int draws = 200000;
        std::complex<double> acc{0.0, 0.0};
        for (int i = 0; i < draws; ++i)
            acc += std::polar(1.0, rng.normal(0.0, rad5)) *
                   std::polar(1.0, -rng.normal(0.0, rad5));
        const double mc = acc.real() / draws;
        const double closed = std::exp(-rad5 * rad5);
        all &= check(os, "feedback expectation off-diagonal vs Monte Carlo",
                     std::abs(mc - closed) < 5e-3);
    }
    {
        RandomStream rng(202);
        bool pass = true;
        for (int rep = 0; rep < 20 && pass; ++rep) {
            const Eigen::MatrixXcd h = random_channel(4, 5, rng);
            for (double deg : {0.0, 2.0, 5.0, 10.0, 30.0}) {
                const PerturbationStats st =
                    build_stats(h, {deg * kDegToRad, deg * kDegToRad});
                for (int u = 0; u < 5; ++u) {
                    pass = pass && min_eigenvalue(st.q_fb[static_cast<std::size_t>(u)]) >=
                                       -1e-10 * std::abs(st.q_fb[u].trace().real());
                    pass = pass && min_eigenvalue(st.q_both[static_cast<std::size_t>(u)]) >=
                                       -1e-10 * (1.0 + std::abs(st.q_both[u].trace().real()));
                }
            }
        }
        all &= check(os, "perturbation statistics stay PSD", pass);
    }
    {
        RandomStream rng(303);
        const Eigen::MatrixXcd h = random_channel(4, 1, rng);
        const Eigen::MatrixXcd q = h * h.adjoint();
        const Eigen::MatrixXd emb = conic::embed_complex_quadratic(q);
        bool pass = true;
        for (int rep = 0; rep < 50; ++rep) {
            const Eigen::VectorXcd z = random_channel(4, 1, rng).col(0);
            Eigen::VectorXd x(8);
            x << z.real(), z.imag();
            const double direct = std::real(std::complex<double>(z.adjoint() * q * z));
            pass = pass && std::abs(direct - x.dot(emb * x)) <= 1e-12 * (1.0 + std::abs(direct));
        }
        all &= check(os, "complex-to-real embedding isometry", pass);
    }
    {
        RandomStream rng(404);
        const Eigen::MatrixXcd h = random_channel(4, 1, rng, 3.0);
        const Eigen::MatrixXcd q = h * h.adjoint();
        const Eigen::VectorXcd p0 = random_channel(4, 1, rng).col(0);
        const double a0 = 0.7;
        const SinrSurrogate sur = linearize_common(p0, a0, q);
        const double f0 = std::real(std::complex<double>(p0.adjoint() * q * p0)) / a0;
        bool pass = std::abs(sur.value_at(p0, a0) - f0) <= 1e-9 * (1.0 + std::abs(f0));
        for (int rep = 0; rep < 200 && pass; ++rep) {
            const Eigen::VectorXcd p = random_channel(4, 1, rng).col(0);
            const double a = 0.05 + 3.0 * rng.uniform();
            const double f = std::real(std::complex<double>(p.adjoint() * q * p)) / a;
            pass = sur.value_at(p, a) <= f + 1e-9 * (1.0 + std::abs(f));
        }
        all &= check(os, "SINR surrogate tangency and global under-estimation", pass);
    }
    {
        const LogSurrogate ls = soc_log_surrogate(1.0);
        all &= check(os, "log surrogate closed form at x=1",
                     std::abs(ls.v - (std::log(2.0) + 0.5)) < 1e-12 &&
                         std::abs(ls.u - 0.5) < 1e-12);
    }
    {
        conic::ConicProgram prog;
        prog.add_variables("x", 2);
        prog.add_quadratic_cost(0, Eigen::MatrixXd::Identity(2, 2));
        Eigen::VectorXd lin(2);
        lin << -4.0, 0.0;
        prog.add_linear_cost(0, lin);
        conic::SocConstraint ball;
        ball.f = Eigen::MatrixXd::Identity(2, 2);
        ball.g = Eigen::VectorXd::Zero(2);
        ball.c = Eigen::VectorXd::Zero(2);
        ball.d = 1.0;
        prog.add_soc_constraint(ball);
        const conic::Solution s1 = conic::solve(prog);
        const conic::Solution s2 = conic::solve(prog);
        all &= check(os, "solver determinism",
                     s1.status == conic::SolveStatus::optimal && s1.x == s2.x &&
                         std::abs(s1.objective - s2.objective) == 0.0);
    }
    {
        Scenario sc = default_scenario(7);
        sc.trials = 2;
        const std::string a = format_results(run_trials(sc, Scheme::rm_rsma), EmitFormat::csv);
        const std::string b = format_results(run_trials(sc, Scheme::rm_rsma), EmitFormat::csv);
        const std::string c =
            format_results(run_trials(sc, Scheme::rm_rsma, 2), EmitFormat::csv);
        all &= check(os, "trial pipeline determinism across runs and threads",
                     a == b && a == c);
    }
    return all;
}

} // namespace satrm
