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

#ifndef SATRM_HARNESS_HPP
#define SATRM_HARNESS_HPP

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "satrm/optimizer.hpp"
#include "satrm/scenario.hpp"

namespace satrm {

struct TrialRecord {
    std::string scheme;
    int trial = 0;
    int user = 0;
    double target_bps_hz = 0.0;
    double rate_bps_hz = 0.0;
    double unmet = 0.0;
    double unused = 0.0;
    double satisfaction_pct = 0.0;
    double power_w = 0.0;
    int iterations = 0;
    std::string status;
    bool ok = true; // failed trials are recorded but excluded from aggregates
};

struct SchemeAggregate {
    std::string scheme;
    int trials_ok = 0;
    int failures = 0;
    double mean_satisfaction_pct = 0.0;
    double std_satisfaction_pct = 0.0; // over per-trial user means
    double mean_power_w = 0.0;
    double mean_iterations = 0.0;
};

struct MetricsTable {
    std::vector<TrialRecord> rows;
    /// Recomputed from the rows on every call; there is no second
    /// accumulation path.
    std::vector<SchemeAggregate> aggregates() const;
};

/// Reads a scenario file (JSON, angles in degrees, gains in dBi). Omitted
/// physics fields fall back to the standard link budget; omitted user
/// positions are drawn uniformly inside their beams from the scenario
/// seed. Validation errors name the offending field.
Scenario load_scenario(const std::string& path);
Scenario scenario_from_json(const std::string& text);
std::string scenario_to_json(const Scenario& scenario);
void save_scenario(const Scenario& scenario, const std::string& path);

/// Runs `scenario.trials` seeded trials of one scheme. Trial t derives its
/// channel from (seed, t), so different schemes see identical channels.
/// Per-user achieved rates are the closed-form ergodic rates with the
/// common part clamped to what every user can decode.
MetricsTable run_trials(const Scenario& scenario, Scheme scheme, int threads = 1);

struct EtaSweepRow {
    double eta = 0.0;
    ObjectiveNorm norm = ObjectiveNorm::l2;
    double mean_gap = 0.0; // mean over trials of ||r_target - (c + alpha)||_2
    double mean_power_w = 0.0;
};

std::vector<EtaSweepRow> sweep_eta(const Scenario& scenario, const std::vector<double>& grid,
                                   int threads = 1);

struct DeltaSweepRow {
    double delta_fb_deg = 0.0;
    Scheme scheme = Scheme::rm_rsma;
    double mean_satisfaction_pct = 0.0;
};

/// Satisfaction versus feedback-error level. Every scheme, including the
/// no-statistics ablation, is scored against Monte Carlo instantaneous
/// rates drawn under the true perturbation model.
std::vector<DeltaSweepRow> sweep_delta_fb(const Scenario& scenario,
                                          const std::vector<double>& grid_deg,
                                          double delta_ce_deg, int threads = 1,
                                          int mc_draws = 2000);

enum class EmitFormat { csv, json };

std::string format_results(const MetricsTable& table, EmitFormat format);
void emit_results(const MetricsTable& table, EmitFormat format, const std::string& path);

/// Common-rate decodability clamp: the common split is scaled down when
/// min_k R_{c,k} cannot carry the allocated sum (relevant for designs made
/// with mismatched statistics).
Eigen::VectorXd effective_total_rates(const Eigen::VectorXd& r_common,
                                      const Eigen::VectorXd& r_private,
                                      const Eigen::VectorXd& c);

/// Monte Carlo rate evaluation of a finished solution under `model`,
/// honoring the four-color group structure when present.
Eigen::VectorXd evaluate_solution_mc(const ChannelSet& channels, const RmSolution& solution,
                                     const PerturbationModel& model, double sigma2,
                                     RandomStream& rng, int n_draws);

/// Quick invariant suite (one line per check); returns true when all pass.
bool selftest(std::ostream& os);

} // namespace satrm

#endif
