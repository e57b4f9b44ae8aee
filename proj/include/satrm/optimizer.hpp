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

#ifndef SATRM_OPTIMIZER_HPP
#define SATRM_OPTIMIZER_HPP

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "satrm/conic.hpp"
#include "satrm/rates.hpp"
#include "satrm/scenario.hpp"

namespace satrm {

/// Floor applied to SINR linearization points before they divide anything.
inline constexpr double kLinearizationFloor = 1e-10;

/// Iterate of the successive convex approximation loop.
struct ScaState {
    Eigen::MatrixXcd p_n;    // N_t x (K+1); column 0 zero when no common stream
    Eigen::VectorXd a_n;     // common SINR linearization points (>= floor)
    Eigen::VectorXd b_n;     // private SINR linearization points (>= floor)
    Eigen::VectorXd c_n;     // common-rate split of this iterate
    Eigen::VectorXd alpha_n; // private-rate lower bounds of this iterate
    double d_n = 0.0;        // rate-gap objective at this iterate
    int iter = 0;
};

enum class RmStatus { converged, iteration_cap, subproblem_infeasible, subproblem_failure };
const char* to_string(RmStatus status);

struct ColorGroup {
    std::vector<int> feeds;
    std::vector<int> users;
};

struct RmSolution {
    Precoder precoder;
    RateReport rates;
    Eigen::VectorXd alpha_p;             // private-rate lower bounds at the solution
    std::vector<double> objective_trace; // D[0], D[1], ...
    double power_used_w = 0.0;
    int iterations = 0;
    RmStatus status = RmStatus::converged;
    /// Populated by the four-color scheme only.
    std::vector<ColorGroup> groups;
};

/// Affine surrogate of the quadratic-over-linear SINR function
/// f(p, a) = p^H Q p / a, linearized at (p_n, a_n):
///   fhat(p, a) = (2/a_n) Re(w^H p) + slack_coeff * a,  w = Q p_n.
/// fhat touches f at the linearization point and under-estimates it
/// everywhere on a > 0.
struct SinrSurrogate {
    Eigen::VectorXcd w;        // gradient vector Q p_n
    double p_scale = 0.0;      // 2 / a_n
    double slack_coeff = 0.0;  // -(p_n^H Q p_n) / a_n^2
    double value_at(const Eigen::VectorXcd& p, double a) const {
        return p_scale * std::real(w.dot(p)) + slack_coeff * a;
    }
};

SinrSurrogate linearize_common(const Eigen::VectorXcd& pc_n, double a_n,
                               const Eigen::MatrixXcd& q_fb);
SinrSurrogate linearize_private(const Eigen::VectorXcd& pk_n, double b_n,
                                const Eigen::MatrixXcd& q_fb);

/// Coefficients of the second-order-cone relaxation of log2(1+x) >= t/ln2:
///   v = ln(1 + x_n) + x_n/(1 + x_n),  u = x_n^2/(1 + x_n);
/// the consumer emits  x + v - t >= ||[2 sqrt(u), x - v + t]||_2.
struct LogSurrogate {
    double v = 0.0;
    double u = 0.0;
};

LogSurrogate soc_log_surrogate(double x_n);

/// Variable layout of one convex subproblem.
struct SubproblemLayout {
    bool has_common = true;
    bool scalar_privates = false;
    int nt = 0;
    int k = 0;
    std::vector<int> col_offset; // K+1 entries; -1 when the column is absent
    std::vector<int> col_dim;
    int c_off = -1;
    int alpha_off = -1;
    int a_off = -1;
    int b_off = -1;
    int t_off = -1; // L1 epigraph block
    std::vector<Eigen::VectorXcd> private_dirs; // unit directions (scalar case)
};

struct Subproblem {
    conic::ConicProgram program;
    SubproblemLayout layout;
};

/// Pieces of a subproblem solution mapped back to model space.
struct IterateUpdate {
    Eigen::MatrixXcd p;
    Eigen::VectorXd c, alpha, a, b;
};

/// MRT/SVD warm start: private columns along h_k, common column along the
/// dominant left singular direction of H, every feed row rescaled to half
/// the per-feed cap; a and b are the exact SINR values at that point.
ScaState initialize_state(const ChannelSet& channels, const PerturbationStats& stats,
                          const Scenario& scenario);

Subproblem build_subproblem(const ScaState& state, const PerturbationStats& stats,
                            const Scenario& scenario, const RmOptions& opts);

IterateUpdate extract_iterate(const Subproblem& subproblem, const Eigen::VectorXd& x);

/// Embeds an iterate into a subproblem's variable space (chained
/// feasibility checks).
Eigen::VectorXd iterate_vector(const Subproblem& subproblem, const ScaState& state,
                               const Eigen::VectorXd& r_target);

/// Rate-gap objective eta * ||r - (c + alpha)||^2 + (1 - eta) * ||P||_F^2
/// (L1 variant uses the 1-norm of the gap).
double rm_objective(const Eigen::VectorXd& r_target, const Eigen::VectorXd& c,
                    const Eigen::VectorXd& alpha, const Eigen::MatrixXcd& p,
                    const RmOptions& opts);

/// Algorithm: iterate build/solve/update until |D_n - D_{n-1}| <= tol or
/// the iteration cap; returns the converged precoder with rates evaluated
/// through the closed forms.
RmSolution run_sca(const ChannelSet& channels, const PerturbationStats& stats,
                   const Scenario& scenario, const RmOptions& opts);

/// SDMA benchmark: common stream and its constraints removed.
RmSolution solve_rm_sdma(const ChannelSet& channels, const PerturbationStats& stats,
                         const Scenario& scenario, const RmOptions& opts);

/// Regularized-inversion directions w_k = (H H^H + reg I)^{-1} h_k,
/// normalized; reg = K sigma2 / P_t.
std::vector<Eigen::VectorXcd> mmse_directions(const Eigen::MatrixXcd& h_hat, double p_t,
                                              double sigma2);

/// RSMA benchmark with private directions frozen to the MMSE solution;
/// only the private powers, the common vector and the splits move.
RmSolution solve_mmse_rsma(const ChannelSet& channels, const PerturbationStats& stats,
                           const Scenario& scenario, const RmOptions& opts);

/// Four-color frequency reuse: per color group an SDMA run over the
/// group's feeds/users with quarter-band noise, rates scaled by 1/4.
RmSolution solve_rm_4color(const ChannelSet& channels, const PerturbationStats& stats,
                           const Scenario& scenario, const RmOptions& opts);

/// Beam -> color partition used by the four-color scheme.
std::vector<ColorGroup> color_groups(const Geometry& geometry,
                                     const std::vector<int>& beam_colors);

/// Dispatch on opts.scheme (the no-info ablation designs with zeroed
/// perturbation statistics built from the same channel).
RmSolution solve_scheme(const ChannelSet& channels, const PerturbationStats& stats,
                        const Scenario& scenario, const RmOptions& opts);

} // namespace satrm

#endif
