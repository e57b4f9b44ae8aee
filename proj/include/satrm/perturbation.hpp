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

#ifndef SATRM_PERTURBATION_HPP
#define SATRM_PERTURBATION_HPP

#include <Eigen/Dense>
#include <stdexcept>
#include <vector>

namespace satrm {

/// Standard deviations (radians) of the i.i.d. Gaussian phase errors from
/// channel feedback and channel estimation.
struct PerturbationModel {
    double delta_fb_rad = 0.0;
    double delta_ce_rad = 0.0;

    void validate() const {
        if (delta_fb_rad < 0.0 || delta_ce_rad < 0.0)
            throw std::invalid_argument("perturbation: deltas must be non-negative");
    }
};

/// Per-user PSD quadratic-form matrices.
///
///   q_fb[k]   = h_k h_k^H .* (exp(-d_fb^2) * ones + (1 - exp(-d_fb^2)) * I)
///   q_both[k] = q_fb[k]   .* ((1 - exp(-d_ce^2/2))^2 * ones + (1 - exp(-d_ce^2)) * I)
///
/// For any precoding vector p, p^H q_fb[k] p is the mean received power of
/// p through the feedback-perturbed channel and p^H q_both[k] p the mean
/// power of the estimation-error residual. Both are PSD since Hadamard
/// products of PSD matrices are PSD.
struct PerturbationStats {
    std::vector<Eigen::MatrixXcd> q_fb;
    std::vector<Eigen::MatrixXcd> q_both;
    PerturbationModel model;

    int num_users() const { return static_cast<int>(q_fb.size()); }
    int num_feeds() const { return q_fb.empty() ? 0 : static_cast<int>(q_fb.front().rows()); }
};

/// E[e e^H] for e = exp(j theta), theta ~ N(0, delta^2 I): unit diagonal,
/// constant off-diagonal exp(-delta^2).
Eigen::MatrixXd feedback_expectation_matrix(double delta_rad, int n_t);

/// E[(e - 1)(e - 1)^H]: diagonal 2 - 2 exp(-delta^2/2), off-diagonal
/// (1 - exp(-delta^2/2))^2.
Eigen::MatrixXd estimation_error_expectation_matrix(double delta_rad, int n_t);

/// Builds the per-user Hadamard products for every column of h_hat. Each
/// matrix is re-symmetrized to scrub floating-point asymmetry.
PerturbationStats build_stats(const Eigen::MatrixXcd& h_hat, const PerturbationModel& model);

/// Smallest eigenvalue of a Hermitian matrix (self-adjoint solver).
double min_eigenvalue(const Eigen::MatrixXcd& hermitian);

} // namespace satrm

#endif
