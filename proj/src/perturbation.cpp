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

#include "satrm/perturbation.hpp"

#include <cmath>

namespace satrm {

Eigen::MatrixXd feedback_expectation_matrix(double delta_rad, int n_t) {
    if (delta_rad < 0.0)
        throw std::invalid_argument("feedback_expectation_matrix: delta must be non-negative");
    if (n_t < 1)
        throw std::invalid_argument("feedback_expectation_matrix: n_t must be at least 1");
    const double off = std::exp(-delta_rad * delta_rad);
    Eigen::MatrixXd m = Eigen::MatrixXd::Constant(n_t, n_t, off);
    m.diagonal().setOnes();
    return m;
}

Eigen::MatrixXd estimation_error_expectation_matrix(double delta_rad, int n_t) {
    if (delta_rad < 0.0)
        throw std::invalid_argument(
            "estimation_error_expectation_matrix: delta must be non-negative");
    if (n_t < 1)
        throw std::invalid_argument("estimation_error_expectation_matrix: n_t must be at least 1");
    const double half = std::exp(-delta_rad * delta_rad / 2.0);
    const double off = (1.0 - half) * (1.0 - half);
    const double diag = 2.0 - 2.0 * half;
    Eigen::MatrixXd m = Eigen::MatrixXd::Constant(n_t, n_t, off);
    m.diagonal().setConstant(diag);
    return m;
}

PerturbationStats build_stats(const Eigen::MatrixXcd& h_hat, const PerturbationModel& model) {
    model.validate();
    if (h_hat.rows() < 1 || h_hat.cols() < 1)
        throw std::invalid_argument("build_stats: channel matrix must be non-empty");
    if (!h_hat.allFinite())
        throw std::invalid_argument("build_stats: channel matrix must be finite");

    const int nt = static_cast<int>(h_hat.rows());
    const int k = static_cast<int>(h_hat.cols());
    const Eigen::MatrixXd mask_fb = feedback_expectation_matrix(model.delta_fb_rad, nt);
    const Eigen::MatrixXd mask_ce = estimation_error_expectation_matrix(model.delta_ce_rad, nt);

    PerturbationStats stats;
    stats.model = model;
    stats.q_fb.reserve(static_cast<std::size_t>(k));
    stats.q_both.reserve(static_cast<std::size_t>(k));
    for (int user = 0; user < k; ++user) {
        const Eigen::VectorXcd h = h_hat.col(user);
        Eigen::MatrixXcd outer = h * h.adjoint();
        Eigen::MatrixXcd fb = outer.cwiseProduct(mask_fb.cast<std::complex<double>>());
        fb = 0.5 * (fb + fb.adjoint().eval());
        Eigen::MatrixXcd both = fb.cwiseProduct(mask_ce.cast<std::complex<double>>());
        both = 0.5 * (both + both.adjoint().eval());
        stats.q_fb.push_back(std::move(fb));
        stats.q_both.push_back(std::move(both));
    }
    return stats;
}

double min_eigenvalue(const Eigen::MatrixXcd& hermitian) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(hermitian,
                                                           Eigen::EigenvaluesOnly);
    return solver.eigenvalues().minCoeff();
}

} // namespace satrm
