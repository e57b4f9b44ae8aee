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

#ifndef SATRM_RATES_HPP
#define SATRM_RATES_HPP

#include <Eigen/Dense>
#include <cstdint>

#include "satrm/perturbation.hpp"
#include "satrm/rng.hpp"

namespace satrm {

/// RSMA precoder: column 0 is the common precoding vector, columns 1..K
/// the private vectors. c holds the common-rate portions C_k >= 0.
struct Precoder {
    Eigen::MatrixXcd p; // N_t x (K+1)
    Eigen::VectorXd c;  // K

    int num_feeds() const { return static_cast<int>(p.rows()); }
    int num_users() const { return static_cast<int>(p.cols()) - 1; }

    Eigen::VectorXcd common() const { return p.col(0); }
    Eigen::VectorXcd private_col(int k) const { return p.col(k + 1); }

    /// Total transmit power ||P||_F^2.
    double total_power() const { return p.squaredNorm(); }

    /// Largest row-wise squared norm (per-feed power draw).
    double max_feed_power() const { return p.rowwise().squaredNorm().maxCoeff(); }

    void validate_against(const PerturbationStats& stats) const;
};

/// Rates in bps/Hz; r_total = r_private + c elementwise. common_sum_ok
/// records whether min_k R_{c,k} covers the allocated common-rate sum.
struct RateReport {
    Eigen::VectorXd r_common;
    Eigen::VectorXd r_private;
    Eigen::VectorXd r_total;
    bool common_sum_ok = true;
};

/// Closed-form approximated ergodic common rates
///   R_{c,k} = log2(1 + p_c^H q_fb[k] p_c / (l_{c,k} + sigma2))
/// with l_{c,k} summing q_both over all streams and q_fb over the private
/// streams.
Eigen::VectorXd common_rate(const Precoder& precoder, const PerturbationStats& stats,
                            double sigma2);

/// Closed-form approximated ergodic private rates; l_{p,k} excludes the
/// k-th private stream from its q_fb sum.
Eigen::VectorXd private_rate(const Precoder& precoder, const PerturbationStats& stats,
                             double sigma2);

/// Interference-plus-leakage terms, exposed for surrogate tests.
Eigen::VectorXd common_leakage(const Precoder& precoder, const PerturbationStats& stats);
Eigen::VectorXd private_leakage(const Precoder& precoder, const PerturbationStats& stats);

RateReport total_rates(const Precoder& precoder, const PerturbationStats& stats, double sigma2,
                       double common_sum_slack = 1e-6);

struct InstantaneousRates {
    Eigen::VectorXd common;  // mean over draws of log2(1 + gamma_c)
    Eigen::VectorXd priv;    // mean over draws of log2(1 + gamma_p)
};

/// Monte Carlo oracle for the closed forms. Per draw the received-signal
/// terms are split into a desired part through h .* e^fb, residual
/// self-interference / SIC-error parts through h .* e^fb .* (e^ce - 1),
/// and cross-stream interference through the fully perturbed channel; the
/// resulting worst-case SINRs are averaged in log2(1 + x).
InstantaneousRates instantaneous_rate_sample(const Eigen::MatrixXcd& h_hat,
                                             const Precoder& precoder,
                                             const PerturbationModel& model, double sigma2,
                                             RandomStream& rng, int n_draws);

} // namespace satrm

#endif
