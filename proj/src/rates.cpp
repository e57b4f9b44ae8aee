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

#include "satrm/rates.hpp"

#include <cmath>
#include <complex>
#include <stdexcept>

namespace satrm {

namespace {

double quad_form(const Eigen::VectorXcd& p, const Eigen::MatrixXcd& q) {
    return std::real(std::complex<double>(p.adjoint() * q * p));
}

void check_sigma(double sigma2) {
    // Denominators are l + sigma2; a positive noise floor is a precondition,
    // not something to patch with an epsilon.
    if (sigma2 <= 0.0)
        throw std::domain_error("rate evaluation requires sigma2 > 0");
}

double log2_1p(double x) { return std::log1p(x) / 0.6931471805599453094; }

} // namespace

void Precoder::validate_against(const PerturbationStats& stats) const {
    if (num_feeds() != stats.num_feeds())
        throw std::invalid_argument("precoder/stats feed-count mismatch");
    if (num_users() != stats.num_users())
        throw std::invalid_argument("precoder/stats user-count mismatch");
    if (c.size() != num_users())
        throw std::invalid_argument("precoder: c must have one entry per user");
    if (!p.allFinite() || !c.allFinite())
        throw std::invalid_argument("precoder: entries must be finite");
}

Eigen::VectorXd common_leakage(const Precoder& precoder, const PerturbationStats& stats) {
    precoder.validate_against(stats);
    const int k = precoder.num_users();
    Eigen::VectorXd l(k);
    for (int user = 0; user < k; ++user) {
        double acc = 0.0;
        for (int col = 0; col < k + 1; ++col)
            acc += quad_form(precoder.p.col(col), stats.q_both[static_cast<std::size_t>(user)]);
        for (int j = 0; j < k; ++j)
            acc += quad_form(precoder.private_col(j), stats.q_fb[static_cast<std::size_t>(user)]);
        l(user) = acc;
    }
    return l;
}

Eigen::VectorXd private_leakage(const Precoder& precoder, const PerturbationStats& stats) {
    precoder.validate_against(stats);
    const int k = precoder.num_users();
    Eigen::VectorXd l(k);
    for (int user = 0; user < k; ++user) {
        double acc = 0.0;
        for (int col = 0; col < k + 1; ++col)
            acc += quad_form(precoder.p.col(col), stats.q_both[static_cast<std::size_t>(user)]);
        for (int j = 0; j < k; ++j) {
            if (j == user)
                continue;
            acc += quad_form(precoder.private_col(j), stats.q_fb[static_cast<std::size_t>(user)]);
        }
        l(user) = acc;
    }
    return l;
}

Eigen::VectorXd common_rate(const Precoder& precoder, const PerturbationStats& stats,
                            double sigma2) {
    check_sigma(sigma2);
    const Eigen::VectorXd leak = common_leakage(precoder, stats);
    const int k = precoder.num_users();
    Eigen::VectorXd rates(k);
    for (int user = 0; user < k; ++user) {
        const double signal =
            quad_form(precoder.common(), stats.q_fb[static_cast<std::size_t>(user)]);
        rates(user) = log2_1p(signal / (leak(user) + sigma2));
    }
    return rates;
}

Eigen::VectorXd private_rate(const Precoder& precoder, const PerturbationStats& stats,
                             double sigma2) {
    check_sigma(sigma2);
    const Eigen::VectorXd leak = private_leakage(precoder, stats);
    const int k = precoder.num_users();
    Eigen::VectorXd rates(k);
    for (int user = 0; user < k; ++user) {
        const double signal =
            quad_form(precoder.private_col(user), stats.q_fb[static_cast<std::size_t>(user)]);
        rates(user) = log2_1p(signal / (leak(user) + sigma2));
    }
    return rates;
}

RateReport total_rates(const Precoder& precoder, const PerturbationStats& stats, double sigma2,
                       double common_sum_slack) {
    RateReport report;
    report.r_common = common_rate(precoder, stats, sigma2);
    report.r_private = private_rate(precoder, stats, sigma2);
    report.r_total = report.r_private + precoder.c;
    report.common_sum_ok =
        report.r_common.minCoeff() + common_sum_slack >= precoder.c.sum();
    return report;
}

InstantaneousRates instantaneous_rate_sample(const Eigen::MatrixXcd& h_hat,
                                             const Precoder& precoder,
                                             const PerturbationModel& model, double sigma2,
                                             RandomStream& rng, int n_draws) {
    check_sigma(sigma2);
    model.validate();
    if (n_draws < 1)
        throw std::invalid_argument("instantaneous_rate_sample: n_draws must be at least 1");
    const int nt = static_cast<int>(h_hat.rows());
    const int k = static_cast<int>(h_hat.cols());
    if (precoder.num_feeds() != nt || precoder.num_users() != k)
        throw std::invalid_argument("instantaneous_rate_sample: precoder/channel mismatch");

    InstantaneousRates acc;
    acc.common = Eigen::VectorXd::Zero(k);
    acc.priv = Eigen::VectorXd::Zero(k);

    Eigen::VectorXcd h_fb(nt), h_err(nt), h_full(nt);
    for (int draw = 0; draw < n_draws; ++draw) {
        for (int user = 0; user < k; ++user) {
            for (int feed = 0; feed < nt; ++feed) {
                const double th_fb = rng.normal(0.0, model.delta_fb_rad);
                const double th_ce = rng.normal(0.0, model.delta_ce_rad);
                const std::complex<double> e_fb = std::polar(1.0, th_fb);
                const std::complex<double> e_ce = std::polar(1.0, th_ce);
                h_fb(feed) = h_hat(feed, user) * e_fb;
                h_err(feed) = h_fb(feed) * (e_ce - 1.0);
                h_full(feed) = h_fb(feed) * e_ce;
            }

            const double desired_c = std::norm(std::complex<double>(h_fb.dot(precoder.common())));
            const double self_c = std::norm(std::complex<double>(h_err.dot(precoder.common())));
            double cross_all = 0.0;
            for (int j = 0; j < k; ++j)
                cross_all += std::norm(std::complex<double>(h_full.dot(precoder.private_col(j))));
            acc.common(user) += log2_1p(desired_c / (self_c + cross_all + sigma2));

            const double desired_p =
                std::norm(std::complex<double>(h_fb.dot(precoder.private_col(user))));
            const double self_p =
                std::norm(std::complex<double>(h_err.dot(precoder.private_col(user))));
            double cross_others = 0.0;
            for (int j = 0; j < k; ++j) {
                if (j == user)
                    continue;
                cross_others +=
                    std::norm(std::complex<double>(h_full.dot(precoder.private_col(j))));
            }
            acc.priv(user) +=
                log2_1p(desired_p / (self_p + self_c + cross_others + sigma2));
        }
    }
    acc.common /= static_cast<double>(n_draws);
    acc.priv /= static_cast<double>(n_draws);
    return acc;
}

} // namespace satrm
