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

#include "satrm/optimizer.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>

namespace satrm {

namespace {

constexpr double kLn2 = 0.6931471805599453094;

// Linearization points are kept well away from zero: a tangent point of
// x -> p^H Q p / x at x ~ 1e-10 produces 1e20-scale coefficients that no
// double-precision KKT solve survives. 1e-6 is still far below any SINR of
// interest.
constexpr double kPipelineFloor = 1e-6;

double log2_1p(double x) { return std::log1p(x) / kLn2; }

double quad_form(const Eigen::VectorXcd& p, const Eigen::MatrixXcd& q) {
    return std::real(std::complex<double>(p.adjoint() * q * p));
}

} // namespace

const char* to_string(Scheme scheme) {
    switch (scheme) {
    case Scheme::rm_rsma: return "RM-RSMA";
    case Scheme::rm_sdma: return "RM-SDMA";
    case Scheme::mmse_rsma: return "MMSE-RSMA";
    case Scheme::rm_4color: return "RM-4color";
    case Scheme::rm_rsma_noinfo: return "RM-RSMA-noinfo";
    }
    return "unknown";
}

const char* to_string(ObjectiveNorm norm) {
    return norm == ObjectiveNorm::l1 ? "l1" : "l2";
}

const char* to_string(RmStatus status) {
    switch (status) {
    case RmStatus::converged: return "converged";
    case RmStatus::iteration_cap: return "iteration_cap";
    case RmStatus::subproblem_infeasible: return "subproblem_infeasible";
    case RmStatus::subproblem_failure: return "subproblem_failure";
    }
    return "unknown";
}

namespace {

std::string lower(std::string s) {
    for (char& c : s)
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

} // namespace

Scheme scheme_from_string(const std::string& name) {
    const std::string n = lower(name);
    if (n == "rm-rsma" || n == "rsma")
        return Scheme::rm_rsma;
    if (n == "rm-sdma" || n == "sdma")
        return Scheme::rm_sdma;
    if (n == "mmse-rsma" || n == "mmse")
        return Scheme::mmse_rsma;
    if (n == "rm-4color" || n == "4color")
        return Scheme::rm_4color;
    if (n == "rm-rsma-noinfo" || n == "noinfo")
        return Scheme::rm_rsma_noinfo;
    throw std::invalid_argument("unknown scheme: " + name);
}

ObjectiveNorm objective_norm_from_string(const std::string& name) {
    const std::string n = lower(name);
    if (n == "l1")
        return ObjectiveNorm::l1;
    if (n == "l2")
        return ObjectiveNorm::l2;
    throw std::invalid_argument("unknown objective norm: " + name);
}

SinrSurrogate linearize_common(const Eigen::VectorXcd& pc_n, double a_n,
                               const Eigen::MatrixXcd& q_fb) {
    if (a_n < kLinearizationFloor)
        throw std::invalid_argument("linearize_common: linearization point below floor");
    SinrSurrogate s;
    s.w = q_fb * pc_n;
    s.p_scale = 2.0 / a_n;
    s.slack_coeff = -std::real(std::complex<double>(pc_n.adjoint() * s.w)) / (a_n * a_n);
    return s;
}

SinrSurrogate linearize_private(const Eigen::VectorXcd& pk_n, double b_n,
                                const Eigen::MatrixXcd& q_fb) {
    if (b_n < kLinearizationFloor)
        throw std::invalid_argument("linearize_private: linearization point below floor");
    return linearize_common(pk_n, b_n, q_fb);
}

LogSurrogate soc_log_surrogate(double x_n) {
    if (x_n < kLinearizationFloor)
        throw std::invalid_argument("soc_log_surrogate: point below floor");
    LogSurrogate out;
    out.v = std::log1p(x_n) + x_n / (1.0 + x_n);
    out.u = x_n * x_n / (1.0 + x_n);
    return out;
}

double rm_objective(const Eigen::VectorXd& r_target, const Eigen::VectorXd& c,
                    const Eigen::VectorXd& alpha, const Eigen::MatrixXcd& p,
                    const RmOptions& opts) {
    const Eigen::VectorXd gap = r_target - (c + alpha);
    const double base = opts.objective_norm == ObjectiveNorm::l2 ? gap.squaredNorm()
                                                                 : gap.lpNorm<1>();
    return opts.eta * base + (1.0 - opts.eta) * p.squaredNorm();
}

namespace {

/// Stream structure of one pipeline run.
struct PipelineSpec {
    bool common = true;
    std::vector<Eigen::VectorXcd> dirs; // non-empty: frozen private directions
    bool scalar_privates() const { return !dirs.empty(); }
};

/// Demands, power cap and noise of the (sub)problem being solved.
struct ProblemData {
    Eigen::VectorXd r_target;
    double per_feed_cap = 0.0;
    double sigma2 = 1.0;
};

/// Per-run embedded PSD factors; built once, reused every SCA iteration.
struct QuadCache {
    std::vector<conic::PsdFactor> emb_fb;       // embed(q_fb[k])
    std::vector<conic::PsdFactor> emb_both;     // embed(q_both[k])
    std::vector<conic::PsdFactor> emb_both_fb;  // embed(q_both[k] + q_fb[k])
    // scalar-direction variants: [user][private j]
    std::vector<std::vector<conic::PsdFactor>> sc_both;
    std::vector<std::vector<conic::PsdFactor>> sc_both_fb;
};

QuadCache build_cache(const PerturbationStats& stats, const PipelineSpec& spec) {
    QuadCache cache;
    const int k = stats.num_users();
    for (int user = 0; user < k; ++user) {
        const auto& fb = stats.q_fb[static_cast<std::size_t>(user)];
        const auto& both = stats.q_both[static_cast<std::size_t>(user)];
        cache.emb_fb.emplace_back(conic::embed_complex_quadratic(fb));
        cache.emb_both.emplace_back(conic::embed_complex_quadratic(both));
        cache.emb_both_fb.emplace_back(conic::embed_complex_quadratic(both + fb));
        if (spec.scalar_privates()) {
            std::vector<conic::PsdFactor> row_both, row_both_fb;
            for (int j = 0; j < k; ++j) {
                const auto& w = spec.dirs[static_cast<std::size_t>(j)];
                const double v_both = std::max(quad_form(w, both), 0.0);
                const double v_fb = std::max(quad_form(w, fb), 0.0);
                row_both.push_back(
                    conic::PsdFactor::diagonal(Eigen::VectorXd::Constant(1, v_both)));
                row_both_fb.push_back(
                    conic::PsdFactor::diagonal(Eigen::VectorXd::Constant(1, v_both + v_fb)));
            }
            cache.sc_both.push_back(std::move(row_both));
            cache.sc_both_fb.push_back(std::move(row_both_fb));
        }
    }
    return cache;
}

SubproblemLayout make_layout(int nt, int k, const RmOptions& opts, const PipelineSpec& spec,
                             conic::ConicProgram& program) {
    SubproblemLayout lay;
    lay.has_common = spec.common;
    lay.scalar_privates = spec.scalar_privates();
    lay.nt = nt;
    lay.k = k;
    lay.col_offset.assign(static_cast<std::size_t>(k) + 1, -1);
    lay.col_dim.assign(static_cast<std::size_t>(k) + 1, 0);
    lay.private_dirs = spec.dirs;

    if (spec.common) {
        lay.col_offset[0] = program.add_variables("pc", 2 * nt);
        lay.col_dim[0] = 2 * nt;
    }
    if (spec.scalar_privates()) {
        const int s_off = program.add_variables("s", k);
        for (int j = 0; j < k; ++j) {
            lay.col_offset[static_cast<std::size_t>(j) + 1] = s_off + j;
            lay.col_dim[static_cast<std::size_t>(j) + 1] = 1;
        }
    } else {
        for (int j = 0; j < k; ++j) {
            lay.col_offset[static_cast<std::size_t>(j) + 1] =
                program.add_variables("p" + std::to_string(j + 1), 2 * nt);
            lay.col_dim[static_cast<std::size_t>(j) + 1] = 2 * nt;
        }
    }
    if (spec.common)
        lay.c_off = program.add_variables("c", k);
    lay.alpha_off = program.add_variables("alpha", k);
    if (spec.common)
        lay.a_off = program.add_variables("a", k);
    lay.b_off = program.add_variables("b", k);
    if (opts.objective_norm == ObjectiveNorm::l1)
        lay.t_off = program.add_variables("t", k);
    return lay;
}

Subproblem build_impl(const ScaState& state, const PerturbationStats& stats,
                      const ProblemData& data, const RmOptions& opts, const PipelineSpec& spec,
                      const QuadCache& cache) {
    const int nt = stats.num_feeds();
    const int k = stats.num_users();
    Subproblem sub;
    SubproblemLayout& lay = sub.layout = make_layout(nt, k, opts, spec, sub.program);
    conic::ConicProgram& prog = sub.program;
    const int n = prog.num_variables();

    // --- objective ---------------------------------------------------
    if (opts.objective_norm == ObjectiveNorm::l2) {
        for (int user = 0; user < k; ++user) {
            const double r = data.r_target(user);
            if (spec.common) {
                Eigen::MatrixXd quad(2, 2);
                quad << opts.eta, opts.eta, opts.eta, opts.eta;
                prog.add_quadratic_cost({lay.c_off + user, lay.alpha_off + user}, quad);
                Eigen::VectorXd lin = Eigen::VectorXd::Constant(1, -2.0 * opts.eta * r);
                prog.add_linear_cost(lay.c_off + user, lin);
                prog.add_linear_cost(lay.alpha_off + user, lin);
            } else {
                prog.add_quadratic_cost({lay.alpha_off + user},
                                        Eigen::MatrixXd::Constant(1, 1, opts.eta));
                prog.add_linear_cost(lay.alpha_off + user,
                                     Eigen::VectorXd::Constant(1, -2.0 * opts.eta * r));
            }
            prog.add_constant_cost(opts.eta * r * r);
        }
    } else {
        prog.add_linear_cost(lay.t_off, Eigen::VectorXd::Constant(k, opts.eta));
    }
    if (opts.eta < 1.0) {
        for (int col = 0; col <= k; ++col) {
            if (lay.col_offset[static_cast<std::size_t>(col)] < 0)
                continue;
            const int dim = lay.col_dim[static_cast<std::size_t>(col)];
            prog.add_quadratic_cost(lay.col_offset[static_cast<std::size_t>(col)],
                                    (1.0 - opts.eta) * Eigen::MatrixXd::Identity(dim, dim));
        }
    }

    // --- nonnegativity (common split, slacks, scalar powers) ---------
    auto nonneg = [&](int offset, int count) {
        for (int i = 0; i < count; ++i) {
            Eigen::VectorXd a = Eigen::VectorXd::Zero(n);
            a(offset + i) = -1.0;
            prog.add_linear_constraint(std::move(a), 0.0);
        }
    };
    if (spec.common) {
        nonneg(lay.c_off, k);
        nonneg(lay.a_off, k);
    }
    nonneg(lay.alpha_off, k);
    nonneg(lay.b_off, k);
    if (spec.scalar_privates())
        nonneg(lay.col_offset[1], k);

    // --- L1 epigraph: t_k >= |r_k - (c_k + alpha_k)| ------------------
    if (opts.objective_norm == ObjectiveNorm::l1) {
        for (int user = 0; user < k; ++user) {
            Eigen::VectorXd up = Eigen::VectorXd::Zero(n);
            if (spec.common)
                up(lay.c_off + user) = -1.0;
            up(lay.alpha_off + user) = -1.0;
            up(lay.t_off + user) = -1.0;
            prog.add_linear_constraint(std::move(up), -data.r_target(user));
            Eigen::VectorXd down = Eigen::VectorXd::Zero(n);
            if (spec.common)
                down(lay.c_off + user) = 1.0;
            down(lay.alpha_off + user) = 1.0;
            down(lay.t_off + user) = -1.0;
            prog.add_linear_constraint(std::move(down), data.r_target(user));
        }
    }

    // --- per-feed power rows of P P^H --------------------------------
    for (int feed = 0; feed < nt; ++feed) {
        Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
        for (int col = 0; col <= k; ++col) {
            const int off = lay.col_offset[static_cast<std::size_t>(col)];
            if (off < 0)
                continue;
            if (lay.col_dim[static_cast<std::size_t>(col)] == 1)
                diag(off) += std::norm(lay.private_dirs[static_cast<std::size_t>(col) - 1](feed));
            else {
                diag(off + feed) = 1.0;
                diag(off + nt + feed) = 1.0;
            }
        }
        prog.add_quad_le_affine(conic::PsdFactor::diagonal(diag), Eigen::VectorXd::Zero(n),
                                data.per_feed_cap);
    }

    auto place_column = [&](std::vector<std::pair<int, const conic::PsdFactor*>>& blocks,
                            int col, const conic::PsdFactor& full,
                            const conic::PsdFactor& scalar) {
        const int off = lay.col_offset[static_cast<std::size_t>(col)];
        if (off < 0)
            return;
        const bool is_scalar = lay.col_dim[static_cast<std::size_t>(col)] == 1;
        blocks.emplace_back(off, is_scalar ? &scalar : &full);
    };

    // --- SINR surrogate constraints ----------------------------------
    for (int user = 0; user < k; ++user) {
        const auto uu = static_cast<std::size_t>(user);
        const auto& q_fb = stats.q_fb[uu];

        if (spec.common) {
            // leakage l_{c,k} <= fhat1(p_c, a_k) - sigma2
            std::vector<std::pair<int, const conic::PsdFactor*>> blocks;
            place_column(blocks, 0, cache.emb_both[uu], cache.emb_both[uu]);
            for (int j = 1; j <= k; ++j)
                place_column(blocks, j, cache.emb_both_fb[uu],
                             spec.scalar_privates()
                                 ? cache.sc_both_fb[uu][static_cast<std::size_t>(j) - 1]
                                 : cache.emb_both_fb[uu]);
            const SinrSurrogate sur = linearize_common(state.p_n.col(0), state.a_n(user), q_fb);
            Eigen::VectorXd lin = Eigen::VectorXd::Zero(n);
            lin.segment(lay.col_offset[0], 2 * nt) =
                sur.p_scale * conic::embed_complex_linear(sur.w);
            lin(lay.a_off + user) = sur.slack_coeff;
            // keep coefficient magnitudes solver-friendly
            const double scale = std::max(1.0, lin.cwiseAbs().maxCoeff() / 1e4);
            prog.add_quad_le_affine(
                conic::PsdFactor::block_diagonal(n, blocks).scaled(1.0 / scale), lin / scale,
                -data.sigma2 / scale);
        }

        {
            // leakage l_{p,k} <= fhat2(p_k, b_k) - sigma2
            std::vector<std::pair<int, const conic::PsdFactor*>> blocks;
            if (spec.common)
                place_column(blocks, 0, cache.emb_both[uu], cache.emb_both[uu]);
            for (int j = 1; j <= k; ++j) {
                const bool own = (j == user + 1);
                if (spec.scalar_privates())
                    place_column(blocks, j, cache.emb_both[uu],
                                 own ? cache.sc_both[uu][static_cast<std::size_t>(j) - 1]
                                     : cache.sc_both_fb[uu][static_cast<std::size_t>(j) - 1]);
                else
                    place_column(blocks, j, own ? cache.emb_both[uu] : cache.emb_both_fb[uu],
                                 cache.emb_both[uu]);
            }
            const SinrSurrogate sur =
                linearize_private(state.p_n.col(user + 1), state.b_n(user), q_fb);
            Eigen::VectorXd lin = Eigen::VectorXd::Zero(n);
            const int off = lay.col_offset[uu + 1];
            if (lay.col_dim[uu + 1] == 1)
                lin(off) = sur.p_scale * std::real(std::complex<double>(
                                             sur.w.dot(lay.private_dirs[uu])));
            else
                lin.segment(off, 2 * nt) = sur.p_scale * conic::embed_complex_linear(sur.w);
            lin(lay.b_off + user) = sur.slack_coeff;
            const double scale = std::max(1.0, lin.cwiseAbs().maxCoeff() / 1e4);
            prog.add_quad_le_affine(
                conic::PsdFactor::block_diagonal(n, blocks).scaled(1.0 / scale), lin / scale,
                -data.sigma2 / scale);
        }

        if (spec.common) {
            // a_k + v - ln2 sum(c) >= ||[2 sqrt(u), a_k - v + ln2 sum(c)]||
            const LogSurrogate ls = soc_log_surrogate(state.a_n(user));
            conic::SocConstraint soc;
            soc.f = Eigen::MatrixXd::Zero(2, n);
            soc.g = Eigen::VectorXd::Zero(2);
            soc.g(0) = 2.0 * std::sqrt(ls.u);
            soc.f(1, lay.a_off + user) = 1.0;
            for (int j = 0; j < k; ++j)
                soc.f(1, lay.c_off + j) = kLn2;
            soc.g(1) = -ls.v;
            soc.c = Eigen::VectorXd::Zero(n);
            soc.c(lay.a_off + user) = 1.0;
            for (int j = 0; j < k; ++j)
                soc.c(lay.c_off + j) = -kLn2;
            soc.d = ls.v;
            prog.add_soc_constraint(std::move(soc));
        }

        {
            // b_k + v - ln2 alpha_k >= ||[2 sqrt(u), b_k - v + ln2 alpha_k]||
            const LogSurrogate ls = soc_log_surrogate(state.b_n(user));
            conic::SocConstraint soc;
            soc.f = Eigen::MatrixXd::Zero(2, n);
            soc.g = Eigen::VectorXd::Zero(2);
            soc.g(0) = 2.0 * std::sqrt(ls.u);
            soc.f(1, lay.b_off + user) = 1.0;
            soc.f(1, lay.alpha_off + user) = kLn2;
            soc.g(1) = -ls.v;
            soc.c = Eigen::VectorXd::Zero(n);
            soc.c(lay.b_off + user) = 1.0;
            soc.c(lay.alpha_off + user) = -kLn2;
            soc.d = ls.v;
            prog.add_soc_constraint(std::move(soc));
        }
    }

    return sub;
}

Eigen::VectorXcd column_from_vars(const SubproblemLayout& lay, const Eigen::VectorXd& x,
                                  int col) {
    const int off = lay.col_offset[static_cast<std::size_t>(col)];
    if (off < 0)
        return Eigen::VectorXcd::Zero(lay.nt);
    if (lay.col_dim[static_cast<std::size_t>(col)] == 1)
        return x(off) * lay.private_dirs[static_cast<std::size_t>(col) - 1];
    Eigen::VectorXcd p(lay.nt);
    p.real() = x.segment(off, lay.nt);
    p.imag() = x.segment(off + lay.nt, lay.nt);
    return p;
}

} // namespace

IterateUpdate extract_iterate(const Subproblem& sub, const Eigen::VectorXd& x) {
    const SubproblemLayout& lay = sub.layout;
    IterateUpdate up;
    up.p.resize(lay.nt, lay.k + 1);
    for (int col = 0; col <= lay.k; ++col)
        up.p.col(col) = column_from_vars(lay, x, col);
    up.c = lay.has_common ? x.segment(lay.c_off, lay.k).cwiseMax(0.0).eval()
                          : Eigen::VectorXd::Zero(lay.k).eval();
    up.alpha = x.segment(lay.alpha_off, lay.k).cwiseMax(0.0);
    up.a = lay.has_common ? x.segment(lay.a_off, lay.k).cwiseMax(kPipelineFloor).eval()
                          : Eigen::VectorXd::Constant(lay.k, kPipelineFloor).eval();
    up.b = x.segment(lay.b_off, lay.k).cwiseMax(kPipelineFloor);
    return up;
}

Eigen::VectorXd iterate_vector(const Subproblem& sub, const ScaState& state,
                               const Eigen::VectorXd& r_target) {
    const SubproblemLayout& lay = sub.layout;
    Eigen::VectorXd x = Eigen::VectorXd::Zero(sub.program.num_variables());
    for (int col = 0; col <= lay.k; ++col) {
        const int off = lay.col_offset[static_cast<std::size_t>(col)];
        if (off < 0)
            continue;
        if (lay.col_dim[static_cast<std::size_t>(col)] == 1) {
            x(off) = std::real(std::complex<double>(
                lay.private_dirs[static_cast<std::size_t>(col) - 1].dot(state.p_n.col(col))));
        } else {
            x.segment(off, lay.nt) = state.p_n.col(col).real();
            x.segment(off + lay.nt, lay.nt) = state.p_n.col(col).imag();
        }
    }
    if (lay.has_common)
        x.segment(lay.c_off, lay.k) = state.c_n;
    x.segment(lay.alpha_off, lay.k) = state.alpha_n;
    if (lay.has_common)
        x.segment(lay.a_off, lay.k) = state.a_n;
    x.segment(lay.b_off, lay.k) = state.b_n;
    if (lay.t_off >= 0)
        x.segment(lay.t_off, lay.k) =
            (r_target - (state.c_n + state.alpha_n)).cwiseAbs();
    return x;
}

namespace {

PipelineSpec spec_for(const RmOptions& opts, const Eigen::MatrixXcd& h_hat, double p_t,
                      double sigma2) {
    PipelineSpec spec;
    switch (opts.scheme) {
    case Scheme::rm_rsma:
    case Scheme::rm_rsma_noinfo:
        break;
    case Scheme::rm_sdma:
        spec.common = false;
        break;
    case Scheme::mmse_rsma:
        spec.dirs = mmse_directions(h_hat, p_t / opts.mmse_reg_scale, sigma2);
        break;
    case Scheme::rm_4color:
        spec.common = false;
        break;
    }
    return spec;
}

ScaState init_impl(const Eigen::MatrixXcd& h_hat, const PerturbationStats& stats,
                   const ProblemData& data, const RmOptions& opts, const PipelineSpec& spec) {
    const int nt = static_cast<int>(h_hat.rows());
    const int k = static_cast<int>(h_hat.cols());
    for (int user = 0; user < k; ++user)
        if (h_hat.col(user).norm() == 0.0)
            throw std::invalid_argument("initialize_state: zero channel column");

    Eigen::MatrixXcd p0 = Eigen::MatrixXcd::Zero(nt, k + 1);
    if (spec.common) {
        Eigen::JacobiSVD<Eigen::MatrixXcd> svd(h_hat, Eigen::ComputeThinU);
        p0.col(0) = svd.matrixU().col(0);
    }
    for (int user = 0; user < k; ++user) {
        if (spec.scalar_privates())
            p0.col(user + 1) = spec.dirs[static_cast<std::size_t>(user)];
        else
            p0.col(user + 1) = h_hat.col(user) / h_hat.col(user).norm();
    }

    const double half_cap = 0.5 * data.per_feed_cap;
    if (spec.scalar_privates()) {
        // one global scale so the frozen directions stay intact
        const double worst_row = p0.rowwise().squaredNorm().maxCoeff();
        if (worst_row <= 0.0)
            throw std::runtime_error("initialize_state: degenerate feed row");
        p0 *= std::sqrt(half_cap / worst_row);
    } else {
        for (int feed = 0; feed < nt; ++feed) {
            const double row = p0.row(feed).squaredNorm();
            if (row <= 0.0)
                throw std::runtime_error("initialize_state: degenerate feed row");
            p0.row(feed) *= std::sqrt(half_cap / row);
        }
    }

    ScaState state;
    state.p_n = p0;
    state.a_n.resize(k);
    state.b_n.resize(k);
    Precoder pre{p0, Eigen::VectorXd::Zero(k)};
    const Eigen::VectorXd leak_c = common_leakage(pre, stats);
    const Eigen::VectorXd leak_p = private_leakage(pre, stats);
    for (int user = 0; user < k; ++user) {
        const auto uu = static_cast<std::size_t>(user);
        const double sinr_c = quad_form(p0.col(0), stats.q_fb[uu]) / (leak_c(user) + data.sigma2);
        const double sinr_p =
            quad_form(p0.col(user + 1), stats.q_fb[uu]) / (leak_p(user) + data.sigma2);
        state.a_n(user) = std::max(sinr_c, kPipelineFloor);
        state.b_n(user) = std::max(sinr_p, kPipelineFloor);
    }
    state.c_n = Eigen::VectorXd::Zero(k);
    state.alpha_n.resize(k);
    for (int user = 0; user < k; ++user)
        state.alpha_n(user) = log2_1p(state.b_n(user));
    state.d_n = rm_objective(data.r_target, state.c_n, state.alpha_n, state.p_n, opts);
    state.iter = 0;
    return state;
}

RmSolution run_pipeline(const Eigen::MatrixXcd& h_hat, const PerturbationStats& design_stats,
                        const ProblemData& data, const RmOptions& opts,
                        const PipelineSpec& spec) {
    opts.validate();
    ScaState state = init_impl(h_hat, design_stats, data, opts, spec);
    const QuadCache cache = build_cache(design_stats, spec);

    RmSolution out;
    out.objective_trace.push_back(state.d_n);
    RmStatus status = RmStatus::iteration_cap;

    for (int n = 1; n <= opts.max_iter; ++n) {
        Subproblem sub = build_impl(state, design_stats, data, opts, spec, cache);
        const conic::Solution sol = conic::solve(sub.program, opts.solver);
        if (sol.status != conic::SolveStatus::optimal) {
            status = sol.status == conic::SolveStatus::infeasible
                         ? RmStatus::subproblem_infeasible
                         : RmStatus::subproblem_failure;
            break;
        }
        const IterateUpdate up = extract_iterate(sub, sol.x);
        const double d_prev = state.d_n;
        state.p_n = up.p;
        state.a_n = up.a;
        state.b_n = up.b;
        state.c_n = up.c;
        state.alpha_n = up.alpha;
        state.d_n = rm_objective(data.r_target, up.c, up.alpha, up.p, opts);
        state.iter = n;
        out.objective_trace.push_back(state.d_n);
        if (std::abs(state.d_n - d_prev) <= opts.tol) {
            status = RmStatus::converged;
            break;
        }
    }

    out.precoder = {state.p_n, state.c_n};
    out.rates = total_rates(out.precoder, design_stats, data.sigma2);
    out.alpha_p = state.alpha_n;
    out.power_used_w = state.p_n.squaredNorm();
    out.iterations = state.iter;
    out.status = status;
    return out;
}

ProblemData data_from(const Scenario& scenario) {
    return {scenario.r_target, scenario.physics.per_feed_power_w,
            scenario.physics.noise_variance};
}

} // namespace

ScaState initialize_state(const ChannelSet& channels, const PerturbationStats& stats,
                          const Scenario& scenario) {
    const RmOptions& opts = scenario.opts;
    PipelineSpec spec = spec_for(opts, channels.h_hat,
                                 scenario.physics.total_power_w(channels.num_feeds()),
                                 scenario.physics.noise_variance);
    return init_impl(channels.h_hat, stats, data_from(scenario), opts, spec);
}

Subproblem build_subproblem(const ScaState& state, const PerturbationStats& stats,
                            const Scenario& scenario, const RmOptions& opts) {
    PipelineSpec spec;
    if (opts.scheme == Scheme::rm_sdma || opts.scheme == Scheme::rm_4color)
        spec.common = false;
    else if (opts.scheme == Scheme::mmse_rsma) {
        // recover the frozen directions from the iterate columns
        for (int user = 0; user < stats.num_users(); ++user) {
            const Eigen::VectorXcd col = state.p_n.col(user + 1);
            if (col.norm() == 0.0)
                throw std::invalid_argument(
                    "build_subproblem: cannot recover frozen direction from zero column");
            spec.dirs.push_back(col / col.norm());
        }
    }
    const QuadCache cache = build_cache(stats, spec);
    return build_impl(state, stats, data_from(scenario), opts, spec, cache);
}

RmSolution run_sca(const ChannelSet& channels, const PerturbationStats& stats,
                   const Scenario& scenario, const RmOptions& opts) {
    RmOptions local = opts;
    local.scheme = Scheme::rm_rsma;
    return run_pipeline(channels.h_hat, stats, data_from(scenario), local, PipelineSpec{});
}

RmSolution solve_rm_sdma(const ChannelSet& channels, const PerturbationStats& stats,
                         const Scenario& scenario, const RmOptions& opts) {
    RmOptions local = opts;
    local.scheme = Scheme::rm_sdma;
    PipelineSpec spec;
    spec.common = false;
    return run_pipeline(channels.h_hat, stats, data_from(scenario), local, spec);
}

std::vector<Eigen::VectorXcd> mmse_directions(const Eigen::MatrixXcd& h_hat, double p_t,
                                              double sigma2) {
    if (!h_hat.allFinite())
        throw std::invalid_argument("mmse_directions: channel must be finite");
    if (p_t <= 0.0 || sigma2 <= 0.0)
        throw std::invalid_argument("mmse_directions: p_t and sigma2 must be positive");
    const int nt = static_cast<int>(h_hat.rows());
    const int k = static_cast<int>(h_hat.cols());
    const double reg = static_cast<double>(k) * sigma2 / p_t;
    Eigen::MatrixXcd gram =
        h_hat * h_hat.adjoint() + reg * Eigen::MatrixXcd::Identity(nt, nt);
    Eigen::LDLT<Eigen::MatrixXcd> ldlt(gram);
    if (ldlt.info() != Eigen::Success)
        throw std::runtime_error("mmse_directions: regularized Gram not factorizable");
    std::vector<Eigen::VectorXcd> dirs;
    dirs.reserve(static_cast<std::size_t>(k));
    for (int user = 0; user < k; ++user) {
        Eigen::VectorXcd w = ldlt.solve(h_hat.col(user));
        const double norm = w.norm();
        if (norm == 0.0)
            throw std::runtime_error("mmse_directions: zero direction");
        dirs.push_back(w / norm);
    }
    return dirs;
}

RmSolution solve_mmse_rsma(const ChannelSet& channels, const PerturbationStats& stats,
                           const Scenario& scenario, const RmOptions& opts) {
    RmOptions local = opts;
    local.scheme = Scheme::mmse_rsma;
    PipelineSpec spec;
    spec.dirs = mmse_directions(channels.h_hat,
                                scenario.physics.total_power_w(channels.num_feeds()) /
                                    opts.mmse_reg_scale,
                                scenario.physics.noise_variance);
    return run_pipeline(channels.h_hat, stats, data_from(scenario), local, spec);
}

std::vector<ColorGroup> color_groups(const Geometry& geometry,
                                     const std::vector<int>& beam_colors) {
    const int nt = geometry.num_feeds();
    std::vector<int> colors = beam_colors;
    if (colors.empty()) {
        colors.resize(static_cast<std::size_t>(nt));
        for (int beam = 0; beam < nt; ++beam)
            colors[static_cast<std::size_t>(beam)] = beam % 4;
    }
    if (static_cast<int>(colors.size()) != nt)
        throw std::invalid_argument("color_groups: one color per beam required");

    std::vector<ColorGroup> groups(4);
    for (int beam = 0; beam < nt; ++beam) {
        const int color = colors[static_cast<std::size_t>(beam)];
        if (color < 0 || color > 3)
            throw std::invalid_argument("color_groups: colors must lie in 0..3");
        groups[static_cast<std::size_t>(color)].feeds.push_back(beam);
    }
    for (int user = 0; user < geometry.num_users(); ++user) {
        const int beam = geometry.user_beam_assignment[static_cast<std::size_t>(user)];
        groups[static_cast<std::size_t>(colors[static_cast<std::size_t>(beam)])].users.push_back(
            user);
    }
    return groups;
}

RmSolution solve_rm_4color(const ChannelSet& channels, const PerturbationStats& stats,
                           const Scenario& scenario, const RmOptions& opts) {
    const int nt = channels.num_feeds();
    const int k = channels.num_users();
    const std::vector<ColorGroup> groups = color_groups(scenario.geometry, opts.beam_colors);

    RmSolution out;
    out.precoder.p = Eigen::MatrixXcd::Zero(nt, k + 1);
    out.precoder.c = Eigen::VectorXd::Zero(k);
    out.rates.r_common = Eigen::VectorXd::Zero(k);
    out.rates.r_private = Eigen::VectorXd::Zero(k);
    out.rates.r_total = Eigen::VectorXd::Zero(k);
    out.rates.common_sum_ok = true;
    out.alpha_p = Eigen::VectorXd::Zero(k);
    out.groups = groups;

    RmOptions local = opts;
    local.scheme = Scheme::rm_sdma;
    std::vector<std::vector<double>> traces;

    for (const ColorGroup& group : groups) {
        if (group.users.empty())
            continue;
        const int gf = static_cast<int>(group.feeds.size());
        const int gu = static_cast<int>(group.users.size());
        Eigen::MatrixXcd h_group(gf, gu);
        Eigen::VectorXd r_group(gu);
        for (int uu = 0; uu < gu; ++uu) {
            // quarter-band demand is scaled up; achieved group rates scale
            // back down by the same factor
            r_group(uu) = 4.0 * scenario.r_target(group.users[static_cast<std::size_t>(uu)]);
            for (int ff = 0; ff < gf; ++ff)
                h_group(ff, uu) =
                    channels.h_hat(group.feeds[static_cast<std::size_t>(ff)],
                                   group.users[static_cast<std::size_t>(uu)]);
        }
        const PerturbationStats group_stats = build_stats(h_group, stats.model);
        ProblemData data{r_group, scenario.physics.per_feed_power_w,
                         scenario.physics.noise_variance / 4.0};
        PipelineSpec spec;
        spec.common = false;
        const RmSolution part = run_pipeline(h_group, group_stats, data, local, spec);

        for (int uu = 0; uu < gu; ++uu) {
            const int user = group.users[static_cast<std::size_t>(uu)];
            for (int ff = 0; ff < gf; ++ff)
                out.precoder.p(group.feeds[static_cast<std::size_t>(ff)], user + 1) =
                    part.precoder.p(ff, uu + 1);
            out.rates.r_private(user) = 0.25 * part.rates.r_private(uu);
            out.rates.r_total(user) = 0.25 * part.rates.r_total(uu);
            out.alpha_p(user) = 0.25 * part.alpha_p(uu);
        }
        out.power_used_w += part.power_used_w;
        out.iterations = std::max(out.iterations, part.iterations);
        if (part.status != RmStatus::converged && part.status != RmStatus::iteration_cap)
            out.status = part.status;
        traces.push_back(part.objective_trace);
    }

    // summed per-group traces, shorter ones padded with their final value
    std::size_t longest = 0;
    for (const auto& t : traces)
        longest = std::max(longest, t.size());
    out.objective_trace.assign(longest, 0.0);
    for (const auto& t : traces)
        for (std::size_t i = 0; i < longest; ++i)
            out.objective_trace[i] += i < t.size() ? t[i] : t.back();
    return out;
}

RmSolution solve_scheme(const ChannelSet& channels, const PerturbationStats& stats,
                        const Scenario& scenario, const RmOptions& opts) {
    switch (opts.scheme) {
    case Scheme::rm_rsma:
        return run_sca(channels, stats, scenario, opts);
    case Scheme::rm_sdma:
        return solve_rm_sdma(channels, stats, scenario, opts);
    case Scheme::mmse_rsma:
        return solve_mmse_rsma(channels, stats, scenario, opts);
    case Scheme::rm_4color:
        return solve_rm_4color(channels, stats, scenario, opts);
    case Scheme::rm_rsma_noinfo: {
        // design as if the phases were error-free, report rates under the
        // true statistics
        const PerturbationStats blind = build_stats(channels.h_hat, PerturbationModel{});
        RmSolution sol = run_sca(channels, blind, scenario, opts);
        sol.rates = total_rates(sol.precoder, stats, scenario.physics.noise_variance);
        return sol;
    }
    }
    throw std::logic_error("solve_scheme: unhandled scheme");
}

} // namespace satrm
