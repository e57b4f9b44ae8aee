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
//
// Dense primal-dual interior-point method for cone QPs
//
//   minimize 0.5 x'Px + q'x   s.t.  Gx + s = h,  s in K,
//
// K a product of a nonnegative orthant and second-order cones. Search
// directions follow the usual Nesterov-Todd scaled Newton system with a
// Mehrotra second-order correction; the reduced system
// (P + G' W^-2 G) dx = rhs is factored densely per iteration.

#include "satrm/conic.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace satrm::conic {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Layout {
    int nonneg = 0;
    std::vector<int> soc;
    std::vector<int> soc_offset;
    int total = 0;
    int degree = 0;
};

Layout make_layout(const StandardConeProblem& problem) {
    Layout lay;
    lay.nonneg = problem.nonneg;
    lay.soc = problem.soc;
    int off = problem.nonneg;
    for (int dim : problem.soc) {
        if (dim < 2)
            throw std::invalid_argument("cone qp: SOC blocks must have dimension >= 2");
        lay.soc_offset.push_back(off);
        off += dim;
    }
    lay.total = off;
    lay.degree = lay.nonneg + static_cast<int>(lay.soc.size());
    return lay;
}

VectorXd cone_identity(const Layout& lay) {
    VectorXd e = VectorXd::Zero(lay.total);
    e.head(lay.nonneg).setOnes();
    for (std::size_t i = 0; i < lay.soc.size(); ++i)
        e(lay.soc_offset[i]) = 1.0;
    return e;
}

/// Largest violation of cone membership: max(-u_i) over the orthant and
/// ||u1|| - u0 over each SOC. Negative means strictly interior.
double cone_residual(const Layout& lay, const VectorXd& u) {
    double worst = -kInf;
    if (lay.nonneg > 0)
        worst = std::max(worst, -u.head(lay.nonneg).minCoeff());
    for (std::size_t i = 0; i < lay.soc.size(); ++i) {
        const int off = lay.soc_offset[i];
        const int dim = lay.soc[i];
        worst = std::max(worst, u.segment(off + 1, dim - 1).norm() - u(off));
    }
    return worst;
}

void shift_to_interior(const Layout& lay, VectorXd& u) {
    const double t = cone_residual(lay, u);
    if (t >= -1e-8 * std::max(1.0, u.norm())) {
        const double a = 1.0 + t;
        u.head(lay.nonneg).array() += a;
        for (std::size_t i = 0; i < lay.soc.size(); ++i)
            u(lay.soc_offset[i]) += a;
    }
}

VectorXd jordan_product(const Layout& lay, const VectorXd& u, const VectorXd& v) {
    VectorXd out(lay.total);
    out.head(lay.nonneg) = u.head(lay.nonneg).cwiseProduct(v.head(lay.nonneg));
    for (std::size_t i = 0; i < lay.soc.size(); ++i) {
        const int off = lay.soc_offset[i];
        const int dim = lay.soc[i];
        const auto u1 = u.segment(off + 1, dim - 1);
        const auto v1 = v.segment(off + 1, dim - 1);
        out(off) = u.segment(off, dim).dot(v.segment(off, dim));
        out.segment(off + 1, dim - 1) = u(off) * v1 + v(off) * u1;
    }
    return out;
}

/// Solves lambda o y = w for y.
VectorXd jordan_divide(const Layout& lay, const VectorXd& lambda, const VectorXd& w) {
    VectorXd out(lay.total);
    out.head(lay.nonneg) =
        w.head(lay.nonneg).cwiseQuotient(lambda.head(lay.nonneg).cwiseMax(1e-300));
    for (std::size_t i = 0; i < lay.soc.size(); ++i) {
        const int off = lay.soc_offset[i];
        const int dim = lay.soc[i];
        const auto l1 = lambda.segment(off + 1, dim - 1);
        const auto w1 = w.segment(off + 1, dim - 1);
        const double l0 = lambda(off);
        const double det = std::max(l0 * l0 - l1.squaredNorm(), 1e-300);
        const double y0 = (l0 * w(off) - l1.dot(w1)) / det;
        out(off) = y0;
        out.segment(off + 1, dim - 1) = (w1 - y0 * l1) / (l0 != 0.0 ? l0 : 1e-300);
    }
    return out;
}

struct Scaling {
    VectorXd lp_w; // sqrt(s_i / z_i)
    struct Soc {
        double beta;
        VectorXd v; // unit hyperbolic norm: v0^2 - ||v1||^2 = 1
    };
    std::vector<Soc> socs;
};

bool compute_scaling(const Layout& lay, const VectorXd& s, const VectorXd& z, Scaling& w) {
    w.lp_w.resize(lay.nonneg);
    for (int i = 0; i < lay.nonneg; ++i) {
        if (s(i) <= 0.0 || z(i) <= 0.0)
            return false;
        w.lp_w(i) = std::sqrt(s(i) / z(i));
    }
    w.socs.clear();
    for (std::size_t i = 0; i < lay.soc.size(); ++i) {
        const int off = lay.soc_offset[i];
        const int dim = lay.soc[i];
        const auto sb = s.segment(off, dim);
        const auto zb = z.segment(off, dim);
        const double s_res = sb(0) * sb(0) - sb.tail(dim - 1).squaredNorm();
        const double z_res = zb(0) * zb(0) - zb.tail(dim - 1).squaredNorm();
        if (s_res <= 0.0 || z_res <= 0.0 || sb(0) <= 0.0 || zb(0) <= 0.0)
            return false;
        const double a = std::sqrt(s_res);
        const double b = std::sqrt(z_res);
        VectorXd sn = sb / a;
        VectorXd zn = zb / b;
        const double gamma = std::sqrt((1.0 + sn.dot(zn)) / 2.0);
        // Geometric-mean point between sn and J zn, then its Jordan square
        // root; W = beta (2 v v' - J) then satisfies W z = W^{-1} s.
        VectorXd v(dim);
        v(0) = sn(0) + zn(0);
        v.tail(dim - 1) = sn.tail(dim - 1) - zn.tail(dim - 1);
        v /= 2.0 * gamma;
        v(0) += 1.0;
        v /= std::sqrt(2.0 * v(0));
        w.socs.push_back({std::sqrt(a / b), std::move(v)});
    }
    return true;
}

/// W u (hyperbolic Householder form W = beta (2 v v' - J) per SOC block).
VectorXd apply_w(const Layout& lay, const Scaling& w, const VectorXd& u) {
    VectorXd out(lay.total);
    out.head(lay.nonneg) = u.head(lay.nonneg).cwiseProduct(w.lp_w);
    for (std::size_t i = 0; i < lay.soc.size(); ++i) {
        const int off = lay.soc_offset[i];
        const int dim = lay.soc[i];
        const auto& sc = w.socs[i];
        const auto ub = u.segment(off, dim);
        const double t = sc.v.dot(ub);
        out.segment(off, dim) = 2.0 * t * sc.v;
        out(off) -= ub(0);
        out.segment(off + 1, dim - 1) += ub.tail(dim - 1);
        out.segment(off, dim) *= sc.beta;
    }
    return out;
}

/// W^-1 u = (1/beta) (2 (Jv)(Jv)' - J) u.
VectorXd apply_w_inv(const Layout& lay, const Scaling& w, const VectorXd& u) {
    VectorXd out(lay.total);
    out.head(lay.nonneg) = u.head(lay.nonneg).cwiseQuotient(w.lp_w);
    for (std::size_t i = 0; i < lay.soc.size(); ++i) {
        const int off = lay.soc_offset[i];
        const int dim = lay.soc[i];
        const auto& sc = w.socs[i];
        const auto ub = u.segment(off, dim);
        const double t = sc.v(0) * ub(0) - sc.v.tail(dim - 1).dot(ub.tail(dim - 1));
        out(off) = 2.0 * t * sc.v(0) - ub(0);
        out.segment(off + 1, dim - 1) =
            -2.0 * t * sc.v.tail(dim - 1) + ub.tail(dim - 1);
        out.segment(off, dim) /= sc.beta;
    }
    return out;
}

double smallest_positive_root(double a, double b, double c) {
    // roots of a t^2 + b t + c with c > 0; returns +inf when none positive
    const double tiny = 1e-300;
    if (std::abs(a) < tiny) {
        if (b < -tiny)
            return -c / b;
        return kInf;
    }
    const double disc = b * b - 4.0 * a * c;
    if (a > 0.0 && disc <= 0.0)
        return kInf;
    const double root_disc = std::sqrt(std::max(disc, 0.0));
    const double qq = -0.5 * (b + (b >= 0.0 ? root_disc : -root_disc));
    double best = kInf;
    if (std::abs(a) > tiny) {
        const double r = qq / a;
        if (r > 0.0)
            best = std::min(best, r);
    }
    if (std::abs(qq) > tiny) {
        const double r = c / qq;
        if (r > 0.0)
            best = std::min(best, r);
    }
    return best;
}

/// Largest alpha with point + alpha * dir staying in the cone.
double max_step(const Layout& lay, const VectorXd& point, const VectorXd& dir) {
    double best = kInf;
    for (int i = 0; i < lay.nonneg; ++i)
        if (dir(i) < 0.0)
            best = std::min(best, -point(i) / dir(i));
    for (std::size_t i = 0; i < lay.soc.size(); ++i) {
        const int off = lay.soc_offset[i];
        const int dim = lay.soc[i];
        const auto p1 = point.segment(off + 1, dim - 1);
        const auto d1 = dir.segment(off + 1, dim - 1);
        const double a = dir(off) * dir(off) - d1.squaredNorm();
        const double b = 2.0 * (point(off) * dir(off) - p1.dot(d1));
        const double c = point(off) * point(off) - p1.squaredNorm();
        if (c <= 0.0)
            return 0.0; // point already on/outside the boundary
        best = std::min(best, smallest_positive_root(a, b, c));
    }
    return best;
}

} // namespace

IpmResult DenseInteriorPointSolver::solve(const StandardConeProblem& problem,
                                          const SolveOptions& opts) {
    const int n = static_cast<int>(problem.p.rows());
    const Layout lay = make_layout(problem);
    const int m = lay.total;

    IpmResult res;
    if (problem.g.rows() != m || problem.g.cols() != n || problem.h.size() != m ||
        problem.q.size() != n)
        throw std::invalid_argument("cone qp: inconsistent problem dimensions");

    if (m == 0) {
        Eigen::LDLT<MatrixXd> ldlt(problem.p);
        res.x = ldlt.solve(-problem.q);
        res.pcost = 0.5 * res.x.dot(problem.p * res.x) + problem.q.dot(res.x);
        res.status = ((problem.p * res.x + problem.q).norm() <=
                      1e-8 * std::max(1.0, problem.q.norm()))
                         ? SolveStatus::optimal
                         : SolveStatus::unbounded;
        res.s.resize(0);
        res.z.resize(0);
        return res;
    }

    const double resx0 = std::max(1.0, problem.q.norm());
    const double resz0 = std::max(1.0, problem.h.norm());
    const double ipm_tol = std::min(1e-8, opts.feas_tol);

    auto factor_reduced = [&](const MatrixXd& mat) -> Eigen::LDLT<MatrixXd> {
        Eigen::LDLT<MatrixXd> ldlt(mat);
        if (ldlt.info() == Eigen::Success && ldlt.isPositive())
            return ldlt;
        double reg = 1e-12 * (1.0 + mat.diagonal().cwiseAbs().maxCoeff());
        for (int attempt = 0; attempt < 3; ++attempt) {
            Eigen::LDLT<MatrixXd> retry(mat + reg * MatrixXd::Identity(n, n));
            if (retry.info() == Eigen::Success)
                return retry;
            reg *= 1e3;
        }
        return ldlt;
    };

    // Initial point: solve the W = I KKT system, then shift s and z into
    // the cone interior.
    VectorXd x, s, z;
    {
        MatrixXd m0 = problem.p + problem.g.transpose() * problem.g;
        Eigen::LDLT<MatrixXd> ldlt = factor_reduced(m0);
        if (ldlt.info() != Eigen::Success) {
            res.status = SolveStatus::numerical_failure;
            return res;
        }
        x = ldlt.solve(problem.g.transpose() * problem.h - problem.q);
        z = problem.g * x - problem.h;
        s = -z;
        shift_to_interior(lay, s);
        shift_to_interior(lay, z);
    }

    const VectorXd e = cone_identity(lay);
    Scaling w;
    double step = 1.0;
    res.status = SolveStatus::max_iter;

    // Degenerate programs can stall with a machine-limited dual residual
    // while gap and primal feasibility are already excellent; keep the best
    // such iterate and accept it at exit (the contract is duality gap plus
    // primal feasibility).
    struct Fallback {
        bool valid = false;
        VectorXd x, s, z;
        double dres = kInf;
    } best;
    const double relaxed_dres = 1e-5;

    int iter = 0;
    for (; iter < opts.max_iter; ++iter) {
        const VectorXd rx = problem.p * x + problem.q + problem.g.transpose() * z;
        const VectorXd rz = problem.g * x + s - problem.h;
        const double gap = s.dot(z);
        const double pcost = 0.5 * x.dot(problem.p * x) + problem.q.dot(x);
        const double dcost = pcost + z.dot(rz) - gap;
        double relgap = kInf;
        if (pcost < 0.0)
            relgap = gap / -pcost;
        else if (dcost > 0.0)
            relgap = gap / dcost;
        const double pres = rz.norm() / resz0;
        const double dres = rx.norm() / resx0;

        res.pcost = pcost;
        res.dcost = dcost;
        res.gap = gap;
        res.relgap = relgap;
        res.pres = pres;
        res.dres = dres;

        const bool primal_done = pres <= ipm_tol &&
                                 (gap <= opts.abs_gap_tol || relgap <= opts.rel_gap_tol) &&
                                 rz.lpNorm<Eigen::Infinity>() <= opts.feas_tol;
        if (primal_done && dres <= ipm_tol) {
            res.status = SolveStatus::optimal;
            break;
        }
        if (primal_done && dres <= relaxed_dres && dres < best.dres) {
            best.valid = true;
            best.x = x;
            best.s = s;
            best.z = z;
            best.dres = dres;
        }

        if (!compute_scaling(lay, s, z, w)) {
            res.status = SolveStatus::numerical_failure;
            break;
        }
        const VectorXd lambda = apply_w(lay, w, z);
        const double mu = gap / lay.degree;

        MatrixXd gw(m, n);
        for (int col = 0; col < n; ++col)
            gw.col(col) = apply_w_inv(lay, w, problem.g.col(col));
        MatrixXd reduced = problem.p + gw.transpose() * gw;
        Eigen::LDLT<MatrixXd> ldlt = factor_reduced(reduced);
        if (ldlt.info() != Eigen::Success) {
            res.status = SolveStatus::numerical_failure;
            break;
        }

        const VectorXd rz_scaled = apply_w_inv(lay, w, rz);

        auto newton = [&](const VectorXd& d, VectorXd& ux, VectorXd& us, VectorXd& uz,
                          VectorXd& ds_sc, VectorXd& dz_sc) {
            const VectorXd rhs = -rx - gw.transpose() * (d + rz_scaled);
            ux = ldlt.solve(rhs);
            ux += ldlt.solve(rhs - reduced * ux); // one refinement pass
            us = -rz - problem.g * ux;
            ds_sc = apply_w_inv(lay, w, us);
            dz_sc = d - ds_sc;
            uz = apply_w_inv(lay, w, dz_sc);
        };

        // Affine (predictor) direction: bs = -lambda o lambda.
        VectorXd ux, us, uz, ds_sc, dz_sc;
        newton(-lambda, ux, us, uz, ds_sc, dz_sc);

        const double alpha_aff =
            std::min(max_step(lay, lambda, ds_sc), max_step(lay, lambda, dz_sc));
        const double step_aff = std::min(1.0, alpha_aff);
        const double dsdz = ds_sc.dot(dz_sc);
        double sigma = 0.0;
        if (gap > 0.0) {
            sigma = std::min(1.0, std::max(0.0, 1.0 - step_aff +
                                                    dsdz / gap * step_aff * step_aff));
            sigma = sigma * sigma * sigma;
        }

        // Combined direction with Mehrotra correction.
        const VectorXd correction = jordan_product(lay, ds_sc, dz_sc);
        const VectorXd bs = -jordan_product(lay, lambda, lambda) - correction + sigma * mu * e;
        const VectorXd d = jordan_divide(lay, lambda, bs);
        newton(d, ux, us, uz, ds_sc, dz_sc);

        const double alpha =
            std::min(max_step(lay, lambda, ds_sc), max_step(lay, lambda, dz_sc));
        step = std::min(1.0, 0.99 * alpha);
        if (!(step > 1e-12)) {
            res.status = SolveStatus::numerical_failure;
            break;
        }

        x += step * ux;
        s += step * us;
        z += step * uz;
    }

    res.x = x;
    res.s = s;
    res.z = z;
    res.iterations = iter;

    if (res.status != SolveStatus::optimal && best.valid) {
        res.x = best.x;
        res.s = best.s;
        res.z = best.z;
        res.status = SolveStatus::optimal;
        return res;
    }

    if (res.status != SolveStatus::optimal) {
        // Best-effort classification without a homogeneous embedding: a
        // vanishing gap with a stubborn primal residual indicates primal
        // infeasibility; a diverging primal cost indicates unboundedness.
        if (res.pres > 1e3 * ipm_tol && res.gap <= 1e-6 * std::max(1.0, std::abs(res.pcost)) &&
            res.dcost > 1e6 * std::max(1.0, std::abs(res.pcost)))
            res.status = SolveStatus::infeasible;
        else if (res.pcost < -1e12)
            res.status = SolveStatus::unbounded;
    }
    return res;
}

} // namespace satrm::conic
