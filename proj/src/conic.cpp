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

#include "satrm/conic.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>

namespace satrm::conic {

MatrixXd embed_complex_quadratic(const Eigen::MatrixXcd& q, double hermitian_tol) {
    const Eigen::Index n = q.rows();
    if (q.cols() != n)
        throw std::invalid_argument("embed_complex_quadratic: matrix must be square");
    const double scale = 1.0 + q.cwiseAbs().maxCoeff();
    if ((q - q.adjoint()).cwiseAbs().maxCoeff() > hermitian_tol * scale)
        throw std::invalid_argument("embed_complex_quadratic: matrix is not Hermitian");

    const MatrixXd re = q.real();
    const MatrixXd im = q.imag();
    MatrixXd out(2 * n, 2 * n);
    out.topLeftCorner(n, n) = re;
    out.topRightCorner(n, n) = -im;
    out.bottomLeftCorner(n, n) = im;
    out.bottomRightCorner(n, n) = re;
    return 0.5 * (out + out.transpose().eval());
}

VectorXd embed_complex_linear(const Eigen::VectorXcd& w) {
    VectorXd out(2 * w.size());
    out.head(w.size()) = w.real();
    out.tail(w.size()) = w.imag();
    return out;
}

PsdFactor::PsdFactor(const MatrixXd& q, double clip_rel, double rank_rel) {
    if (q.rows() != q.cols())
        throw std::invalid_argument("PsdFactor: matrix must be square");
    q_ = 0.5 * (q + q.transpose().eval());
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(q_);
    if (eig.info() != Eigen::Success)
        throw std::runtime_error("PsdFactor: eigendecomposition failed");

    const VectorXd values = eig.eigenvalues();
    const double trace = std::max(q_.trace(), 0.0);
    const double clip_tol = clip_rel * trace + 1e-300;
    if (values.minCoeff() < -clip_tol)
        throw std::invalid_argument("PsdFactor: matrix is not PSD within tolerance");

    const double rank_tol = rank_rel * trace;
    int rank = 0;
    for (Eigen::Index i = 0; i < values.size(); ++i)
        if (values(i) > rank_tol)
            ++rank;
    l_.resize(q.rows(), rank);
    int col = 0;
    for (Eigen::Index i = 0; i < values.size(); ++i) {
        if (values(i) > rank_tol)
            l_.col(col++) = eig.eigenvectors().col(i) * std::sqrt(values(i));
    }
}

PsdFactor PsdFactor::diagonal(const VectorXd& diag) {
    if (diag.minCoeff() < -1e-15 * (1.0 + diag.cwiseAbs().maxCoeff()))
        throw std::invalid_argument("PsdFactor::diagonal: negative diagonal entry");
    PsdFactor out;
    out.q_ = MatrixXd(diag.cwiseMax(0.0).asDiagonal());
    int rank = 0;
    for (Eigen::Index i = 0; i < diag.size(); ++i)
        if (diag(i) > 0.0)
            ++rank;
    out.l_ = MatrixXd::Zero(diag.size(), rank);
    int col = 0;
    for (Eigen::Index i = 0; i < diag.size(); ++i)
        if (diag(i) > 0.0)
            out.l_(i, col++) = std::sqrt(diag(i));
    return out;
}

PsdFactor PsdFactor::block_diagonal(
    int dim, const std::vector<std::pair<int, const PsdFactor*>>& blocks) {
    PsdFactor out;
    out.q_ = MatrixXd::Zero(dim, dim);
    int total_rank = 0;
    for (const auto& [offset, block] : blocks) {
        if (offset < 0 || offset + block->dim() > dim)
            throw std::invalid_argument("PsdFactor::block_diagonal: block out of range");
        total_rank += block->rank();
    }
    out.l_ = MatrixXd::Zero(dim, total_rank);
    int col = 0;
    for (const auto& [offset, block] : blocks) {
        out.q_.block(offset, offset, block->dim(), block->dim()) = block->matrix();
        out.l_.block(offset, col, block->dim(), block->rank()) = block->factor();
        col += block->rank();
    }
    return out;
}

PsdFactor PsdFactor::scaled(double k) const {
    if (k < 0.0)
        throw std::invalid_argument("PsdFactor::scaled: factor must be non-negative");
    PsdFactor out;
    out.q_ = k * q_;
    out.l_ = std::sqrt(k) * l_;
    return out;
}

SocConstraint quad_le_affine_to_soc(const PsdFactor& factor, const VectorXd& a, double b) {
    if (a.size() != factor.dim())
        throw std::invalid_argument("quad_le_affine_to_soc: affine width mismatch");
    const int n = factor.dim();
    const int r = factor.rank();
    SocConstraint soc;
    soc.f.resize(r + 1, n);
    soc.f.topRows(r) = 2.0 * factor.factor().transpose();
    soc.f.row(r) = a.transpose();
    soc.g = VectorXd::Zero(r + 1);
    soc.g(r) = b - 1.0;
    soc.c = a;
    soc.d = b + 1.0;
    return soc;
}

SocConstraint quad_le_affine_to_soc(const MatrixXd& q_psd, const VectorXd& a, double b) {
    return quad_le_affine_to_soc(PsdFactor(q_psd), a, b);
}

const char* to_string(SolveStatus status) {
    switch (status) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::infeasible: return "infeasible";
    case SolveStatus::unbounded: return "unbounded";
    case SolveStatus::max_iter: return "max_iter";
    case SolveStatus::numerical_failure: return "numerical_failure";
    }
    return "unknown";
}

int ConicProgram::add_variables(const std::string& name, int count) {
    if (sealed_)
        throw std::logic_error("ConicProgram: declare all variables before objective/constraints");
    if (count < 1)
        throw std::invalid_argument("ConicProgram: variable block must be non-empty");
    for (const auto& b : blocks_)
        if (b.name == name)
            throw std::invalid_argument("ConicProgram: duplicate variable block " + name);
    const int offset = num_vars_;
    blocks_.push_back({name, offset, count});
    num_vars_ += count;
    return offset;
}

int ConicProgram::block_offset(const std::string& name) const {
    for (const auto& b : blocks_)
        if (b.name == name)
            return b.offset;
    throw std::invalid_argument("ConicProgram: unknown variable block " + name);
}

int ConicProgram::block_size(const std::string& name) const {
    for (const auto& b : blocks_)
        if (b.name == name)
            return b.size;
    throw std::invalid_argument("ConicProgram: unknown variable block " + name);
}

VectorXd ConicProgram::extract(const VectorXd& x, const std::string& name) const {
    if (x.size() != num_vars_)
        throw std::invalid_argument("ConicProgram::extract: point has wrong dimension");
    return x.segment(block_offset(name), block_size(name));
}

void ConicProgram::ensure_sealed_variables() {
    if (!sealed_) {
        obj_q_ = MatrixXd::Zero(num_vars_, num_vars_);
        obj_lin_ = VectorXd::Zero(num_vars_);
        sealed_ = true;
    }
}

void ConicProgram::check_width(const VectorXd& a, const char* what) const {
    if (a.size() != num_vars_)
        throw std::invalid_argument(std::string("ConicProgram: ") + what +
                                    " has wrong width for declared variables");
}

void ConicProgram::add_quadratic_cost(const std::vector<int>& indices, const MatrixXd& q) {
    ensure_sealed_variables();
    const int m = static_cast<int>(indices.size());
    if (q.rows() != m || q.cols() != m)
        throw std::invalid_argument("ConicProgram: quadratic cost shape mismatch");
    for (int idx : indices)
        if (idx < 0 || idx >= num_vars_)
            throw std::invalid_argument("ConicProgram: quadratic cost index out of range");
    const MatrixXd sym = 0.5 * (q + q.transpose().eval());
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(sym, Eigen::EigenvaluesOnly);
    if (eig.eigenvalues().minCoeff() < -1e-10 * (1.0 + sym.trace()))
        throw std::invalid_argument("ConicProgram: objective quadratic must be PSD");
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
            obj_q_(indices[static_cast<std::size_t>(i)], indices[static_cast<std::size_t>(j)]) +=
                sym(i, j);
}

void ConicProgram::add_quadratic_cost(int offset, const MatrixXd& q) {
    std::vector<int> indices(static_cast<std::size_t>(q.rows()));
    std::iota(indices.begin(), indices.end(), offset);
    add_quadratic_cost(indices, q);
}

void ConicProgram::add_linear_cost(int offset, const VectorXd& coeffs) {
    ensure_sealed_variables();
    if (offset < 0 || offset + coeffs.size() > num_vars_)
        throw std::invalid_argument("ConicProgram: linear cost out of range");
    obj_lin_.segment(offset, coeffs.size()) += coeffs;
}

void ConicProgram::add_constant_cost(double r) {
    ensure_sealed_variables();
    obj_const_ += r;
}

void ConicProgram::add_linear_constraint(VectorXd a, double b) {
    ensure_sealed_variables();
    check_width(a, "linear constraint");
    linear_.push_back({std::move(a), b});
}

void ConicProgram::add_soc_constraint(SocConstraint constraint) {
    ensure_sealed_variables();
    check_width(constraint.c, "SOC constraint rhs");
    if (constraint.f.cols() != num_vars_)
        throw std::invalid_argument("ConicProgram: SOC constraint F has wrong width");
    if (constraint.f.rows() != constraint.g.size())
        throw std::invalid_argument("ConicProgram: SOC constraint F/g mismatch");
    socs_.push_back(std::move(constraint));
}

void ConicProgram::add_quad_le_affine(const MatrixXd& q, VectorXd a, double b) {
    add_quad_le_affine(PsdFactor(q), std::move(a), b);
}

void ConicProgram::add_quad_le_affine(PsdFactor factor, VectorXd a, double b) {
    ensure_sealed_variables();
    check_width(a, "quadratic constraint rhs");
    if (factor.dim() != num_vars_)
        throw std::invalid_argument("ConicProgram: quadratic constraint Q has wrong dimension");
    quads_.push_back({std::move(factor), std::move(a), b});
}

double ConicProgram::objective_value(const VectorXd& x) const {
    if (!sealed_)
        return obj_const_;
    return x.dot(obj_q_ * x) + obj_lin_.dot(x) + obj_const_;
}

double ConicProgram::max_violation(const VectorXd& x) const {
    double worst = -std::numeric_limits<double>::infinity();
    for (const auto& con : linear_)
        worst = std::max(worst, con.violation(x));
    for (const auto& con : socs_)
        worst = std::max(worst, con.violation(x));
    for (const auto& con : quads_)
        worst = std::max(worst, con.violation(x));
    return worst;
}

void ConicProgram::dump(std::ostream& os) const {
    os << "variables " << num_vars_ << "\n";
    for (const auto& b : blocks_)
        os << "block " << b.name << " offset " << b.offset << " size " << b.size << "\n";
    os << "objective quad_nnz " << (obj_q_.size() > 0 ? (obj_q_.array() != 0.0).count() : 0)
       << " linear_nnz " << (obj_lin_.size() > 0 ? (obj_lin_.array() != 0.0).count() : 0)
       << " constant " << obj_const_ << "\n";
    for (const auto& con : linear_) {
        os << "linear";
        for (Eigen::Index i = 0; i < con.a.size(); ++i)
            if (con.a(i) != 0.0)
                os << " " << i << ":" << con.a(i);
        os << " <= " << con.b << "\n";
    }
    for (const auto& con : socs_)
        os << "soc rows " << con.f.rows() << " d " << con.d << "\n";
    for (const auto& con : quads_)
        os << "quad rank " << con.q.rank() << " b " << con.b << "\n";
}

StandardConeProblem to_standard_form(const ConicProgram& program) {
    const int n = program.num_variables();
    StandardConeProblem std_form;
    std_form.p = 2.0 * program.objective_quadratic();
    std_form.q = program.objective_linear();
    if (std_form.p.size() == 0) {
        std_form.p = MatrixXd::Zero(n, n);
        std_form.q = VectorXd::Zero(n);
    }

    std::vector<SocConstraint> cones;
    cones.reserve(program.soc_constraints().size() + program.quad_constraints().size());
    for (const auto& soc : program.soc_constraints())
        cones.push_back(soc);
    for (const auto& quad : program.quad_constraints())
        cones.push_back(quad_le_affine_to_soc(quad.q, quad.a, quad.b));

    int rows = static_cast<int>(program.linear_constraints().size());
    std_form.nonneg = rows;
    for (const auto& soc : cones)
        rows += static_cast<int>(soc.f.rows()) + 1;

    std_form.g = MatrixXd::Zero(rows, n);
    std_form.h = VectorXd::Zero(rows);

    int row = 0;
    for (const auto& con : program.linear_constraints()) {
        std_form.g.row(row) = con.a.transpose();
        std_form.h(row) = con.b;
        ++row;
    }
    for (const auto& soc : cones) {
        const int m = static_cast<int>(soc.f.rows());
        std_form.g.row(row) = -soc.c.transpose();
        std_form.h(row) = soc.d;
        std_form.g.middleRows(row + 1, m) = -soc.f;
        std_form.h.segment(row + 1, m) = soc.g;
        std_form.soc.push_back(m + 1);
        row += m + 1;
    }
    return std_form;
}

Solution solve(const ConicProgram& program, SolverBackend& backend, const SolveOptions& opts) {
    const StandardConeProblem std_form = to_standard_form(program);
    IpmResult result = backend.solve(std_form, opts);

    Solution solution;
    solution.x = result.x;
    solution.iterations = result.iterations;
    solution.gap = result.gap;
    solution.primal_residual = result.pres;
    solution.dual_residual = result.dres;
    solution.status = result.status;
    if (result.x.size() == program.num_variables()) {
        solution.objective = program.objective_value(result.x);
        // Optimality is only reported when the returned point re-evaluates
        // as feasible against the original constraints.
        if (result.status == SolveStatus::optimal &&
            program.max_violation(result.x) > opts.feas_tol)
            solution.status = SolveStatus::numerical_failure;
    }
    return solution;
}

Solution solve(const ConicProgram& program, const SolveOptions& opts) {
    DenseInteriorPointSolver backend;
    return solve(program, backend, opts);
}

} // namespace satrm::conic
