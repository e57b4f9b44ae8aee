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

#ifndef SATRM_CONIC_HPP
#define SATRM_CONIC_HPP

#include <Eigen/Dense>
#include <iosfwd>
#include <string>
#include <vector>

namespace satrm::conic {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Real embedding of a Hermitian quadratic form: for z = x + j*y,
/// z^H Q z == [x; y]^T embed(Q) [x; y]. Preserves PSD-ness; eigenvalues of
/// the embedding are those of Q with doubled multiplicity.
MatrixXd embed_complex_quadratic(const Eigen::MatrixXcd& q_hermitian,
                                 double hermitian_tol = 1e-9);

/// Real embedding of a linear form: Re(w^H z) == embed_complex_linear(w) . [x; y].
VectorXd embed_complex_linear(const Eigen::VectorXcd& w);

/// Eigendecomposition-based factor Q = L L^T of a PSD matrix. Eigenvalues
/// in [-clip_rel*trace, 0) are clipped to zero; anything more negative is
/// rejected. Columns below rank_rel*trace are truncated.
class PsdFactor {
  public:
    PsdFactor() = default;
    explicit PsdFactor(const MatrixXd& q, double clip_rel = 1e-10, double rank_rel = 1e-12);

    /// Factor for a diagonal PSD matrix (no eigendecomposition needed).
    static PsdFactor diagonal(const VectorXd& diag);

    /// Assembles a block-diagonal factor from already-checked blocks placed
    /// at the given variable offsets inside a dim-dimensional space.
    static PsdFactor block_diagonal(int dim,
                                    const std::vector<std::pair<int, const PsdFactor*>>& blocks);

    /// Factor of k * Q for k >= 0 (constraint normalization).
    PsdFactor scaled(double k) const;

    const MatrixXd& matrix() const { return q_; }
    const MatrixXd& factor() const { return l_; } // n x rank
    int dim() const { return static_cast<int>(q_.rows()); }
    int rank() const { return static_cast<int>(l_.cols()); }

  private:
    MatrixXd q_;
    MatrixXd l_;
};

/// a . x <= b
struct LinearConstraint {
    VectorXd a;
    double b = 0.0;
    double violation(const VectorXd& x) const { return a.dot(x) - b; }
};

/// ||F x + g||_2 <= c . x + d
struct SocConstraint {
    MatrixXd f;
    VectorXd g;
    VectorXd c;
    double d = 0.0;
    double violation(const VectorXd& x) const {
        return (f * x + g).norm() - (c.dot(x) + d);
    }
};

/// x^T Q x <= a . x + b with Q PSD; lowered to a second-order cone at
/// solve time via its stored factor.
struct QuadConstraint {
    PsdFactor q;
    VectorXd a;
    double b = 0.0;
    double violation(const VectorXd& x) const {
        return x.dot(q.matrix() * x) - (a.dot(x) + b);
    }
};

/// Standard rotated-cone reduction: with Q = L L^T,
///   x^T Q x <= a.x + b  <=>  ||[2 L^T x; a.x + b - 1]|| <= a.x + b + 1.
SocConstraint quad_le_affine_to_soc(const PsdFactor& factor, const VectorXd& a, double b);
SocConstraint quad_le_affine_to_soc(const MatrixXd& q_psd, const VectorXd& a, double b);

enum class SolveStatus { optimal, infeasible, unbounded, max_iter, numerical_failure };

const char* to_string(SolveStatus status);

struct SolveOptions {
    double feas_tol = 1e-7;     // absolute feasibility of the returned point
    double rel_gap_tol = 1e-8;  // relative duality gap
    double abs_gap_tol = 1e-10;
    int max_iter = 100;
};

struct Solution {
    SolveStatus status = SolveStatus::numerical_failure;
    VectorXd x;
    double objective = 0.0;
    int iterations = 0;
    double gap = 0.0;
    double primal_residual = 0.0;
    double dual_residual = 0.0;
};

/// Convex program over named real variable blocks with a PSD-quadratic
/// objective x^T Q x + q.x + r and linear / second-order-cone /
/// quadratic-below-affine constraints. Declare all variables before adding
/// objective terms or constraints.
class ConicProgram {
  public:
    /// Returns the offset of the new block inside the stacked variable vector.
    int add_variables(const std::string& name, int count);

    int num_variables() const { return num_vars_; }
    int block_offset(const std::string& name) const;
    int block_size(const std::string& name) const;
    VectorXd extract(const VectorXd& x, const std::string& name) const;

    void add_quadratic_cost(const std::vector<int>& indices, const MatrixXd& q);
    void add_quadratic_cost(int offset, const MatrixXd& q);
    void add_linear_cost(int offset, const VectorXd& coeffs);
    void add_constant_cost(double r);

    void add_linear_constraint(VectorXd a, double b);
    void add_soc_constraint(SocConstraint constraint);
    void add_quad_le_affine(const MatrixXd& q, VectorXd a, double b);
    void add_quad_le_affine(PsdFactor factor, VectorXd a, double b);

    double objective_value(const VectorXd& x) const;
    /// Largest constraint violation at x (negative means strictly feasible).
    double max_violation(const VectorXd& x) const;

    const MatrixXd& objective_quadratic() const { return obj_q_; }
    const VectorXd& objective_linear() const { return obj_lin_; }
    double objective_constant() const { return obj_const_; }
    const std::vector<LinearConstraint>& linear_constraints() const { return linear_; }
    const std::vector<SocConstraint>& soc_constraints() const { return socs_; }
    const std::vector<QuadConstraint>& quad_constraints() const { return quads_; }

    /// Text dump for external-solver cross-checks; not bit-critical.
    /// Format: one "variables <n>" line, one "block <name> offset <o> size
    /// <s>" line per block, an "objective ..." summary line, then one line
    /// per constraint ("linear <idx>:<coef> ... <= <b>", "soc rows <m> d
    /// <d>", "quad rank <r> b <b>").
    void dump(std::ostream& os) const;

  private:
    void ensure_sealed_variables();
    void check_width(const VectorXd& a, const char* what) const;

    struct Block {
        std::string name;
        int offset;
        int size;
    };
    std::vector<Block> blocks_;
    int num_vars_ = 0;
    bool sealed_ = false;

    MatrixXd obj_q_;
    VectorXd obj_lin_;
    double obj_const_ = 0.0;
    std::vector<LinearConstraint> linear_;
    std::vector<SocConstraint> socs_;
    std::vector<QuadConstraint> quads_;
};

/// Cone QP in standard form:
///   minimize 0.5 x^T P x + q^T x   s.t.  G x + s = h,  s in K,
/// where K = R_+^nonneg x SOC(soc[0]) x SOC(soc[1]) x ...
struct StandardConeProblem {
    MatrixXd p;
    VectorXd q;
    MatrixXd g;
    VectorXd h;
    int nonneg = 0;
    std::vector<int> soc;
};

struct IpmResult {
    SolveStatus status = SolveStatus::numerical_failure;
    VectorXd x, s, z;
    double pcost = 0.0, dcost = 0.0, gap = 0.0, relgap = 0.0;
    double pres = 0.0, dres = 0.0;
    int iterations = 0;
};

/// Backend contract: deterministic for fixed inputs and options; a
/// non-optimal outcome is reported as a status, never thrown.
class SolverBackend {
  public:
    virtual ~SolverBackend() = default;
    virtual std::string name() const = 0;
    virtual IpmResult solve(const StandardConeProblem& problem, const SolveOptions& opts) = 0;
};

/// Reference dense primal-dual interior-point method (Nesterov-Todd
/// scaling, Mehrotra correction). Sized for desk-scale problems; no
/// external dependencies.
class DenseInteriorPointSolver final : public SolverBackend {
  public:
    std::string name() const override { return "dense-ipm"; }
    IpmResult solve(const StandardConeProblem& problem, const SolveOptions& opts) override;
};

/// Lowers the program (quadratic constraints become SOCs) to standard form.
StandardConeProblem to_standard_form(const ConicProgram& program);

Solution solve(const ConicProgram& program, const SolveOptions& opts = {});
Solution solve(const ConicProgram& program, SolverBackend& backend, const SolveOptions& opts = {});

} // namespace satrm::conic

#endif
