#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "qpd/channel_algebra.hpp"
#include "qpd/tolerances.hpp"

namespace qpd {

enum class SolveStatus { optimal, infeasible, max_iter };

std::string to_string(SolveStatus s);

struct SolverSolution {
    SolveStatus status = SolveStatus::max_iter;
    Eigen::VectorXd x;          // primal scalar variables
    double objective = 0.0;     // c'x
    double eq_residual = 0.0;   // max |A x - b|
    double cone_residual = 0.0; // most negative slack / eigenvalue across blocks
    double rel_gap = 0.0;
    int iterations = 0;

    bool ok() const { return status == SolveStatus::optimal; }
};

struct SolverOptions {
    double stop_tol = Tolerances::defaults().solver_stop;
    int max_iterations = 200;
    bool verbose = false;
};

// Real symmetric embedding [[Re, -Im], [Im, Re]] of a Hermitian matrix. The
// input matrix is PSD iff the embedding is PSD; eigenvalues double in
// multiplicity.
RealMatrix hermitian_embed(const ComplexMatrix& h);

// Canonical real scalarization of a Hermitian s x s matrix: the s diagonal
// entries, then (re, im) pairs of the strict upper triangle in row-major
// order. Matches the SemidefiniteProgram entry layout.
struct HermitianIndexer {
    int side = 0;

    explicit HermitianIndexer(int s) : side(s) {}
    int size() const { return side * side; }
    int diag(int i) const { return i; }
    int upper(int i, int j, bool imag) const {
        const int pair_rank = i * side - i * (i + 1) / 2 + (j - i - 1);
        return side + 2 * pair_rank + (imag ? 1 : 0);
    }
    Eigen::VectorXd components(const ComplexMatrix& h) const;
    ComplexMatrix matrix(const Eigen::VectorXd& comps) const;
    ComplexMatrix elementary(int idx) const;
};

// Conic program over free scalar variables x:
//
//   minimize    c'x
//   subject to  A x = b
//               F0_k + sum_j x_j Fj_k  PSD          (dense symmetric blocks)
//               d0_r + sum_j x_j dj_r  >= 0         (scalar inequality rows)
//
// Complex Hermitian data enters blocks through hermitian_embed. Solved by a
// Mehrotra predictor-corrector primal-dual interior-point method; a solve is
// single-threaded and deterministic, independent instances may be solved
// concurrently.
class ConicProgram {
public:
    explicit ConicProgram(int n_vars);

    int n_vars() const { return static_cast<int>(cost_.size()); }
    void set_cost(int var, double coeff);

    int add_dense_block(int side);
    void add_const(int block, const RealMatrix& f0);
    void add_term(int block, int var, const RealMatrix& fj);
    // accumulate embed(h) into the block's constant / variable term
    void add_const_hermitian(int block, const ComplexMatrix& h);
    void add_term_hermitian(int block, int var, const ComplexMatrix& h);

    // const_term + sum coeff_j x_j >= 0
    void add_inequality(const std::vector<std::pair<int, double>>& terms, double const_term);
    // sum coeff_j x_j = rhs
    void add_equality(const std::vector<std::pair<int, double>>& terms, double rhs);

    SolverSolution solve(const SolverOptions& opts = {}) const;

    // plain-text dump for external cross-checking
    void dump(std::ostream& os) const;

private:
    struct Triplet {
        int r, c;
        double v;
    };
    struct DenseBlock {
        int side = 0;
        RealMatrix f0;
        std::vector<int> vars;                     // variables touching the block
        std::vector<std::vector<Triplet>> terms;   // parallel with vars
        std::vector<int> var_slot;                 // var -> slot + 1, 0 = absent
    };
    struct DiagRow {
        double f0 = 0.0;
        std::vector<std::pair<int, double>> terms;
    };

    std::vector<Triplet>& term_slot(int block, int var);

    Eigen::VectorXd cost_;
    std::vector<DenseBlock> blocks_;
    std::vector<DiagRow> diag_rows_;
    std::vector<std::vector<std::pair<int, double>>> eq_rows_;
    std::vector<double> eq_rhs_;

    friend class IpmWorkspace;
};

// -----------------------------------------------------------------------
// Spec-facing problem descriptions
// -----------------------------------------------------------------------

// min cost'x  s.t.  a_eq x = b_eq, a_in x <= b_in, lower <= x <= upper.
// Infinite bounds are encoded as +-inf.
struct LinearProgram {
    Eigen::VectorXd cost;
    RealMatrix a_eq;
    Eigen::VectorXd b_eq;
    RealMatrix a_in;
    Eigen::VectorXd b_in;
    Eigen::VectorXd lower;  // empty = unbounded
    Eigen::VectorXd upper;  // empty = unbounded

    void validate() const;
};

SolverSolution solve_lp(const LinearProgram& p, const SolverOptions& opts = {});

// Block-structured SDP: Hermitian PSD matrix variables plus nonnegative and
// free scalars. The scalarization order is: for each PSD block, the diagonal
// entries then (re, im) pairs of the strict upper triangle (row-major); then
// nonnegative scalars; then free scalars. Linear constraints and the
// objective address this scalar vector.
struct SemidefiniteProgram {
    std::vector<int> psd_sides;  // complex Hermitian PSD matrix variables
    int n_nonneg = 0;
    int n_free = 0;
    Eigen::VectorXd cost;
    RealMatrix a_eq;
    Eigen::VectorXd b_eq;
    RealMatrix a_in;  // a_in x <= b_in
    Eigen::VectorXd b_in;

    int n_scalars() const;
    // index of entry (i, j) of PSD block b; imag selects the imaginary part
    // (i < j required for imag)
    int entry_index(int block, int i, int j, bool imag = false) const;
    int nonneg_index(int k) const;
    int free_index(int k) const;

    // reconstruct PSD block b from a solution vector
    ComplexMatrix block_value(int block, const Eigen::VectorXd& x) const;

    void validate() const;
};

SolverSolution solve_sdp(const SemidefiniteProgram& p, const SolverOptions& opts = {});

}  // namespace qpd
