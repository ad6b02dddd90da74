#pragma once

#include <cstdint>
#include <vector>

#include "qpd/noise.hpp"
#include "qpd/parallel.hpp"

namespace qpd {

// Stinespring dilation of a CP trace-preserving map: an isometry V with
// E(rho) = tr_R[V rho V^dag], the ancilla count, and a unitary completion
// whose ancilla-|0> input columns equal V. Ancillas occupy the high qubits.
struct DilationResult {
    ComplexMatrix isometry;  // 2^(n+a) x 2^n
    int n_ancillas = 0;
    ComplexMatrix unitary;   // 2^(n+a) square
};

DilationResult stinespring_isometry(const ChoiMatrix& choi, int rank_bound,
                                    const Tolerances& tol = Tolerances::defaults());

// Hardware-efficient Ry-Rz form on n_qubits with linear connectivity: an
// initial rotation layer, then depth times (CNOT ladder + rotation layer).
// Parameter count is 2 n_qubits (depth + 1); CNOT count (n_qubits - 1) depth.
struct VariationalForm {
    int n_qubits = 3;
    int depth = 6;

    int parameter_count() const { return 2 * n_qubits * (depth + 1); }
    Circuit circuit(const Eigen::VectorXd& theta, int n_data) const;
    ComplexMatrix unitary(const Eigen::VectorXd& theta) const;
    // the ancilla-|0> input column block of unitary(theta)
    ComplexMatrix isometry_block(const Eigen::VectorXd& theta, int n_data) const;
};

struct FitOptions {
    int restarts = 5;
    std::uint64_t seed = 1;
    int max_iterations = 500;
    double gradient_tol = 1e-9;
    bool optimize_phase = false;  // minimize over a global phase as well
    Parallelism par = Parallelism::serial();
};

struct FitResult {
    Eigen::VectorXd theta;
    double objective = 0.0;                 // || V - V_var(theta) ||_F
    std::vector<double> restart_objectives; // final value per restart
    int best_restart = -1;
};

// Frobenius-norm fit of the ansatz's isometry block to the target isometry;
// quasi-Newton descent from uniformly random starts, best restart kept.
FitResult variational_fit(const ComplexMatrix& isometry, const VariationalForm& form,
                          const FitOptions& opts = {});

// objective and analytic gradient at theta (exposed for the
// finite-difference check)
double fit_objective(const ComplexMatrix& isometry, const VariationalForm& form,
                     const Eigen::VectorXd& theta, bool optimize_phase = false);
Eigen::VectorXd fit_gradient(const ComplexMatrix& isometry, const VariationalForm& form,
                             const Eigen::VectorXd& theta, bool optimize_phase = false);

struct DepthSweepRow {
    int depth = 0;
    double fit_objective = 0.0;
    double diamond_error = 0.0;  // realized channel vs the isometry's channel
    std::string error;           // nonempty if this row failed
};

// Per depth: fit, realize the fitted circuit through the oracle, trace out
// the ancilla and measure the diamond distance to the target channel.
std::vector<DepthSweepRow> sweep_depth(const ComplexMatrix& isometry, int n_data,
                                       const std::vector<int>& depths, const NoiseOracle& oracle,
                                       const FitOptions& opts = {});

}  // namespace qpd
