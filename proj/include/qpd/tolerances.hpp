#pragma once

namespace qpd {

// All numerical tolerances used across the library, with their defaults.
// Modules take a Tolerances value (or use defaults()) instead of hard-coding
// magic constants.
struct Tolerances {
    double hermitian = 1e-10;       // Hermiticity / unitarity predicates
    double psd = 1e-9;              // min-eigenvalue slack for PSD checks
    double trace = 1e-9;            // trace-one / trace-preservation checks
    double rank_cutoff = 1e-8;      // eigenvalue cutoff for channel rank
    double solver_stop = 1e-8;      // IPM stopping criterion
    double solver_gap = 1e-7;       // accepted relative duality gap
    double exact_residual = 1e-7;   // residual below which a QPD counts as exact
    double kraus_roundtrip = 1e-9;  // Choi <-> Kraus reconstruction
    double cp_eig = 1e-7;           // CP slack for decomposition outputs
    double tp_marginal = 1e-6;      // TP marginal deviation for decomposition outputs

    static const Tolerances& defaults() {
        static const Tolerances t{};
        return t;
    }
};

}  // namespace qpd
