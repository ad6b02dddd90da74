#pragma once

#include <cstdint>
#include <vector>

#include "qpd/parallel.hpp"
#include "qpd/qpd_core.hpp"

namespace qpd {

struct ObservableSpec {
    ComplexMatrix matrix;
    double spectral_bound = 0.0;  // ||O||_inf

    explicit ObservableSpec(ComplexMatrix m, const Tolerances& tol = Tolerances::defaults());
};

// one error-mitigated gate: a quasiprobability decomposition whose item
// channels act on the listed (little-endian) support qubits
struct SampledGate {
    std::vector<int> support;
    QuasiprobabilityDecomposition qpd;
};

struct GateQpdAssignment {
    int n_qubits = 1;
    std::vector<SampledGate> gates;

    double gamma_total() const;  // product of per-gate gamma factors
};

// Per-shot output convention:
//  * expectation: tr[O rho_final], the low-variance choice used for
//    unbiasedness checks;
//  * bernoulli: one sampled eigenvalue of O, faithful to hardware statistics
//    and the basis of the gamma^2 shot-overhead scaling.
enum class OutputMode { expectation, bernoulli };

struct EstimateReport {
    std::int64_t shots = 0;
    double mean = 0.0;
    double stderr_ = 0.0;
    double abort_fraction = 0.0;
    double gamma_total = 1.0;
    std::uint64_t seed = 0;
    OutputMode mode = OutputMode::expectation;
};

// Quasiprobability Monte Carlo estimator of tr[O F(rho0)] for the map the
// assignment decomposes. Per shot and per gate an item is drawn with
// probability |a_i| / gamma_k and applied by exact density-matrix evolution;
// postselection failures abort the shot with output 0; surviving shots
// output sgn * gamma_total times the observable value. Shots are processed
// in fixed-size batches so results are bitwise independent of the worker
// count; the counter-based generator makes each shot reproducible from
// (seed, shot index).
EstimateReport sample_circuit(const DensityMatrix& rho0, const GateQpdAssignment& gates,
                              const ObservableSpec& observable, std::int64_t shots,
                              std::uint64_t seed, OutputMode mode = OutputMode::expectation,
                              const Parallelism& par = Parallelism::serial());

// ratio of squared standard errors; infinity when the baseline variance
// vanishes
double variance_overhead(const EstimateReport& report, double baseline_stderr);

// Philox-4x32-10 counter-based generator: stateless across shots, a
// deterministic stream per (seed, shot).
class PhiloxRng {
public:
    PhiloxRng(std::uint64_t seed, std::uint64_t shot) : seed_(seed), shot_(shot) {}
    double next_double();  // uniform in [0, 1)

private:
    std::uint64_t seed_ = 0, shot_ = 0;
    std::uint32_t draw_ = 0;
};

}  // namespace qpd
