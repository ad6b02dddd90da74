#include "qpd/sampler.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace qpd {

namespace {

constexpr std::int64_t kBatch = 4096;  // fixed so results never depend on the worker count

struct PhiloxCtr {
    std::uint32_t v[4];
};

inline void philox_round(PhiloxCtr& ctr, std::uint32_t k0, std::uint32_t k1) {
    const std::uint64_t p0 = std::uint64_t{0xD2511F53} * ctr.v[0];
    const std::uint64_t p1 = std::uint64_t{0xCD9E8D57} * ctr.v[2];
    PhiloxCtr out;
    out.v[0] = static_cast<std::uint32_t>(p1 >> 32) ^ ctr.v[1] ^ k0;
    out.v[1] = static_cast<std::uint32_t>(p1);
    out.v[2] = static_cast<std::uint32_t>(p0 >> 32) ^ ctr.v[3] ^ k1;
    out.v[3] = static_cast<std::uint32_t>(p0);
    ctr = out;
}

PhiloxCtr philox10(PhiloxCtr ctr, std::uint32_t k0, std::uint32_t k1) {
    for (int round = 0; round < 10; ++round) {
        philox_round(ctr, k0, k1);
        k0 += 0x9E3779B9;
        k1 += 0xBB67AE85;
    }
    return ctr;
}

// per-gate sampling tables
struct GateTable {
    std::vector<double> cdf;           // over items with |a| > 0
    std::vector<double> sign;
    std::vector<ComplexMatrix> transfer;  // full-width row-major superoperators
    double gamma = 0.0;
};

ComplexMatrix lift_transfer(const ComplexMatrix& local, const std::vector<int>& support,
                            int n_qubits) {
    const Eigen::Index d = Eigen::Index{1} << n_qubits;
    const int arity = static_cast<int>(support.size());
    const Eigen::Index d_s = Eigen::Index{1} << arity;
    Eigen::Index rest_mask = d - 1;
    for (int q : support) rest_mask &= ~(Eigen::Index{1} << q);

    auto local_bits = [&](Eigen::Index full) {
        Eigen::Index loc = 0;
        for (int b = 0; b < arity; ++b)
            if (full & (Eigen::Index{1} << support[b])) loc |= Eigen::Index{1} << b;
        return loc;
    };

    ComplexMatrix out = ComplexMatrix::Zero(d * d, d * d);
    for (Eigen::Index r = 0; r < d; ++r)
        for (Eigen::Index c = 0; c < d; ++c)
            for (Eigen::Index i = 0; i < d; ++i) {
                if ((r & rest_mask) != (i & rest_mask)) continue;
                for (Eigen::Index j = 0; j < d; ++j) {
                    if ((c & rest_mask) != (j & rest_mask)) continue;
                    out(r * d + c, i * d + j) =
                        local(local_bits(r) * d_s + local_bits(c),
                              local_bits(i) * d_s + local_bits(j));
                }
            }
    return out;
}

}  // namespace

double PhiloxRng::next_double() {
    PhiloxCtr ctr{{static_cast<std::uint32_t>(shot_), static_cast<std::uint32_t>(shot_ >> 32),
                   draw_++, 0u}};
    ctr = philox10(ctr, static_cast<std::uint32_t>(seed_),
                   static_cast<std::uint32_t>(seed_ >> 32));
    const std::uint64_t bits =
        (std::uint64_t{ctr.v[0]} << 21) ^ (std::uint64_t{ctr.v[1]} << 11) ^ ctr.v[2];
    return static_cast<double>(bits & ((std::uint64_t{1} << 53) - 1)) /
           static_cast<double>(std::uint64_t{1} << 53);
}

ObservableSpec::ObservableSpec(ComplexMatrix m, const Tolerances& tol) : matrix(std::move(m)) {
    if (!is_hermitian(matrix, tol.hermitian))
        throw std::invalid_argument("observable must be Hermitian");
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(matrix, Eigen::EigenvaluesOnly);
    spectral_bound = es.eigenvalues().cwiseAbs().maxCoeff();
}

double GateQpdAssignment::gamma_total() const {
    double g = 1.0;
    for (const auto& gate : gates) {
        double gk = 0.0;
        for (const auto& item : gate.qpd.items) gk += std::abs(item.coeff);
        g *= gk;
    }
    return g;
}

EstimateReport sample_circuit(const DensityMatrix& rho0, const GateQpdAssignment& gates,
                              const ObservableSpec& observable, std::int64_t shots,
                              std::uint64_t seed, OutputMode mode, const Parallelism& par) {
    if (shots < 1) throw std::invalid_argument("sample_circuit: needs at least one shot");
    const int n = gates.n_qubits;
    const Eigen::Index d = Eigen::Index{1} << n;
    if (rho0.matrix.rows() != d || observable.matrix.rows() != d)
        throw std::invalid_argument("sample_circuit: dimension mismatch");

    std::vector<GateTable> tables;
    for (const auto& gate : gates.gates) {
        GateTable t;
        for (const auto& item : gate.qpd.items) t.gamma += std::abs(item.coeff);
        if (t.gamma <= 0.0)
            throw std::invalid_argument("sample_circuit: gate with zero gamma");
        double acc = 0.0;
        for (const auto& item : gate.qpd.items) {
            if (item.coeff == 0.0) continue;
            acc += std::abs(item.coeff) / t.gamma;
            t.cdf.push_back(acc);
            t.sign.push_back(item.coeff >= 0.0 ? 1.0 : -1.0);
            t.transfer.push_back(
                lift_transfer(transfer_from_choi(item.choi), gate.support, n));
        }
        t.cdf.back() = 1.0;
        tables.push_back(std::move(t));
    }
    const double gamma_total = gates.gamma_total();

    // observable eigensystem for the Bernoulli mode
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> obs_eigen(observable.matrix);

    const Eigen::VectorXcd rho_init =
        Eigen::Map<const Eigen::VectorXcd>(rho0.matrix.data(), d * d);
    // row-major vec: Eigen stores column-major, so map the transpose
    Eigen::VectorXcd rho_init_rm(d * d);
    for (Eigen::Index r = 0; r < d; ++r)
        for (Eigen::Index c = 0; c < d; ++c) rho_init_rm(r * d + c) = rho0.matrix(r, c);

    const std::int64_t n_chunks = (shots + kBatch - 1) / kBatch;
    struct Partial {
        double sum = 0.0, sum_sq = 0.0;
        std::int64_t aborts = 0;
    };
    std::vector<Partial> partials(n_chunks);

    parallel_for(par, n_chunks, [&](std::int64_t chunk) {
        Partial acc;
        Eigen::VectorXcd rho(d * d), next(d * d);
        const std::int64_t begin = chunk * kBatch;
        const std::int64_t end = std::min(shots, begin + kBatch);
        for (std::int64_t shot = begin; shot < end; ++shot) {
            PhiloxRng rng(seed, static_cast<std::uint64_t>(shot));
            rho = rho_init_rm;
            double sign = 1.0;
            bool aborted = false;
            for (const auto& t : tables) {
                const double u = rng.next_double();
                size_t pick = 0;
                while (pick + 1 < t.cdf.size() && u > t.cdf[pick]) ++pick;
                sign *= t.sign[pick];
                next.noalias() = t.transfer[pick] * rho;
                double survival = 0.0;
                for (Eigen::Index k = 0; k < d; ++k) survival += next(k * d + k).real();
                if (rng.next_double() > survival) {
                    aborted = true;
                    break;
                }
                rho = next / survival;
            }
            double out = 0.0;
            if (aborted) {
                ++acc.aborts;
            } else if (mode == OutputMode::expectation) {
                Complex val = 0.0;
                for (Eigen::Index r = 0; r < d; ++r)
                    for (Eigen::Index c = 0; c < d; ++c)
                        val += observable.matrix(r, c) * rho(c * d + r);
                out = gamma_total * sign * val.real();
            } else {
                // sample an eigenvalue of O from rho
                const double u = rng.next_double();
                double cum = 0.0;
                Eigen::Index pick = d - 1;
                for (Eigen::Index e = 0; e < d; ++e) {
                    const auto v = obs_eigen.eigenvectors().col(e);
                    Complex prob = 0.0;
                    for (Eigen::Index r = 0; r < d; ++r)
                        for (Eigen::Index c = 0; c < d; ++c)
                            prob += std::conj(v(r)) * rho(r * d + c) * v(c);
                    cum += std::max(0.0, prob.real());
                    if (u <= cum) {
                        pick = e;
                        break;
                    }
                }
                out = gamma_total * sign * obs_eigen.eigenvalues()(pick);
            }
            acc.sum += out;
            acc.sum_sq += out * out;
        }
        partials[chunk] = acc;
    });

    double sum = 0.0, sum_sq = 0.0;
    std::int64_t aborts = 0;
    for (const auto& p : partials) {
        sum += p.sum;
        sum_sq += p.sum_sq;
        aborts += p.aborts;
    }

    EstimateReport report;
    report.shots = shots;
    report.seed = seed;
    report.mode = mode;
    report.gamma_total = gamma_total;
    report.abort_fraction = static_cast<double>(aborts) / static_cast<double>(shots);
    report.mean = sum / static_cast<double>(shots);
    const double var =
        shots > 1 ? std::max(0.0, (sum_sq - static_cast<double>(shots) * report.mean *
                                                report.mean) /
                                      static_cast<double>(shots - 1))
                  : 0.0;
    report.stderr_ = std::sqrt(var / static_cast<double>(shots));
    return report;
}

double variance_overhead(const EstimateReport& report, double baseline_stderr) {
    if (baseline_stderr <= 0.0) return std::numeric_limits<double>::infinity();
    const double r = report.stderr_ / baseline_stderr;
    return r * r;
}

}  // namespace qpd
