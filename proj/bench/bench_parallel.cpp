// Serial-vs-parallel comparison of the data-parallel kernels: Monte Carlo
// shot batches and tradeoff-grid fan-out. Run with
//   build/bench/qpd_bench --benchmark_min_time=1x
#include <benchmark/benchmark.h>

#include "qpd/noise.hpp"
#include "qpd/sampler.hpp"

using namespace qpd;

namespace {

ChoiMatrix depolarizing_choi(double p) {
    ComplexMatrix x(2, 2), y(2, 2), z(2, 2);
    x << 0, 1, 1, 0;
    y << 0, Complex(0, -1), Complex(0, 1), 0;
    z << 1, 0, 0, -1;
    return choi_from_kraus({std::sqrt(1 - 3 * p / 4) * ComplexMatrix::Identity(2, 2),
                            std::sqrt(p / 4) * x, std::sqrt(p / 4) * y, std::sqrt(p / 4) * z});
}

GateQpdAssignment correction_assignment(double p) {
    ChoiMatrix dep = depolarizing_choi(p);
    ChannelSet set;
    set.emplace_back("P0", compose(dep, choi_from_unitary(ComplexMatrix::Identity(2, 2))));
    ComplexMatrix x(2, 2), y(2, 2), z(2, 2);
    x << 0, 1, 1, 0;
    y << 0, Complex(0, -1), Complex(0, 1), 0;
    z << 1, 0, 0, -1;
    set.emplace_back("P1", compose(dep, choi_from_unitary(x)));
    set.emplace_back("P2", compose(dep, choi_from_unitary(y)));
    set.emplace_back("P3", compose(dep, choi_from_unitary(z)));
    auto q = exact_qpd(ChoiMatrix::identity(1), set);
    GateQpdAssignment a;
    a.n_qubits = 1;
    a.gates.push_back({{0}, q});
    return a;
}

void bench_sampler(benchmark::State& state, int jobs) {
    GateQpdAssignment a = correction_assignment(0.1);
    DensityMatrix rho = DensityMatrix::basis_state(1, 0);
    ComplexMatrix z(2, 2);
    z << 1, 0, 0, -1;
    ObservableSpec obs(z);
    for (auto _ : state) {
        EstimateReport r = sample_circuit(rho, a, obs, 200000, 7, OutputMode::bernoulli,
                                          Parallelism{jobs});
        benchmark::DoNotOptimize(r.mean);
    }
}

void bench_tradeoff(benchmark::State& state, int jobs) {
    NoiseModel nm = NoiseModel::depolarizing(0.1);
    auto oracle = make_noise_oracle(nm);
    ChannelSet set = standard_basis(1, oracle);
    Circuit c(1, {GateSpec(GateKind::Ry, {0}, 0.9)});
    set.emplace_back("noisy_gate", oracle(c));
    ChoiMatrix ideal = choi_from_unitary(gate_unitary(c.gates[0]));
    auto exact = exact_qpd(ideal, set);
    std::vector<double> grid = default_budget_grid(exact.gamma, 11);
    for (auto _ : state) {
        TradeoffCurve curve = tradeoff_curve(ideal, set, grid, {}, Parallelism{jobs});
        benchmark::DoNotOptimize(curve.samples.back().second);
    }
}

}  // namespace

BENCHMARK_CAPTURE(bench_sampler, serial, 1)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(bench_sampler, parallel, 0)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(bench_tradeoff, serial, 1)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(bench_tradeoff, parallel, 0)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
