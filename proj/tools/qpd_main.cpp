// qpd: noise-aware quasiprobability decomposition toolkit
//
// Commands front the library's headline operations:
//   tradeoff     approximate-QPD error vs gamma-budget curve (CSV)
//   decompose    optimal exact QPD over the standard basis + noisy gate (JSON)
//   stinespring  iterative decomposition-set construction (manifest + bundle)
//   sample       quasiprobability Monte Carlo estimate (JSON + CSV row)
//   budget       gamma-budget distribution across a circuit (CSV)
//   diamond      diamond distance between the ideal and noisy target (stdout)
//
// Every run is driven by a JSON config file; --seed/--jobs/--out override the
// matching top-level keys. Data files are byte-stable across reruns; the
// timestamp lives in a .meta.json sidecar next to each output.

#include <CLI11.hpp>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>

#include "qpd/budget.hpp"
#include "qpd/sampler.hpp"
#include "qpd/serialization.hpp"
#include "qpd/stinespring.hpp"

namespace fs = std::filesystem;
using qpd::Json;

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitSolver = 2;
constexpr int kExitNonConvergence = 3;

struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NonConvergence : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

void require_keys(const Json& j, const std::vector<std::string>& allowed,
                  const std::string& where) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const auto& k : allowed)
            if (it.key() == k) ok = true;
        if (!ok) throw ValidationError("unknown config key '" + it.key() + "' in " + where);
    }
}

qpd::NoiseModel parse_noise(const Json& cfg) {
    qpd::NoiseModel nm;
    if (!cfg.contains("noise")) return nm;
    const Json& j = cfg.at("noise");
    require_keys(j, {"p2", "p1", "gamma_ad", "gamma_pd", "meas_error", "block_noise"}, "noise");
    nm.p2 = j.value("p2", 0.0);
    nm.p1 = j.value("p1", -1.0);
    nm.gamma_ad = j.value("gamma_ad", 0.0);
    nm.gamma_pd = j.value("gamma_pd", 0.0);
    nm.meas_error = j.value("meas_error", 0.0);
    nm.block_noise = j.value("block_noise", false);
    try {
        nm.validate();
    } catch (const std::exception& e) {
        throw ValidationError(e.what());
    }
    return nm;
}

qpd::Circuit parse_target(const Json& j) {
    require_keys(j, {"gate", "angle"}, "target");
    const std::string gate = j.at("gate").get<std::string>();
    const double angle = j.value("angle", 0.5);
    using qpd::GateKind;
    using qpd::GateSpec;
    if (gate == "Ry") return qpd::Circuit(1, {GateSpec(GateKind::Ry, {0}, angle)});
    if (gate == "Rz") return qpd::Circuit(1, {GateSpec(GateKind::Rz, {0}, angle)});
    if (gate == "H") return qpd::Circuit(1, {GateSpec(GateKind::H, {0})});
    if (gate == "X") return qpd::Circuit(1, {GateSpec(GateKind::X, {0})});
    if (gate == "Y") return qpd::Circuit(1, {GateSpec(GateKind::Y, {0})});
    if (gate == "Z") return qpd::Circuit(1, {GateSpec(GateKind::Z, {0})});
    if (gate == "S") return qpd::Circuit(1, {GateSpec(GateKind::S, {0})});
    if (gate == "CNOT") return qpd::Circuit(2, {GateSpec(GateKind::CNOT, {0, 1})});
    if (gate == "SWAP") return qpd::Circuit(2, {GateSpec(GateKind::SWAP, {0, 1})});
    throw ValidationError("unknown target gate '" + gate + "'");
}

// standard basis plus the gate as realized by the oracle
qpd::ChannelSet gate_decomposition_set(const qpd::Circuit& target, const qpd::NoiseOracle& oracle,
                                       bool include_gate) {
    qpd::ChannelSet set = qpd::standard_basis(target.n_qubits, oracle);
    if (include_gate) set.emplace_back("noisy_gate", oracle(target));
    return set;
}

struct Outputs {
    fs::path dir;
    std::uint64_t config_hash = 0;
    std::uint64_t seed = 0;

    void write_text(const std::string& name, const std::string& body) const {
        std::ofstream f(dir / name, std::ios::binary);
        f << body;
        if (!f) throw std::runtime_error("failed to write " + (dir / name).string());
        write_meta(name);
    }
    void write_json(const std::string& name, Json j) const {
        j["config_hash"] = config_hash;
        j["seed"] = seed;
        std::ofstream f(dir / name, std::ios::binary);
        f << j.dump(2) << "\n";
        if (!f) throw std::runtime_error("failed to write " + (dir / name).string());
        write_meta(name);
    }
    void write_meta(const std::string& name) const {
        Json meta;
        meta["file"] = name;
        meta["config_hash"] = config_hash;
        meta["seed"] = seed;
        meta["written_unix_ms"] =
            std::chrono::duration_cast<std::chrono::milliseconds>(
                std::chrono::system_clock::now().time_since_epoch())
                .count();
        std::ofstream f(dir / (name + ".meta.json"), std::ios::binary);
        f << meta.dump(2) << "\n";
    }
};

int cmd_tradeoff(const Json& cfg, const Outputs& out, const qpd::Parallelism& par) {
    require_keys(cfg, {"noise", "target", "points", "enforce_cp", "enforce_tp", "include_gate",
                       "seed", "jobs", "out"},
                 "tradeoff config");
    qpd::NoiseModel nm = parse_noise(cfg);
    qpd::Circuit target = parse_target(cfg.at("target"));
    auto oracle = qpd::make_noise_oracle(nm);
    qpd::ChannelSet set = gate_decomposition_set(target, oracle, cfg.value("include_gate", true));
    qpd::ChoiMatrix ideal = qpd::ideal_circuit_choi(target);

    auto exact = qpd::exact_qpd(ideal, set);
    std::vector<double> grid =
        qpd::default_budget_grid(exact.gamma, cfg.value("points", 21));
    qpd::ApproxQpdOptions flags;
    flags.enforce_cp = cfg.value("enforce_cp", false);
    flags.enforce_tp = cfg.value("enforce_tp", false);
    qpd::TradeoffCurve curve = qpd::tradeoff_curve(ideal, set, grid, flags, par);
    out.write_text("tradeoff.csv", qpd::tradeoff_curve_csv(curve));
    std::cout << "gamma_opt " << qpd::csv_double(exact.gamma) << "\n";
    return 0;
}

int cmd_decompose(const Json& cfg, const Outputs& out, const qpd::Parallelism&) {
    require_keys(cfg, {"noise", "target", "include_gate", "seed", "jobs", "out"},
                 "decompose config");
    qpd::NoiseModel nm = parse_noise(cfg);
    qpd::Circuit target = parse_target(cfg.at("target"));
    auto oracle = qpd::make_noise_oracle(nm);
    qpd::ChannelSet set = gate_decomposition_set(target, oracle, cfg.value("include_gate", true));
    auto qpd_result = qpd::exact_qpd(qpd::ideal_circuit_choi(target), set);

    fs::create_directories(out.dir / "chois");
    for (size_t k = 0; k < qpd_result.items.size(); ++k) {
        Json cj = qpd::choi_to_json(qpd_result.items[k].choi);
        std::ofstream f(out.dir / "chois" / ("item_" + std::to_string(k) + ".json"),
                        std::ios::binary);
        f << cj.dump(2) << "\n";
    }
    out.write_json("qpd.json", qpd::qpd_to_json(qpd_result, "chois/item_"));
    std::cout << "gamma " << qpd::csv_double(qpd_result.gamma) << "\n";
    return 0;
}

int cmd_stinespring(const Json& cfg, const Outputs& out, const qpd::Parallelism& par) {
    require_keys(cfg, {"noise", "target", "threshold", "max_iterations", "rank", "depth",
                       "fit_restarts", "bm_restarts", "epsilon", "seed", "jobs", "out"},
                 "stinespring config");
    qpd::NoiseModel nm = parse_noise(cfg);
    qpd::Circuit target = parse_target(cfg.at("target"));
    qpd::StinespringConfig scfg;
    scfg.delta_threshold = cfg.value("threshold", 1e-7);
    scfg.max_iterations = cfg.value("max_iterations", 15);
    scfg.rank = cfg.value("rank", 2);
    scfg.variational_depth = cfg.value("depth", 6);
    scfg.fit.restarts = cfg.value("fit_restarts", 5);
    scfg.bm.restarts = cfg.value("bm_restarts", 5);
    scfg.bm.epsilon = cfg.value("epsilon", 0.2);
    scfg.fit.seed = cfg.value("seed", std::uint64_t{1});
    scfg.bm.seed = scfg.fit.seed;
    scfg.par = par;

    qpd::StinespringResult r = qpd::run_stinespring(target, qpd::make_noise_oracle(nm), scfg);
    out.write_json("manifest.json", qpd::stinespring_manifest(scfg, r));

    fs::create_directories(out.dir / "set");
    for (size_t k = 0; k < r.set.size(); ++k) {
        Json entry;
        entry["label"] = r.set[k].label;
        entry["source_iteration"] = r.set[k].source_iteration;
        entry["circuit"] = qpd::circuit_to_json(r.set[k].circuit);
        entry["choi"] = qpd::choi_to_json(r.set[k].realized);
        std::ofstream f(out.dir / "set" / ("channel_" + std::to_string(k) + ".json"),
                        std::ios::binary);
        f << entry.dump(2) << "\n";
    }
    out.write_json("final_qpd.json", qpd::qpd_to_json(r.final_qpd, "set/channel_"));
    std::cout << "converged " << (r.converged ? 1 : 0) << " iterations " << r.trace.size()
              << " gamma " << qpd::csv_double(r.final_qpd.gamma) << "\n";
    if (!r.converged) throw NonConvergence("threshold not reached within max iterations");
    return 0;
}

int cmd_sample(const Json& cfg, const Outputs& out, const qpd::Parallelism& par) {
    require_keys(cfg, {"noise", "target", "shots", "mode", "observable", "state", "include_gate",
                       "seed", "jobs", "out"},
                 "sample config");
    qpd::NoiseModel nm = parse_noise(cfg);
    qpd::Circuit target = parse_target(cfg.at("target"));
    auto oracle = qpd::make_noise_oracle(nm);
    qpd::ChannelSet set = gate_decomposition_set(target, oracle, cfg.value("include_gate", true));
    auto decomposition = qpd::exact_qpd(qpd::ideal_circuit_choi(target), set);

    qpd::GateQpdAssignment assignment;
    assignment.n_qubits = target.n_qubits;
    std::vector<int> support(target.n_qubits);
    for (int q = 0; q < target.n_qubits; ++q) support[q] = q;
    assignment.gates.push_back({support, decomposition});

    const std::string state = cfg.value("state", "zero");
    qpd::ComplexMatrix rho;
    if (state == "zero") {
        rho = qpd::DensityMatrix::basis_state(target.n_qubits, 0).matrix;
    } else if (state == "plus") {
        const Eigen::Index d = Eigen::Index{1} << target.n_qubits;
        rho = qpd::ComplexMatrix::Constant(d, d, 1.0 / static_cast<double>(d));
    } else {
        throw ValidationError("unknown state '" + state + "'");
    }

    const std::string obs = cfg.value("observable", std::string(target.n_qubits, 'Z'));
    if (static_cast<int>(obs.size()) != target.n_qubits)
        throw ValidationError("observable word length must match the qubit count");
    qpd::ComplexMatrix o(1, 1);
    o(0, 0) = 1.0;
    // obs[0] addresses qubit 0, the least significant factor
    for (int q = target.n_qubits - 1; q >= 0; --q) {
        qpd::ComplexMatrix local;
        switch (obs[q]) {
            case 'I': local = qpd::ComplexMatrix::Identity(2, 2); break;
            case 'X': local = qpd::gate_unitary(qpd::GateSpec(qpd::GateKind::X, {0})); break;
            case 'Y': local = qpd::gate_unitary(qpd::GateSpec(qpd::GateKind::Y, {0})); break;
            case 'Z': local = qpd::gate_unitary(qpd::GateSpec(qpd::GateKind::Z, {0})); break;
            default: throw ValidationError("observable letters must be I, X, Y or Z");
        }
        o = qpd::kron(o, local);
    }

    const std::string mode_name = cfg.value("mode", "expectation");
    if (mode_name != "expectation" && mode_name != "bernoulli")
        throw ValidationError("mode must be expectation or bernoulli");
    const qpd::OutputMode mode = mode_name == "expectation" ? qpd::OutputMode::expectation
                                                            : qpd::OutputMode::bernoulli;
    const std::int64_t shots = cfg.value("shots", std::int64_t{100000});
    if (shots < 1) throw ValidationError("shots must be positive");

    qpd::EstimateReport report =
        qpd::sample_circuit(qpd::DensityMatrix(rho), assignment, qpd::ObservableSpec(o), shots,
                            cfg.value("seed", std::uint64_t{1}), mode, par);
    out.write_json("report.json", qpd::estimate_report_to_json(report));
    out.write_text("report.csv", "shots,mean,stderr,gamma_total,abort_frac,seed\n" +
                                     qpd::estimate_report_csv_row(report));
    std::cout << "mean " << qpd::csv_double(report.mean) << " stderr "
              << qpd::csv_double(report.stderr_) << "\n";
    return 0;
}

int cmd_budget(const Json& cfg, const Outputs& out, const qpd::Parallelism& par) {
    require_keys(cfg, {"noise", "gates", "gamma_total", "points", "seed", "jobs", "out"},
                 "budget config");
    qpd::NoiseModel nm = parse_noise(cfg);
    auto oracle = qpd::make_noise_oracle(nm);
    if (!cfg.contains("gates") || !cfg.at("gates").is_array() || cfg.at("gates").empty())
        throw ValidationError("budget needs a nonempty 'gates' array");
    const double gamma_total = cfg.value("gamma_total", 1.05);

    std::vector<qpd::TradeoffCurve> curves;
    std::vector<std::string> labels;
    for (const auto& gate_cfg : cfg.at("gates")) {
        qpd::Circuit target = parse_target(gate_cfg);
        labels.push_back(gate_cfg.at("gate").get<std::string>());
        qpd::ChannelSet set = gate_decomposition_set(target, oracle, true);
        qpd::ChoiMatrix ideal = qpd::ideal_circuit_choi(target);
        auto exact = qpd::exact_qpd(ideal, set);
        std::vector<double> grid =
            qpd::default_budget_grid(exact.gamma, cfg.value("points", 11));
        qpd::ApproxQpdOptions flags;
        flags.enforce_cp = true;  // the additive bound needs physical maps
        flags.enforce_tp = true;
        curves.push_back(qpd::tradeoff_curve(ideal, set, grid, flags, par));
    }
    qpd::BudgetOptions opts;
    opts.seed = cfg.value("seed", std::uint64_t{1});
    opts.par = par;
    qpd::BudgetAllocation alloc = qpd::optimize_budget(curves, gamma_total, opts);
    out.write_text("budget.csv", qpd::budget_allocation_csv(alloc, labels));
    std::cout << "objective " << qpd::csv_double(alloc.objective) << "\n";
    return 0;
}

int cmd_diamond(const Json& cfg, const Outputs&, const qpd::Parallelism&) {
    require_keys(cfg, {"noise", "target", "seed", "jobs", "out"}, "diamond config");
    qpd::NoiseModel nm = parse_noise(cfg);
    qpd::Circuit target = parse_target(cfg.at("target"));
    qpd::ChoiMatrix ideal = qpd::ideal_circuit_choi(target);
    qpd::ChoiMatrix noisy = qpd::simulate_noisy_circuit(target, nm);
    qpd::ChoiMatrix diff = ideal;
    diff.matrix -= noisy.matrix;
    std::cout << qpd::csv_double(qpd::diamond_norm(diff)) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"noise-aware quasiprobability decomposition toolkit"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    int jobs = -1;
    std::int64_t seed = -1;

    const std::vector<std::string> names = {"tradeoff", "decompose", "stinespring",
                                            "sample", "budget", "diamond"};
    for (const auto& name : names) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "JSON config file")->required();
        sub->add_option("--jobs", jobs, "worker pool size (0 = all cores)");
        sub->add_option("--seed", seed, "RNG seed override");
        sub->add_option("--out", out_dir, "output directory");
    }
    CLI11_PARSE(app, argc, argv);
    const std::string command = app.get_subcommands().front()->get_name();

    try {
        std::ifstream f(config_path);
        if (!f) throw ValidationError("cannot open config file " + config_path);
        Json cfg;
        try {
            cfg = Json::parse(f);
        } catch (const std::exception& e) {
            throw ValidationError(std::string("config parse error: ") + e.what());
        }
        // precedence: flag > file > default
        if (seed >= 0) cfg["seed"] = static_cast<std::uint64_t>(seed);
        if (jobs >= 0) cfg["jobs"] = jobs;
        if (!out_dir.empty()) cfg["out"] = out_dir;

        Outputs out;
        out.dir = cfg.value("out", std::string("."));
        out.config_hash = fnv1a(cfg.dump());
        out.seed = cfg.value("seed", std::uint64_t{1});
        fs::create_directories(out.dir);
        qpd::Parallelism par{cfg.value("jobs", 0)};

        if (command == "tradeoff") return cmd_tradeoff(cfg, out, par);
        if (command == "decompose") return cmd_decompose(cfg, out, par);
        if (command == "stinespring") return cmd_stinespring(cfg, out, par);
        if (command == "sample") return cmd_sample(cfg, out, par);
        if (command == "budget") return cmd_budget(cfg, out, par);
        if (command == "diamond") return cmd_diamond(cfg, out, par);
        throw ValidationError("unknown command");
    } catch (const ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::invalid_argument& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const NonConvergence& e) {
        std::cerr << "non-convergence: " << e.what() << "\n";
        return kExitNonConvergence;
    } catch (const std::exception& e) {
        std::cerr << "solver failure: " << e.what() << "\n";
        return kExitSolver;
    }
}
