#include "qpd/serialization.hpp"

#include <cstdio>
#include <nlohmann/json.hpp>
#include <stdexcept>

namespace qpd {

namespace {

Json matrix_part_to_json(const ComplexMatrix& m, bool imag) {
    Json rows = Json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        Json row = Json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c)
            row.push_back(imag ? m(r, c).imag() : m(r, c).real());
        rows.push_back(std::move(row));
    }
    return rows;
}

GateKind gate_kind_from_name(const std::string& name) {
    for (GateKind k : {GateKind::H, GateKind::S, GateKind::P0, GateKind::X, GateKind::Y,
                       GateKind::Z, GateKind::Ry, GateKind::Rz, GateKind::CNOT, GateKind::SWAP})
        if (gate_name(k) == name) return k;
    throw std::invalid_argument("unknown gate name: " + name);
}

}  // namespace

std::string csv_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

Json choi_to_json(const ChoiMatrix& choi) {
    Json j;
    j["n_in"] = choi.n_in;
    j["n_out"] = choi.n_out;
    j["convention"] = "trace1";
    j["re"] = matrix_part_to_json(choi.matrix, false);
    j["im"] = matrix_part_to_json(choi.matrix, true);
    return j;
}

ChoiMatrix choi_from_json(const Json& j) {
    const int n_in = j.at("n_in").get<int>();
    const int n_out = j.at("n_out").get<int>();
    if (j.at("convention").get<std::string>() != "trace1")
        throw std::invalid_argument("unsupported Choi convention");
    const auto& re = j.at("re");
    const auto& im = j.at("im");
    const Eigen::Index side = Eigen::Index{1} << (n_in + n_out);
    if (static_cast<Eigen::Index>(re.size()) != side ||
        static_cast<Eigen::Index>(im.size()) != side)
        throw std::invalid_argument("Choi JSON has wrong dimensions");
    ComplexMatrix m(side, side);
    for (Eigen::Index r = 0; r < side; ++r)
        for (Eigen::Index c = 0; c < side; ++c)
            m(r, c) = Complex(re[r][c].get<double>(), im[r][c].get<double>());
    return ChoiMatrix(n_in, n_out, std::move(m));
}

Json circuit_to_json(const Circuit& c) {
    Json j;
    j["n_qubits"] = c.n_qubits;
    j["n_data"] = c.n_data;
    Json gates = Json::array();
    for (const auto& g : c.gates) {
        Json gate;
        gate["kind"] = gate_name(g.kind);
        gate["qubits"] = g.qubits;
        if (gate_has_angle(g.kind)) gate["angle"] = g.angle;
        gates.push_back(std::move(gate));
    }
    j["gates"] = std::move(gates);
    return j;
}

Circuit circuit_from_json(const Json& j) {
    std::vector<GateSpec> gates;
    for (const auto& gate : j.at("gates")) {
        const GateKind kind = gate_kind_from_name(gate.at("kind").get<std::string>());
        gates.emplace_back(kind, gate.at("qubits").get<std::vector<int>>(),
                           gate.value("angle", 0.0));
    }
    return Circuit(j.at("n_qubits").get<int>(), std::move(gates),
                   j.value("n_data", j.at("n_qubits").get<int>()));
}

Json qpd_to_json(const QuasiprobabilityDecomposition& qpd, const std::string& choi_ref_prefix) {
    Json j;
    j["gamma"] = qpd.gamma;
    j["residual"] = qpd.residual_diamond_error;
    Json items = Json::array();
    for (size_t k = 0; k < qpd.items.size(); ++k) {
        Json item;
        item["label"] = qpd.items[k].label;
        item["a"] = qpd.items[k].coeff;
        item["choi_ref"] = choi_ref_prefix + std::to_string(k) + ".json";
        items.push_back(std::move(item));
    }
    j["items"] = std::move(items);
    return j;
}

Json channel_decomposition_to_json(const ChannelDecomposition& d) {
    Json j;
    j["gamma"] = d.gamma;
    j["residual_fro"] = d.residual_fro;
    Json items = Json::array();
    for (const auto& it : d.items) {
        Json item;
        item["a"] = it.weight;
        item["sign"] = it.positive ? 1 : -1;
        item["rank"] = it.weight > 0.0 ? channel_rank(it.choi).value : 0;
        item["choi"] = choi_to_json(it.choi);
        items.push_back(std::move(item));
    }
    j["items"] = std::move(items);
    return j;
}

Json estimate_report_to_json(const EstimateReport& r) {
    Json j;
    j["shots"] = r.shots;
    j["mean"] = r.mean;
    j["stderr"] = r.stderr_;
    j["abort_fraction"] = r.abort_fraction;
    j["gamma_total"] = r.gamma_total;
    j["seed"] = r.seed;
    j["mode"] = r.mode == OutputMode::expectation ? "expectation" : "bernoulli";
    return j;
}

std::string tradeoff_curve_csv(const TradeoffCurve& curve) {
    std::string out = "gamma_budget,diamond_error\n";
    for (const auto& [g, e] : curve.samples)
        out += csv_double(g) + "," + csv_double(e) + "\n";
    return out;
}

std::string depth_sweep_csv(const std::vector<DepthSweepRow>& rows) {
    std::string out = "m,fit_objective,diamond_error\n";
    for (const auto& r : rows)
        out += std::to_string(r.depth) + "," + csv_double(r.fit_objective) + "," +
               csv_double(r.diamond_error) + "\n";
    return out;
}

std::string budget_allocation_csv(const BudgetAllocation& alloc,
                                  const std::vector<std::string>& gate_labels) {
    std::string out = "gamma_total,gate_label,gamma_budget,error_contribution\n";
    for (size_t i = 0; i < alloc.budgets.size(); ++i)
        out += csv_double(alloc.gamma_total) + "," + gate_labels.at(i) + "," +
               csv_double(alloc.budgets[i]) + "," + csv_double(alloc.error_contributions[i]) +
               "\n";
    return out;
}

std::string estimate_report_csv_row(const EstimateReport& r) {
    return std::to_string(r.shots) + "," + csv_double(r.mean) + "," + csv_double(r.stderr_) +
           "," + csv_double(r.gamma_total) + "," + csv_double(r.abort_fraction) + "," +
           std::to_string(r.seed) + "\n";
}

Json stinespring_manifest(const StinespringConfig& cfg, const StinespringResult& result) {
    Json j;
    j["config"] = {{"delta_threshold", cfg.delta_threshold},
                   {"max_iterations", cfg.max_iterations},
                   {"rank", cfg.rank},
                   {"variational_depth", cfg.variational_depth},
                   {"bm_restarts", cfg.bm.restarts},
                   {"bm_epsilon", cfg.bm.epsilon},
                   {"fit_restarts", cfg.fit.restarts}};
    j["converged"] = result.converged;
    Json trace = Json::array();
    for (const auto& rec : result.trace)
        trace.push_back({{"iteration", rec.iteration},
                         {"delta", rec.delta},
                         {"gamma", rec.gamma},
                         {"residual_trace", rec.residual_trace},
                         {"residual_marginal_dev", rec.residual_marginal_dev},
                         {"bm_objective", rec.bm_objective},
                         {"channels_added", rec.channels_added}});
    j["trace"] = std::move(trace);
    Json labels = Json::array();
    for (const auto& e : result.set)
        labels.push_back({{"label", e.label}, {"source_iteration", e.source_iteration}});
    j["set"] = std::move(labels);
    j["final_gamma"] = result.final_qpd.gamma;
    j["final_residual"] = result.final_qpd.residual_diamond_error;
    return j;
}

}  // namespace qpd
