#pragma once

#include <nlohmann/json_fwd.hpp>
#include <string>

#include "qpd/budget.hpp"
#include "qpd/channel_decomposition.hpp"
#include "qpd/sampler.hpp"
#include "qpd/stinespring.hpp"
#include "qpd/variational.hpp"

namespace qpd {

using Json = nlohmann::json;

// Choi matrices serialize as
//   {n_in, n_out, convention: "trace1", re: [[...]], im: [[...]]}
// with row-major IEEE-754 doubles.
Json choi_to_json(const ChoiMatrix& choi);
ChoiMatrix choi_from_json(const Json& j);

Json circuit_to_json(const Circuit& c);
Circuit circuit_from_json(const Json& j);

// {gamma, residual, items: [{label, a, choi_ref}]}; the items' Choi matrices
// are stored separately under the returned refs.
Json qpd_to_json(const QuasiprobabilityDecomposition& qpd,
                 const std::string& choi_ref_prefix);

// per-item Choi JSON plus {a, sign, rank} metadata
Json channel_decomposition_to_json(const ChannelDecomposition& d);

Json estimate_report_to_json(const EstimateReport& r);

// CSV emitters; headers match the documented interfaces exactly and all
// numbers carry 17 significant digits
std::string tradeoff_curve_csv(const TradeoffCurve& curve);
std::string depth_sweep_csv(const std::vector<DepthSweepRow>& rows);
std::string budget_allocation_csv(const BudgetAllocation& alloc,
                                  const std::vector<std::string>& gate_labels);
std::string estimate_report_csv_row(const EstimateReport& r);
std::string csv_double(double v);

// run manifest of the iterative decomposition-set builder: configuration,
// per-iteration records, channel labels
Json stinespring_manifest(const StinespringConfig& cfg, const StinespringResult& result);

}  // namespace qpd
