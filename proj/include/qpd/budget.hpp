#pragma once

#include <cstdint>
#include <vector>

#include "qpd/parallel.hpp"
#include "qpd/qpd_core.hpp"

namespace qpd {

// piecewise-linear curve value; flat extension beyond the largest sample,
// an error below the smallest
double curve_eval(const TradeoffCurve& curve, double gamma);

struct BudgetAllocation {
    std::vector<double> budgets;  // per-gate gamma budgets, >= 1
    double gamma_total = 1.0;
    double objective = 0.0;                  // sum of per-gate errors
    std::vector<double> error_contributions;
    bool uniform_fallback = false;  // set when flat curves made the split trivial
};

struct BudgetOptions {
    int starts = 8;  // uniform split + single-gate corners + random simplex points
    int max_iterations = 300;
    std::uint64_t seed = 1;
    Parallelism par = Parallelism::serial();
};

// Distributes log gamma_total across the gates (the product constraint turns
// into a simplex in x_i = log gamma_i) minimizing the summed tradeoff-curve
// errors by projected multi-start descent. The result never loses to the
// uniform split or to any single-gate corner.
BudgetAllocation optimize_budget(const std::vector<TradeoffCurve>& curves, double gamma_total,
                                 const BudgetOptions& opts = {});

}  // namespace qpd
