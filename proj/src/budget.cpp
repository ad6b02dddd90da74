#include "qpd/budget.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace qpd {

namespace {

// Euclidean projection onto { x >= 0, sum x = total }
Eigen::VectorXd project_simplex(Eigen::VectorXd x, double total) {
    const Eigen::Index n = x.size();
    Eigen::VectorXd sorted = x;
    std::sort(sorted.data(), sorted.data() + n, std::greater<double>());
    double cumulative = 0.0;
    double theta = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) {
        cumulative += sorted(k);
        const double candidate = (cumulative - total) / static_cast<double>(k + 1);
        if (candidate < sorted(k)) theta = candidate;
    }
    for (Eigen::Index k = 0; k < n; ++k) x(k) = std::max(0.0, x(k) - theta);
    // exact sum restoration over the positive entries
    const double drift = total - x.sum();
    if (drift != 0.0) {
        int pos = 0;
        for (Eigen::Index k = 0; k < n; ++k)
            if (x(k) > 0.0) ++pos;
        if (pos > 0)
            for (Eigen::Index k = 0; k < n; ++k)
                if (x(k) > 0.0) x(k) = std::max(0.0, x(k) + drift / pos);
    }
    return x;
}

}  // namespace

double curve_eval(const TradeoffCurve& curve, double gamma) {
    if (curve.samples.empty()) throw std::invalid_argument("curve_eval: empty curve");
    if (gamma < curve.samples.front().first - 1e-12)
        throw std::invalid_argument("curve_eval: gamma below the sampled range");
    if (gamma >= curve.samples.back().first) return curve.samples.back().second;
    for (size_t k = 1; k < curve.samples.size(); ++k) {
        const auto [g0, e0] = curve.samples[k - 1];
        const auto [g1, e1] = curve.samples[k];
        if (gamma <= g1) {
            if (g1 <= g0) return e1;
            const double t = (gamma - g0) / (g1 - g0);
            return e0 + t * (e1 - e0);
        }
    }
    return curve.samples.back().second;
}

BudgetAllocation optimize_budget(const std::vector<TradeoffCurve>& curves, double gamma_total,
                                 const BudgetOptions& opts) {
    const int n = static_cast<int>(curves.size());
    if (n == 0) throw std::invalid_argument("optimize_budget: no curves");
    if (gamma_total < 1.0) throw std::invalid_argument("optimize_budget: gamma_total must be >= 1");
    for (const auto& c : curves) {
        if (c.samples.empty()) throw std::invalid_argument("optimize_budget: empty curve");
        double best = c.samples.front().second;
        for (const auto& [g, e] : c.samples) best = std::min(best, e);
        if (best > 1e-6)
            throw std::invalid_argument(
                "optimize_budget: curve never reaches a fully corrected point");
    }

    BudgetAllocation out;
    out.gamma_total = gamma_total;

    // caps: cheapest fully-corrected budget per gate
    std::vector<double> cap(n);
    double log_cap_sum = 0.0;
    for (int i = 0; i < n; ++i) {
        cap[i] = curves[i].samples.back().first;
        for (const auto& [g, e] : curves[i].samples)
            if (e <= 1e-6) {
                cap[i] = g;
                break;
            }
        log_cap_sum += std::log(cap[i]);
    }
    const double total_log = std::log(gamma_total);
    if (total_log >= log_cap_sum) {
        // every gate fully corrected; spread the leftover uniformly (this also
        // covers degenerate flat curves, whose caps sit at gamma = 1)
        out.budgets.assign(cap.begin(), cap.end());
        const double extra = (total_log - log_cap_sum) / n;
        for (double& b : out.budgets) b *= std::exp(extra);
        for (int i = 0; i < n; ++i) {
            out.error_contributions.push_back(curve_eval(curves[i], out.budgets[i]));
            out.objective += out.error_contributions.back();
        }
        out.uniform_fallback = log_cap_sum == 0.0;
        return out;
    }

    auto objective = [&](const Eigen::VectorXd& x) {
        double f = 0.0;
        for (int i = 0; i < n; ++i) f += curve_eval(curves[i], std::exp(x(i)));
        return f;
    };
    auto gradient = [&](const Eigen::VectorXd& x) {
        Eigen::VectorXd g(n);
        const double h = 1e-7 * std::max(1.0, total_log);
        for (int i = 0; i < n; ++i) {
            Eigen::VectorXd xp = x, xm = x;
            xp(i) += h;
            xm(i) = std::max(0.0, xm(i) - h);
            const double denom = xp(i) - xm(i);
            g(i) = denom > 0 ? (objective(xp) - objective(xm)) / denom : 0.0;
        }
        return g;
    };

    std::vector<Eigen::VectorXd> starts;
    starts.push_back(Eigen::VectorXd::Constant(n, total_log / n));  // uniform split
    for (int j = 0; j < n; ++j) {
        Eigen::VectorXd corner = Eigen::VectorXd::Zero(n);
        corner(j) = total_log;
        starts.push_back(corner);
    }
    std::mt19937_64 rng(opts.seed);
    std::exponential_distribution<double> expo(1.0);
    while (static_cast<int>(starts.size()) < std::max(opts.starts, n + 1)) {
        Eigen::VectorXd r(n);
        for (int i = 0; i < n; ++i) r(i) = expo(rng);
        starts.push_back(total_log * r / r.sum());
    }

    struct Run {
        Eigen::VectorXd x;
        double f = 0.0;
    };
    std::vector<Run> runs(starts.size());
    parallel_for(opts.par, static_cast<std::int64_t>(starts.size()), [&](std::int64_t s) {
        Eigen::VectorXd x = project_simplex(starts[s], total_log);
        double fx = objective(x);
        double step = 0.25 * std::max(total_log, 1e-6);
        for (int it = 0; it < opts.max_iterations; ++it) {
            Eigen::VectorXd g = gradient(x);
            bool improved = false;
            double local = step;
            for (int bt = 0; bt < 20; ++bt) {
                Eigen::VectorXd trial = project_simplex(x - local * g, total_log);
                const double ft = objective(trial);
                if (ft < fx - 1e-15) {
                    x = trial;
                    fx = ft;
                    improved = true;
                    step = local * 1.5;
                    break;
                }
                local *= 0.5;
            }
            if (!improved) break;
        }
        runs[s] = {x, fx};
    });

    int best = 0;
    for (size_t s = 1; s < runs.size(); ++s)
        if (runs[s].f < runs[best].f) best = static_cast<int>(s);

    Eigen::VectorXd x = runs[best].x;
    // exact product constraint
    x = project_simplex(x, total_log);
    out.objective = objective(x);
    for (int i = 0; i < n; ++i) {
        out.budgets.push_back(std::exp(x(i)));
        out.error_contributions.push_back(curve_eval(curves[i], out.budgets[i]));
    }
    return out;
}

}  // namespace qpd
