#include "qpd/budget.hpp"

#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "qpd/gates.hpp"

using namespace qpd;

namespace {

TradeoffCurve linear_curve(double raw_error, double gamma_opt, int points = 21) {
    TradeoffCurve c;
    for (int k = 0; k < points; ++k) {
        const double g = 1.0 + (gamma_opt - 1.0) * k / (points - 1);
        c.samples.emplace_back(g, raw_error * (1.0 - static_cast<double>(k) / (points - 1)));
    }
    c.samples.emplace_back(1.05 * gamma_opt, 0.0);
    return c;
}

// strictly convex decay, the shape real curves take near the optimum
TradeoffCurve convex_curve(double raw_error, double gamma_opt, int points = 21) {
    TradeoffCurve c;
    for (int k = 0; k < points; ++k) {
        const double t = static_cast<double>(k) / (points - 1);
        c.samples.emplace_back(1.0 + (gamma_opt - 1.0) * t, raw_error * (1.0 - t) * (1.0 - t));
    }
    c.samples.emplace_back(1.05 * gamma_opt, 0.0);
    return c;
}

ChoiMatrix depolarizing_choi(double p) {
    std::vector<ComplexMatrix> kraus;
    for (int k = 0; k < 4; ++k)
        kraus.push_back(std::sqrt(k == 0 ? 1.0 - 3.0 * p / 4.0 : p / 4.0) * oracles::pauli(k));
    return choi_from_kraus(kraus);
}

}  // namespace

TEST_CASE("curve_eval interpolates piecewise linearly") {
    TradeoffCurve c = linear_curve(0.1, 1.2, 5);
    CHECK(curve_eval(c, 1.0) == doctest::Approx(0.1));
    CHECK(curve_eval(c, 1.2) == doctest::Approx(0.0));
    CHECK(curve_eval(c, c.samples[1].first) == doctest::Approx(c.samples[1].second));
    const double mid = 0.5 * (c.samples[0].first + c.samples[1].first);
    CHECK(curve_eval(c, mid) ==
          doctest::Approx(0.5 * (c.samples[0].second + c.samples[1].second)));
    CHECK(curve_eval(c, 5.0) == doctest::Approx(c.samples.back().second));  // flat extension
    CHECK_THROWS(curve_eval(c, 0.9));

    double prev = 1e9;
    for (double g = 1.0; g <= 1.3; g += 0.01) {
        const double e = curve_eval(c, g);
        CHECK(e <= prev + 1e-12);
        prev = e;
    }
}

TEST_CASE("two identical gates split a convex-curve budget symmetrically") {
    TradeoffCurve c = convex_curve(0.05, 1.1);
    const double total = 1.08;
    BudgetAllocation a = optimize_budget({c, c}, total);
    REQUIRE(a.budgets.size() == 2);
    CHECK(std::abs(a.budgets[0] * a.budgets[1] - total) <= 1e-9);
    const double sym = std::sqrt(total);
    const double sym_objective = 2.0 * curve_eval(c, sym);
    CHECK(a.objective <= sym_objective + 1e-9);
    // strict convexity makes the symmetric point optimal up to the
    // within-piece wiggle of the sampled curve
    CHECK(a.objective >= sym_objective - 1e-5);
}

TEST_CASE("full budget yields full correction") {
    TradeoffCurve a = linear_curve(0.05, 1.1);
    TradeoffCurve b = linear_curve(0.02, 1.04);
    BudgetAllocation alloc = optimize_budget({a, b}, 1.1 * 1.04);
    CHECK(alloc.objective <= 1e-5);
    CHECK(std::abs(alloc.budgets[0] * alloc.budgets[1] - 1.1 * 1.04) <= 1e-9);
}

TEST_CASE("optimizer never loses to the uniform split or corners") {
    std::mt19937_64 rng(157);
    std::uniform_real_distribution<double> raw(0.01, 0.2), opt(1.02, 1.4);
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<TradeoffCurve> curves;
        const int n = 2 + (trial % 2);
        for (int i = 0; i < n; ++i) curves.push_back(linear_curve(raw(rng), opt(rng)));
        double log_total = 0.0;
        for (const auto& c : curves) log_total += 0.4 * std::log(c.samples.back().first / 1.05);
        const double total = std::exp(log_total);
        BudgetAllocation a = optimize_budget(curves, total);

        double prod = 1.0;
        for (double b : a.budgets) {
            prod *= b;
            CHECK(b >= 1.0 - 1e-12);
        }
        CHECK(std::abs(prod - total) <= 1e-9);

        const double unif = std::pow(total, 1.0 / n);
        double uniform_obj = 0.0;
        for (const auto& c : curves) uniform_obj += curve_eval(c, unif);
        CHECK(a.objective <= uniform_obj + 1e-9);
        for (int j = 0; j < n; ++j) {
            double corner_obj = 0.0;
            for (int i = 0; i < n; ++i)
                corner_obj += curve_eval(curves[i], i == j ? total : 1.0);
            CHECK(a.objective <= corner_obj + 1e-9);
        }
    }
}

TEST_CASE("flat curves fall back to the uniform split with a notice") {
    TradeoffCurve flat;
    for (int k = 0; k <= 10; ++k) flat.samples.emplace_back(1.0 + 0.05 * k, 0.0);
    BudgetAllocation a = optimize_budget({flat, flat}, 1.2);
    CHECK(a.uniform_fallback);
    CHECK(a.budgets[0] == doctest::Approx(a.budgets[1]));
}

TEST_CASE("steep two-qubit curve takes most of a small budget") {
    // shaped like the depolarizing Ry / CNOT pair: the single-qubit gate is
    // an order of magnitude cleaner and exhausts at gamma ~ 1.003
    TradeoffCurve ry = linear_curve(0.003, 1.003);
    TradeoffCurve cnot = linear_curve(0.0375, 1.0385);
    const double total = 1.02;
    BudgetAllocation a = optimize_budget({ry, cnot}, total);
    CHECK(std::log(a.budgets[1]) >= 0.8 * std::log(total));
}

TEST_CASE("composed approximate maps obey the additive error bound") {
    // two TPCP-constrained approximate decompositions of noisy 1-qubit gates
    std::mt19937_64 rng(163);
    const double p = 0.1;
    ChoiMatrix dep = depolarizing_choi(p);
    ComplexMatrix u1 = oracles::random_unitary(2, rng);
    ComplexMatrix u2 = oracles::random_unitary(2, rng);

    auto build_set = [&](const ComplexMatrix& u) {
        ChannelSet set;
        for (int k = 0; k < 4; ++k)
            set.emplace_back("P" + std::to_string(k),
                             compose(dep, choi_from_unitary(oracles::pauli(k) * u)));
        return set;
    };
    ApproxQpdOptions flags;
    flags.enforce_cp = true;
    flags.enforce_tp = true;
    flags.gamma_budget = 1.05;
    auto q1 = approximate_qpd(choi_from_unitary(u1), build_set(u1), flags);
    auto q2 = approximate_qpd(choi_from_unitary(u2), build_set(u2), flags);

    // enforced physicality of the recombinations
    for (const auto& q : {q1, q2}) {
        TpcpVerdict v = is_tpcp(q.recombined());
        CHECK(v.min_eigenvalue >= -1e-7);
        CHECK(v.tp_deviation <= 1e-6);
    }

    ChoiMatrix composed_approx = compose(q2.recombined(), q1.recombined());
    ChoiMatrix composed_ideal =
        compose(choi_from_unitary(u2), choi_from_unitary(u1));
    ChoiMatrix diff = composed_ideal;
    diff.matrix -= composed_approx.matrix;
    CHECK(diamond_norm(diff) <=
          q1.residual_diamond_error + q2.residual_diamond_error + 1e-6);
}
