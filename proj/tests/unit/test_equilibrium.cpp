#include "streammarket/equilibrium.hpp"

#include "streammarket/dynamics.hpp"

#include "../support/test_support.hpp"

#include <doctest.h>

#include <cmath>

using namespace streammarket;

namespace {

MarketParams symmetric(int n, double m, double beta, double kappa = 400.0) {
    return MarketParams::symmetric(n, m, 1.0, 0.5, beta, 1.0, 1.0, 0.2, 1.0, 0.0, 0.1,
                                   CostSpec::quadratic(kappa));
}

MarketState uniform_start(const MarketParams& p) {
    const int n = p.n_streamers;
    return MarketState(Vector::Constant(n, p.total_viewers / n), Vector::Zero(n),
                       Vector::Constant(n, 1.0 / n));
}

}  // namespace

TEST_CASE("quality best response") {
    SUBCASE("marginal revenue 80 at P = 1/2 with unit quadratic cost") {
        const MarketParams p = MarketParams::symmetric(2, 100.0, 1.0, 0.0, 0.0, 1.0, 1.0, 0.2,
                                                       1.0, 0.0, 0.1, CostSpec::quadratic(1.0));
        // Opponent quality pinned at 20 keeps P exactly 1/2 at the root.
        Vector q(2);
        q << 0.0, 20.0;
        const MarketState s(Vector::Constant(2, 50.0), q, Vector::Constant(2, 0.5));
        const double root = quality_best_response(p, s, 0);
        CHECK(root == doctest::Approx(20.0).epsilon(1e-10));

        const auto p_at = [&](double quality) {
            Vector varied = q;
            varied[0] = quality;
            return choice_probabilities(
                utilities(p, MarketState::unchecked(s.viewers, varied, s.allocation)))[0];
        };
        const double prob = p_at(root);
        CHECK(std::abs(p.cost.derivative(root) - 80.0 * prob * (1.0 - prob)) <= 1e-9);

        // Independent oracle: grid-search the profit in quality.
        double best_q = 0.0, best_profit = -1e300;
        for (double quality = 0.0; quality <= 40.0; quality += 1e-4) {
            const double profit = 80.0 * p_at(quality) - p.cost.value(quality);
            if (profit > best_profit) {
                best_profit = profit;
                best_q = quality;
            }
        }
        CHECK(std::abs(best_q - root) <= 1e-3);
    }
    SUBCASE("zero attractiveness produces zero quality") {
        Vector alpha(2), price(2);
        alpha << 0.0, 1.0;
        price << 0.0, 0.0;
        const MarketParams p(2, 100.0, alpha, price, 0.0, 1.0, 1.0, 0.2, 1.0, 0.0, 0.1,
                             CostSpec::quadratic(1.0));
        const MarketState s(Vector::Constant(2, 50.0), Vector::Zero(2), Vector::Constant(2, 0.5));
        CHECK(quality_best_response(p, s, 0) == 0.0);
    }
    SUBCASE("doubling the cost coefficient halves the symmetric quality") {
        const MarketParams p1 = symmetric(2, 1000.0, 0.0, 100.0);
        const MarketParams p2 = symmetric(2, 1000.0, 0.0, 200.0);
        SteadyStateOptions opts;
        const double q1 = solve_steady_state(p1, uniform_start(p1), opts).state.quality[0];
        const double q2 = solve_steady_state(p2, uniform_start(p2), opts).state.quality[0];
        CHECK(q1 == doctest::Approx(2.0 * q2).epsilon(1e-8));
    }
}

TEST_CASE("steady state solve, closed form at beta = 0") {
    const MarketParams p = symmetric(4, 1000.0, 0.0);
    SteadyStateOptions opts;
    opts.tol_n = 1e-10;
    opts.tol_q = 1e-10;
    const EquilibriumReport report = solve_steady_state(p, uniform_start(p), opts);
    REQUIRE(report.converged);
    CHECK(report.residual_n <= 1e-10);
    CHECK(report.residual_q <= 1e-10);
    const double q_star = 0.8 * 1000.0 * 0.25 * 0.75 / 400.0;
    for (int i = 0; i < 4; ++i) {
        CHECK(report.state.viewers[i] == doctest::Approx(250.0).epsilon(1e-10));
        CHECK(report.state.quality[i] == doctest::Approx(q_star).epsilon(1e-8));
    }
    CHECK(std::abs(report.state.viewers.sum() - 1000.0) <= 1e-9 * 1000.0);
}

TEST_CASE("two starts agree below the critical strength") {
    const MarketParams p = symmetric(2, 1000.0, 0.0);
    SteadyStateOptions opts;
    Vector a(2), b(2);
    a << 600.0, 400.0;
    b << 400.0, 600.0;
    const Vector zero_q = Vector::Zero(2);
    const Vector theta = Vector::Constant(2, 0.5);
    const EquilibriumReport from_a = solve_steady_state(p, MarketState(a, zero_q, theta), opts);
    const EquilibriumReport from_b = solve_steady_state(p, MarketState(b, zero_q, theta), opts);
    REQUIRE(from_a.converged);
    REQUIRE(from_b.converged);
    CHECK((from_a.state.viewers - from_b.state.viewers).cwiseAbs().maxCoeff() <= 1e-8);
    CHECK(from_a.state.viewers[0] == doctest::Approx(500.0).epsilon(1e-10));
}

TEST_CASE("multi-start uniqueness probe at half the critical strength") {
    const int n = 4;
    const double beta_star = 16.0 / 3000.0;
    const MarketParams p = symmetric(n, 1000.0, 0.5 * beta_star);
    SteadyStateOptions opts;
    opts.tol_n = 1e-9;
    opts.tol_q = 1e-9;
    const auto probe = basin_probe(p, Vector::Constant(n, 0.25), 10, 515, opts);
    REQUIRE(probe.size() == 10);
    const Vector reference = probe.front().second.viewers;
    for (const auto& [start, attained] : probe) {
        CHECK((attained.viewers - reference).cwiseAbs().maxCoeff() <= 1e-6 * p.total_viewers);
        CHECK(std::abs(attained.viewers.sum() - 1000.0) <= 1e-9 * 1000.0);
    }
}

TEST_CASE("far above critical, asymmetric starts land on a concentrated point") {
    const double beta_star = 16.0 / 3000.0;
    const MarketParams p = symmetric(4, 1000.0, 4.0 * beta_star);
    Vector n0(4);
    n0 << 700.0, 100.0, 100.0, 100.0;
    const MarketState start(n0, Vector::Zero(4), Vector::Constant(4, 0.25));
    SteadyStateOptions opts;
    const EquilibriumReport solved = solve_steady_state(p, start, opts);
    REQUIRE(solved.converged);
    CHECK(solved.state.viewers.maxCoeff() / p.total_viewers > 0.99);
    CHECK(solved.state.viewers[0] == solved.state.viewers.maxCoeff());

    // Simulate-then-polish oracle: the flow from the same start reaches the
    // same attractor.
    IntegratorConfig cfg;
    cfg.step = 0.05;
    cfg.horizon = 60.0;
    cfg.record_every = 1 << 20;
    const Trajectory traj = integrate(p, start, cfg);
    const EquilibriumReport polished = solve_steady_state(p, traj.final_state(), opts);
    REQUIRE(polished.converged);
    CHECK((polished.state.viewers - solved.state.viewers).cwiseAbs().maxCoeff() <=
          1e-6 * p.total_viewers);
}

TEST_CASE("raising attractiveness raises steady-state viewers") {
    Vector alpha(3), price(3);
    alpha << 1.0, 1.0, 1.0;
    price << 0.5, 0.5, 0.5;
    const MarketParams base(3, 900.0, alpha, price, 0.001, 1.0, 1.0, 0.2, 1.0, 0.0, 0.1,
                            CostSpec::quadratic(300.0));
    alpha[0] = 1.2;
    const MarketParams raised(3, 900.0, alpha, price, 0.001, 1.0, 1.0, 0.2, 1.0, 0.0, 0.1,
                              CostSpec::quadratic(300.0));
    SteadyStateOptions opts;
    const MarketState start(Vector::Constant(3, 300.0), Vector::Zero(3),
                            Vector::Constant(3, 1.0 / 3));
    const EquilibriumReport before = solve_steady_state(base, start, opts);
    const EquilibriumReport after = solve_steady_state(raised, start, opts);
    REQUIRE(before.converged);
    REQUIRE(after.converged);
    CHECK(after.state.viewers[0] >= before.state.viewers[0]);
}

TEST_CASE("iteration budget exhaustion reports rather than throws") {
    const MarketParams p = symmetric(4, 1000.0, 0.0);
    SteadyStateOptions opts;
    opts.max_iter = 2;
    opts.tol_n = 1e-12;
    opts.tol_q = 1e-12;
    const EquilibriumReport report = solve_steady_state(p, uniform_start(p), opts);
    CHECK_FALSE(report.converged);
    CHECK(report.iterations == 2);
}

TEST_CASE("frozen quality holds the start quality") {
    const MarketParams p = symmetric(4, 1000.0, 0.001);
    SteadyStateOptions opts;
    opts.freeze_quality = true;
    MarketState start = uniform_start(p);
    start.quality = Vector::Constant(4, 1.5);
    const EquilibriumReport report = solve_steady_state(p, start, opts);
    REQUIRE(report.converged);
    CHECK((report.state.quality - start.quality).cwiseAbs().maxCoeff() == 0.0);
    CHECK(report.residual_q == 0.0);
}
