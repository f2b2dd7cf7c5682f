#include "streammarket/dynamics.hpp"

#include "../support/test_support.hpp"

#include <doctest.h>

#include <cmath>

using namespace streammarket;
using smtest::random_instance;

namespace {

MarketParams symmetric4(double beta) {
    return MarketParams::symmetric(4, 1000.0, 1.0, 0.5, beta, 1.0, 1.0, 0.2, 1.0, 0.0, 0.1,
                                   CostSpec::quadratic(400.0));
}

}  // namespace

TEST_CASE("viewer drift") {
    const MarketParams p = MarketParams::symmetric(2, 100.0, 1.0, 0.0, 0.0, 2.0, 1.0, 0.2, 1.0,
                                                   0.0, 0.1, CostSpec::quadratic(1.0));
    Vector theta = Vector::Constant(2, 0.5);

    SUBCASE("two-streamer arithmetic") {
        Vector n(2);
        n << 60.0, 40.0;
        const Vector ndot = viewer_drift(p, MarketState(n, Vector::Zero(2), theta));
        CHECK(ndot[0] == doctest::Approx(2.0 * -10.0).epsilon(1e-14));
        CHECK(ndot[1] == doctest::Approx(2.0 * 10.0).epsilon(1e-14));
    }
    SUBCASE("fixed point") {
        const Vector n = Vector::Constant(2, 50.0);
        CHECK(viewer_drift(p, MarketState(n, Vector::Zero(2), theta)).cwiseAbs().maxCoeff() <=
              1e-13);
    }
    SUBCASE("sum identity, randomized") {
        std::mt19937_64 rng(11);
        for (int trial = 0; trial < 50; ++trial) {
            auto [params, state] = random_instance(rng);
            state.viewers *= 0.9;  // off the conservation manifold on purpose
            const double expected =
                params.viewer_speed * (params.total_viewers - state.viewers.sum());
            CHECK(viewer_drift(params, state).sum() == doctest::Approx(expected).epsilon(1e-10));
        }
    }
}

TEST_CASE("integrator config guards") {
    IntegratorConfig cfg;
    cfg.step = 0.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg.step = 2.0;
    cfg.horizon = 1.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg.horizon = 4.0;
    cfg.record_every = 0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);

    const MarketParams p = symmetric4(0.0);
    const MarketState s(Vector::Constant(4, 250.0), Vector::Zero(4), Vector::Constant(4, 0.25));
    IntegratorConfig too_coarse;
    too_coarse.step = 2.5;
    too_coarse.horizon = 10.0;
    CHECK_THROWS_AS(integrate(p, s, too_coarse), std::invalid_argument);
}

TEST_CASE("integration holds an exact steady state") {
    // beta = 0, symmetric: n = M/N and c'(q) = (1-tau) R M (1/N)(1 - 1/N).
    const MarketParams p = symmetric4(0.0);
    const double marginal = 0.8 * 1000.0 * 0.25 * 0.75;
    const Vector q = Vector::Constant(4, marginal / 400.0);
    const MarketState steady(Vector::Constant(4, 250.0), q, Vector::Constant(4, 0.25));

    IntegratorConfig cfg;
    cfg.step = 0.05;
    cfg.horizon = 5.0;
    cfg.record_every = 10;
    const Trajectory traj = integrate(p, steady, cfg);
    for (const MarketState& s : traj.states) {
        CHECK((s.viewers - steady.viewers).cwiseAbs().maxCoeff() <= 1e-9);
        CHECK((s.quality - steady.quality).cwiseAbs().maxCoeff() <= 1e-9);
    }
}

TEST_CASE("closed form at beta = 0") {
    // Identical streamers keep identical quality, so P stays 1/N and each
    // viewer count relaxes exponentially: n_i(t) = M/N + (n_i(0) - M/N) e^{-gamma t}.
    const MarketParams p = MarketParams::symmetric(2, 100.0, 1.0, 0.0, 0.0, 1.3, 1.0, 0.2, 1.0,
                                                   0.0, 0.1, CostSpec::quadratic(50.0));
    Vector n0(2);
    n0 << 60.0, 40.0;
    const MarketState initial(n0, Vector::Zero(2), Vector::Constant(2, 0.5));

    IntegratorConfig cfg;
    cfg.step = 0.01 / p.viewer_speed;
    cfg.horizon = 6.0 / p.viewer_speed;
    cfg.record_every = 25;
    const Trajectory traj = integrate(p, initial, cfg);

    double previous = n0[0];
    for (std::size_t k = 0; k < traj.times.size(); ++k) {
        const double decay = std::exp(-p.viewer_speed * traj.times[k]);
        const double expected = 50.0 + 10.0 * decay;
        CHECK(traj.states[k].viewers[0] ==
              doctest::Approx(expected).epsilon(1e-6));
        CHECK(traj.states[k].viewers[0] <= previous + 1e-12);  // monotone approach
        previous = traj.states[k].viewers[0];
    }
}

TEST_CASE("rk4 agrees with fine euler") {
    std::mt19937_64 rng(31);
    const auto [params, state] = random_instance(rng, 3, 3);
    IntegratorConfig rk4;
    rk4.step = 0.01 / params.viewer_speed;
    rk4.horizon = 2.0 / params.viewer_speed;
    rk4.record_every = 1 << 20;
    IntegratorConfig euler = rk4;
    euler.step = rk4.step / 10.0;
    euler.method = IntegratorMethod::Euler;

    const MarketState end_rk4 = integrate(params, state, rk4).final_state();
    const MarketState end_euler = integrate(params, state, euler).final_state();
    CHECK(smtest::relative_vector_error(end_euler.viewers, end_rk4.viewers) <= 1e-4);
    CHECK(smtest::relative_vector_error(end_euler.quality, end_rk4.quality) <= 1e-4);
}

TEST_CASE("viewer mass is conserved along trajectories") {
    std::mt19937_64 rng(57);
    for (int trial = 0; trial < 10; ++trial) {
        const auto [params, state] = random_instance(rng);
        IntegratorConfig cfg;
        cfg.step = 0.05 / params.viewer_speed;
        cfg.horizon = 10.0 / params.viewer_speed;
        cfg.record_every = 5;
        const Trajectory traj = integrate(params, state, cfg);
        for (const MarketState& s : traj.states)
            CHECK(std::abs(s.viewers.sum() - params.total_viewers) <=
                  1e-6 * params.total_viewers);
    }
}

TEST_CASE("order preservation between identically parameterized streamers") {
    for (double beta : {0.0, 0.004, 0.02}) {
        const MarketParams p = symmetric4(beta);
        Vector n0 = Vector::Constant(4, 250.0);
        n0[0] += 30.0;
        n0[1] -= 30.0;
        const MarketState initial(n0, Vector::Zero(4), Vector::Constant(4, 0.25));
        IntegratorConfig cfg;
        cfg.step = 0.02;
        cfg.horizon = 40.0;
        cfg.record_every = 20;
        const Trajectory traj = integrate(p, initial, cfg);
        for (const MarketState& s : traj.states) CHECK(s.viewers[0] >= s.viewers[1] - 1e-9);
    }
}

TEST_CASE("divergent schedules are reported with the last finite state") {
    const MarketParams p = symmetric4(0.0);
    const MarketState initial(Vector::Constant(4, 250.0), Vector::Zero(4),
                              Vector::Constant(4, 0.25));
    IntegratorConfig cfg;
    cfg.step = 0.1;
    cfg.horizon = 2.0;
    const AllocationSchedule schedule = [](double t) {
        Vector theta = Vector::Constant(4, 0.25);
        if (t > 1.0) theta[0] = std::numeric_limits<double>::quiet_NaN();
        return theta;
    };
    CHECK_THROWS_AS(integrate(p, initial, cfg, schedule), DivergenceError);
    try {
        integrate(p, initial, cfg, schedule);
    } catch (const DivergenceError& e) {
        CHECK(std::string(e.what()).find("divergence at t=") == 0);
        CHECK(e.time() > 1.0);
        CHECK(e.last_finite_state().viewers.allFinite());
    }
}

TEST_CASE("path dependence experiment") {
    SUBCASE("requires symmetric params") {
        Vector alpha(2), price(2);
        alpha << 1.0, 1.1;
        price << 0.0, 0.0;
        const MarketParams p(2, 100.0, alpha, price, 0.0, 1.0, 1.0, 0.2, 1.0, 0.0, 0.1,
                             CostSpec::quadratic(1.0));
        IntegratorConfig cfg;
        CHECK_THROWS_WITH_AS(path_dependence_experiment(p, 1.0, cfg), "params not symmetric",
                             std::invalid_argument);
    }
    SUBCASE("no network effect: gap decays to a tie") {
        const MarketParams p = MarketParams::symmetric(2, 100.0, 1.0, 0.0, 0.0, 1.0, 1.0, 0.2,
                                                       1.0, 0.0, 0.1, CostSpec::quadratic(50.0));
        IntegratorConfig cfg;
        cfg.step = 0.01;
        cfg.horizon = 20.0;
        cfg.record_every = 100;
        const double eps = 5.0;
        const PathDependenceReport report = path_dependence_experiment(p, eps, cfg);
        for (std::size_t k = 0; k < report.times.size(); ++k)
            CHECK(report.delta_n[k] ==
                  doctest::Approx(2.0 * eps * std::exp(-report.times[k])).epsilon(1e-6));
        CHECK_FALSE(report.crossover);
        CHECK_FALSE(report.dominant.has_value());
    }
    SUBCASE("zero seed difference stays zero") {
        const MarketParams p = symmetric4(0.01);
        IntegratorConfig cfg;
        cfg.step = 0.05;
        cfg.horizon = 10.0;
        const PathDependenceReport report = path_dependence_experiment(p, 0.0, cfg);
        for (double d : report.delta_n) CHECK(d == 0.0);
    }
    SUBCASE("above the critical strength the seeded streamer takes the market") {
        const MarketParams p = symmetric4(2.0 * 16.0 / 3000.0);
        IntegratorConfig cfg;
        cfg.step = 0.05;
        cfg.horizon = 50.0;
        cfg.record_every = 20;
        const PathDependenceReport report = path_dependence_experiment(p, 1.0, cfg);
        REQUIRE(report.dominant.has_value());
        CHECK(*report.dominant == 0);
        CHECK_FALSE(report.crossover);
        CHECK(report.trajectory.final_state().viewers[0] / p.total_viewers >= 0.99);
    }
    SUBCASE("epsilon must sit below the uniform share") {
        const MarketParams p = symmetric4(0.0);
        IntegratorConfig cfg;
        CHECK_THROWS_AS(path_dependence_experiment(p, 250.0, cfg), std::invalid_argument);
    }
}
