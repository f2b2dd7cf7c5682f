#include "streammarket/market.hpp"

#include "../support/test_support.hpp"

#include <doctest.h>

#include <cmath>

using namespace streammarket;
using smtest::random_instance;

namespace {

MarketParams two_streamer(double beta = 0.0, double phi = 0.0) {
    return MarketParams(2, 100.0, Vector::Constant(2, 1.0), Vector::Zero(2), beta, 1.0, 1.0,
                        0.2, 1.0, phi, 0.1, CostSpec::quadratic(1.0));
}

}  // namespace

TEST_CASE("cost curves are strictly convex with c(0) = 0") {
    const CostSpec quad = CostSpec::quadratic(2.0);
    const CostSpec cub = CostSpec::cubic(1.5, 0.25);
    CHECK(quad.value(0.0) == 0.0);
    CHECK(cub.value(0.0) == 0.0);
    for (double q = 0.125; q < 8.0; q *= 2.0) {
        CHECK(quad.derivative(q) > 0.0);
        CHECK(quad.second_derivative(q) > 0.0);
        CHECK(cub.derivative(q) > 0.0);
        CHECK(cub.second_derivative(q) > 0.0);
    }
    CHECK(quad.third_derivative(3.0) == 0.0);
    CHECK(cub.third_derivative(3.0) == doctest::Approx(1.5));
    CHECK(quad.value(3.0) == doctest::Approx(9.0));
    CHECK(cub.derivative(2.0) == doctest::Approx(2.0 * 1.5 * 2.0 + 3.0 * 0.25 * 4.0));

    CHECK_THROWS_AS(CostSpec::quadratic(0.0), std::invalid_argument);
    CHECK_THROWS_AS(CostSpec::cubic(-1.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(CostSpec::cubic(1.0, 0.0), std::invalid_argument);
}

TEST_CASE("params constructor rejects bad fields by name") {
    const Vector ones = Vector::Constant(2, 1.0);
    CHECK_THROWS_WITH_AS(MarketParams(2, 100.0, ones, ones, -0.1, 1.0, 1.0, 0.2, 1.0, 0.0, 0.1,
                                      CostSpec::quadratic(1.0)),
                         "network_effect must be >= 0", std::invalid_argument);
    CHECK_THROWS_WITH_AS(MarketParams(2, 100.0, ones, ones, 0.0, 1.0, 1.0, 1.0, 1.0, 0.0, 0.1,
                                      CostSpec::quadratic(1.0)),
                         "platform_cut must be in [0, 1)", std::invalid_argument);
    CHECK_THROWS_AS(MarketParams(3, 100.0, ones, ones, 0.0, 1.0, 1.0, 0.2, 1.0, 0.0, 0.1,
                                 CostSpec::quadratic(1.0)),
                    std::invalid_argument);
    CHECK_THROWS_AS(MarketParams(2, -5.0, ones, ones, 0.0, 1.0, 1.0, 0.2, 1.0, 0.0, 0.1,
                                 CostSpec::quadratic(1.0)),
                    std::invalid_argument);
}

TEST_CASE("state invariants") {
    Vector n(2), q(2), theta(2);
    n << 60.0, 40.0;
    q << 1.0, 2.0;
    theta << 0.6, 0.5;
    CHECK_THROWS_WITH_AS(MarketState(n, q, theta), "allocation does not sum to 1",
                         std::invalid_argument);
    theta << 0.6, 0.4;
    CHECK_NOTHROW(MarketState(n, q, theta));
    n[0] = -1.0;
    CHECK_THROWS_AS(MarketState(n, q, theta), std::invalid_argument);
}

TEST_CASE("utilities formula") {
    SUBCASE("all terms vanish") {
        const MarketParams p = two_streamer();
        Vector theta(2);
        theta << 0.5, 0.5;
        const MarketState s(Vector::Zero(2), Vector::Zero(2), theta);
        CHECK(utilities(p, s).isZero(0.0));
    }
    SUBCASE("direct arithmetic") {
        Vector alpha(2), price(2);
        alpha << 2.0, 1.0;
        price << 1.0, 0.0;
        const MarketParams p(2, 150.0, alpha, price, 0.01, 1.0, 1.0, 0.2, 1.0, 0.0, 0.1,
                             CostSpec::quadratic(1.0));
        Vector n(2), q(2), theta(2);
        n << 100.0, 50.0;
        q << 3.0, 1.0;
        theta << 0.5, 0.5;
        const UtilityVector v = utilities(p, MarketState(n, q, theta));
        CHECK(v[0] == doctest::Approx(6.0).epsilon(1e-14));
        CHECK(v[1] == doctest::Approx(1.5).epsilon(1e-14));
    }
    SUBCASE("allocation term only") {
        const MarketParams p = two_streamer(0.0, 0.5);
        Vector theta(2);
        theta << 1.0, 0.0;
        const UtilityVector v = utilities(p, MarketState(Vector::Zero(2), Vector::Zero(2), theta));
        CHECK(v[0] == doctest::Approx(0.5).epsilon(1e-14));
        CHECK(v[1] == 0.0);
    }
}

TEST_CASE("choice probabilities") {
    SUBCASE("symmetry") {
        const Vector p = choice_probabilities(Vector::Zero(3));
        for (int i = 0; i < 3; ++i) CHECK(p[i] == doctest::Approx(1.0 / 3).epsilon(1e-14));
    }
    SUBCASE("analytic two-entry case") {
        Vector v(2);
        v << std::log(2.0), 0.0;
        const Vector p = choice_probabilities(v);
        CHECK(p[0] == doctest::Approx(2.0 / 3).epsilon(1e-14));
        CHECK(p[1] == doctest::Approx(1.0 / 3).epsilon(1e-14));
    }
    SUBCASE("large utilities do not overflow") {
        Vector v(3);
        v << 1000.0, 1000.0, 999.0;
        const Vector p = choice_probabilities(v);
        CHECK(p.allFinite());
        CHECK(p[0] == doctest::Approx(p[1]).epsilon(1e-14));
        CHECK(p[2] < p[0]);
        CHECK(p.sum() == doctest::Approx(1.0).epsilon(1e-14));
    }
    SUBCASE("non-finite input rejected") {
        Vector v(2);
        v << 1.0, std::numeric_limits<double>::quiet_NaN();
        CHECK_THROWS_WITH_AS(choice_probabilities(v), "invalid utility", std::domain_error);
        v[1] = std::numeric_limits<double>::infinity();
        CHECK_THROWS_AS(log_sum_exp(v), std::domain_error);
    }
    SUBCASE("shift invariance and bounds, randomized") {
        std::mt19937_64 rng(7101);
        std::uniform_real_distribution<double> shift(-50.0, 50.0);
        for (int trial = 0; trial < 200; ++trial) {
            const auto [params, state] = random_instance(rng);
            const Vector v = utilities(params, state);
            const Vector p = choice_probabilities(v);
            const Vector shifted =
                choice_probabilities(v + Vector::Constant(v.size(), shift(rng)));
            CHECK((p - shifted).cwiseAbs().maxCoeff() <= 1e-12);
            CHECK(p.sum() == doctest::Approx(1.0).epsilon(1e-12));
            CHECK(p.minCoeff() > 0.0);
            CHECK(p.maxCoeff() < 1.0);
        }
    }
}

TEST_CASE("probability jacobians") {
    SUBCASE("two symmetric streamers, network channel") {
        const MarketParams p = two_streamer(0.01);
        Vector n(2), theta(2);
        n << 50.0, 50.0;
        theta << 0.5, 0.5;
        const MarketState s(n, Vector::Zero(2), theta);
        const ProbabilityJacobians jac = probability_jacobians(p, s);
        CHECK(jac.dn(0, 0) == doctest::Approx(0.0025).epsilon(1e-12));
        CHECK(jac.dn(0, 1) == doctest::Approx(-0.0025).epsilon(1e-12));

        // Independent route: finite differences of the probabilities.
        const auto probs_at = [&](const Vector& viewers) {
            return choice_probabilities(utilities(p, MarketState::unchecked(viewers, s.quality,
                                                                            s.allocation)));
        };
        const Vector fd = smtest::central_difference(probs_at, n, 0, 1e-6);
        CHECK(std::abs(jac.dn(0, 0) - fd[0]) <= 1e-8);
        CHECK(std::abs(jac.dn(1, 0) - fd[1]) <= 1e-8);
    }
    SUBCASE("no network effect, no viewer channel") {
        const MarketParams p = two_streamer(0.0);
        Vector theta(2);
        theta << 0.5, 0.5;
        const MarketState s(Vector::Constant(2, 50.0), Vector::Zero(2), theta);
        CHECK(probability_jacobians(p, s).dn.isZero(0.0));
    }
    SUBCASE("columns sum to zero and match finite differences, randomized") {
        std::mt19937_64 rng(20260810);
        for (int trial = 0; trial < 120; ++trial) {
            const auto [params, state] = random_instance(rng);
            const ProbabilityJacobians jac = probability_jacobians(params, state);
            CHECK(jac.dn.colwise().sum().cwiseAbs().maxCoeff() <= 1e-12);
            CHECK(jac.dq.colwise().sum().cwiseAbs().maxCoeff() <= 1e-12);
            CHECK(jac.dtheta.colwise().sum().cwiseAbs().maxCoeff() <= 1e-12);

            const auto probs_n = [&](const Vector& x) {
                return choice_probabilities(utilities(
                    params, MarketState::unchecked(x, state.quality, state.allocation)));
            };
            const auto probs_q = [&](const Vector& x) {
                return choice_probabilities(utilities(
                    params, MarketState::unchecked(state.viewers, x, state.allocation)));
            };
            const auto probs_t = [&](const Vector& x) {
                return choice_probabilities(utilities(
                    params, MarketState::unchecked(state.viewers, state.quality, x)));
            };
            CHECK(smtest::relative_matrix_error(jac.dn, smtest::fd_jacobian(probs_n, state.viewers)) <=
                  1e-6);
            CHECK(smtest::relative_matrix_error(jac.dq, smtest::fd_jacobian(probs_q, state.quality)) <=
                  1e-6);
            CHECK(smtest::relative_matrix_error(
                      jac.dtheta, smtest::fd_jacobian(probs_t, state.allocation)) <= 1e-6);
        }
    }
    SUBCASE("monotone responses") {
        std::mt19937_64 rng(99);
        const auto [params, base] = random_instance(rng);
        const Vector p0 = choice_probabilities(utilities(params, base));

        Vector q_up = base.quality;
        q_up[0] += 0.25;
        const Vector p_q = choice_probabilities(
            utilities(params, MarketState::unchecked(base.viewers, q_up, base.allocation)));
        CHECK(p_q[0] > p0[0]);

        Vector n_up = base.viewers;
        n_up[1] += 5.0;
        const Vector p_n = choice_probabilities(
            utilities(params, MarketState::unchecked(n_up, base.quality, base.allocation)));
        if (params.network_effect > 0.0) CHECK(p_n[0] < p0[0]);
    }
}

TEST_CASE("streamer profit") {
    const MarketParams p = two_streamer();
    Vector n(2), q(2), theta(2);
    n << 100.0, 0.0;
    q << 0.0, 0.0;
    theta << 0.5, 0.5;
    CHECK(streamer_profit(p, MarketState(n, q, theta), 0) == doctest::Approx(80.0));
    q[0] = 10.0;
    CHECK(streamer_profit(p, MarketState(n, q, theta), 0) == doctest::Approx(30.0));
    CHECK_THROWS_AS(streamer_profit(p, MarketState(n, q, theta), 2), std::out_of_range);
    CHECK_THROWS_AS(streamer_profit(p, MarketState(n, q, theta), -1), std::out_of_range);
}

TEST_CASE("quality drift") {
    const MarketParams p = two_streamer();  // (1-tau) R M = 80
    Vector theta(2);
    theta << 0.5, 0.5;

    SUBCASE("first-order condition is the fixed point") {
        // Symmetric state with P = 1/2: marginal revenue 80 * 1/4 = 20 = c'(q).
        const MarketState s(Vector::Constant(2, 50.0), Vector::Constant(2, 20.0), theta);
        CHECK(quality_drift(p, s).cwiseAbs().maxCoeff() <= 1e-12);
    }
    SUBCASE("zero quality climbs at the marginal-revenue rate") {
        MarketParams fast = p;
        fast.quality_speed = 2.0;
        const MarketState s(Vector::Constant(2, 50.0), Vector::Zero(2), theta);
        const Vector qdot = quality_drift(fast, s);
        CHECK(qdot[0] == doctest::Approx(40.0).epsilon(1e-12));

        // Sign cross-check: grid the profit around q = 0 with viewers at M P(q).
        const auto profit_at = [&](double q) {
            Vector quality = s.quality;
            quality[0] = q;
            const MarketState varied = MarketState::unchecked(s.viewers, quality, theta);
            const Vector prob = choice_probabilities(utilities(fast, varied));
            return 0.8 * fast.total_viewers * prob[0] - fast.cost.value(q);
        };
        CHECK(profit_at(1e-3) > profit_at(0.0));
    }
    SUBCASE("oversized quality decays") {
        const MarketState s(Vector::Constant(2, 50.0), Vector::Constant(2, 500.0), theta);
        CHECK(quality_drift(p, s).maxCoeff() < 0.0);
    }
    SUBCASE("normalized variant rescales by curvature") {
        std::mt19937_64 rng(4242);
        const auto [params, state] = random_instance(rng);
        const Vector plain = quality_drift(params, state);
        const Vector normalized = quality_drift(params, state, QualityLaw::NewtonNormalized);
        for (int i = 0; i < params.n_streamers; ++i) {
            const double c2 = params.cost.second_derivative(state.quality[i]);
            CHECK(normalized[i] == doctest::Approx(plain[i] / c2).epsilon(1e-12));
        }
    }
}
