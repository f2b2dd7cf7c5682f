#include "streammarket/welfare.hpp"

#include "streammarket/dynamics.hpp"
#include "streammarket/stability.hpp"

#include <cmath>

namespace streammarket {

std::pair<Vector, double> shares_and_hhi(const MarketState& state, double total_viewers) {
    const double sum = state.viewers.sum();
    if (std::abs(sum - total_viewers) > 1e-3 * total_viewers)
        throw std::invalid_argument("viewer conservation violated: sum n_i != M");
    Vector shares = state.viewers / total_viewers;
    const double hhi = shares.squaredNorm();
    return {std::move(shares), hhi};
}

double consumer_surplus(const MarketParams& params, const MarketState& state) {
    return params.total_viewers * log_sum_exp(utilities(params, state));
}

double producer_surplus(const MarketParams& params, const MarketState& state) {
    double total = 0.0;
    for (int i = 0; i < params.n_streamers; ++i) total += streamer_profit(params, state, i);
    return total;
}

double platform_profit(const MarketParams& params, const MarketState& state) {
    return params.platform_cut * params.revenue_rate * state.viewers.sum();
}

WelfareBreakdown welfare_breakdown(const MarketParams& params, const MarketState& state) {
    WelfareBreakdown w;
    w.consumer_surplus = consumer_surplus(params, state);
    w.producer_surplus = producer_surplus(params, state);
    w.platform_profit = platform_profit(params, state);
    w.total = w.consumer_surplus + w.producer_surplus + w.platform_profit;
    auto [shares, hhi] = shares_and_hhi(state, params.total_viewers);
    w.shares = std::move(shares);
    w.hhi = hhi;
    w.head_effect = w.shares.maxCoeff() >= kHeadEffectShareThreshold;
    return w;
}

Vector welfare_viewer_gradient(const MarketParams& params, const MarketState& state) {
    const Vector p = choice_probabilities(utilities(params, state));
    return (params.total_viewers * params.network_effect * p).array() + params.revenue_rate;
}

Vector welfare_quality_gradient(const MarketParams& params, const MarketState& state) {
    const Vector p = choice_probabilities(utilities(params, state));
    Vector g = params.total_viewers * params.attractiveness.cwiseProduct(p);
    for (int i = 0; i < params.n_streamers; ++i) g[i] -= params.cost.derivative(state.quality[i]);
    return g;
}

Vector welfare_allocation_gradient(const MarketParams& params, const MarketState& state) {
    const Vector p = choice_probabilities(utilities(params, state));
    const ProbabilityJacobians jac = probability_jacobians(params, state);
    const double m = params.total_viewers;
    const Vector consumer = m * params.traffic_sensitivity * p;
    const Vector column_sums = jac.dtheta.colwise().sum();
    const Vector producer = (1.0 - params.platform_cut) * params.revenue_rate * m * column_sums;
    const Vector platform = params.platform_cut * params.revenue_rate * m * column_sums;
    return consumer + producer + platform;
}

HeadEffectComparison head_effect_comparison(const MarketParams& params,
                                            const HeadEffectComparisonOptions& opts) {
    if (!params.is_symmetric()) throw std::invalid_argument("params not symmetric");
    const int n = params.n_streamers;
    if (n < 2) throw std::invalid_argument("comparison needs at least two streamers");
    const double m = params.total_viewers;

    CriticalBetaOptions cb;
    cb.quality_frozen = true;
    cb.bracket = {0.0, 8.0 * n * n / (m * (n - 1))};
    cb.tol_beta = 1e-9;
    const CriticalBetaReport critical = critical_beta(params, cb);

    HeadEffectComparison out;
    out.beta_star = critical.beta_star;
    out.beta_high = 2.0 * critical.beta_star;
    out.beta_low = 0.5 * critical.beta_star;

    const Vector theta = Vector::Constant(n, 1.0 / n);
    const MarketParams high = params.with_network_effect(out.beta_high);
    const MarketParams low = params.with_network_effect(out.beta_low);

    // Concentration develops dynamically from a nudged symmetric start, then
    // the endpoint is polished into an exact fixed point.
    Vector n0 = Vector::Constant(n, m / n);
    n0[0] += opts.perturbation * m;
    for (int i = 1; i < n; ++i) n0[i] -= opts.perturbation * m / (n - 1);
    IntegratorConfig cfg;
    cfg.step = 0.05 / params.viewer_speed;
    cfg.horizon = opts.horizon_over_gamma / params.viewer_speed;
    cfg.record_every = 1000000;  // endpoint only
    const Trajectory path =
        integrate(high, MarketState::unchecked(n0, Vector::Zero(n), theta), cfg);
    const EquilibriumReport concentrated =
        solve_steady_state(high, path.final_state(), opts.solve);

    const MarketState symmetric_start =
        MarketState::unchecked(Vector::Constant(n, m / n), Vector::Zero(n), theta);
    const EquilibriumReport balanced = solve_steady_state(low, symmetric_start, opts.solve);
    // A symmetric start stays symmetric, so this lands on the (unstable)
    // balanced fixed point of the high-beta market.
    const EquilibriumReport symmetric_high = solve_steady_state(high, symmetric_start, opts.solve);
    if (!concentrated.converged || !balanced.converged || !symmetric_high.converged)
        throw std::runtime_error("head effect comparison: equilibrium failed to converge");

    out.concentrated = welfare_breakdown(high, concentrated.state);
    out.balanced = welfare_breakdown(low, balanced.state);
    out.symmetric_at_high_beta = welfare_breakdown(high, symmetric_high.state);
    out.concentrated_at_high_beta = out.concentrated;
    out.cs_delta = out.concentrated.consumer_surplus - out.balanced.consumer_surplus;
    out.ps_delta = out.concentrated.producer_surplus - out.balanced.producer_surplus;
    return out;
}

}  // namespace streammarket
