#pragma once

#include "streammarket/equilibrium.hpp"
#include "streammarket/market.hpp"

#include <utility>

namespace streammarket {

/// Max share at or above this flags a head-effect state.
inline constexpr double kHeadEffectShareThreshold = 0.99;

struct WelfareBreakdown {
    double consumer_surplus = 0.0;  ///< M log sum_k exp(V_k)
    double producer_surplus = 0.0;  ///< sum_i pi_i
    double platform_profit = 0.0;   ///< tau R sum_i n_i
    double total = 0.0;
    Vector shares;
    double hhi = 0.0;
    bool head_effect = false;
};

struct HeadEffectComparison {
    double beta_star = 0.0;   ///< frozen-quality symmetric threshold
    double beta_high = 0.0;   ///< 2 beta*: concentration regime
    double beta_low = 0.0;    ///< beta* / 2: the balanced state is stable here
    WelfareBreakdown concentrated;            ///< attractor reached at beta_high
    WelfareBreakdown balanced;                ///< symmetric steady state at beta_low
    WelfareBreakdown symmetric_at_high_beta;  ///< unstable symmetric point, beta_high
    WelfareBreakdown concentrated_at_high_beta;  ///< = concentrated (fixed-beta view)
    double cs_delta = 0.0;  ///< CS(concentrated) - CS(balanced)
    double ps_delta = 0.0;  ///< PS(concentrated) - PS(balanced)
};

struct HeadEffectComparisonOptions {
    double perturbation = 1e-3;   ///< initial viewer nudge, fraction of M
    double horizon_over_gamma = 60.0;
    SteadyStateOptions solve;
};

/// s_i = n_i / M and HHI = sum s_i^2. Throws std::invalid_argument when
/// |sum n_i - M| > 1e-3 M (conservation violated).
std::pair<Vector, double> shares_and_hhi(const MarketState& state, double total_viewers);

double consumer_surplus(const MarketParams& params, const MarketState& state);
double producer_surplus(const MarketParams& params, const MarketState& state);
double platform_profit(const MarketParams& params, const MarketState& state);

WelfareBreakdown welfare_breakdown(const MarketParams& params, const MarketState& state);

/// dW/dn_i at fixed quality and allocation: M beta P_i + R.
Vector welfare_viewer_gradient(const MarketParams& params, const MarketState& state);

/// dW/dq_i at fixed viewers and allocation: M alpha_i P_i - c'(q_i).
Vector welfare_quality_gradient(const MarketParams& params, const MarketState& state);

/// dW/dtheta_i under the static allocation reading (viewer counts respond as
/// M P). Assembled channel by channel; the producer and platform terms cancel
/// across streamers, leaving M phi P_i up to rounding.
Vector welfare_allocation_gradient(const MarketParams& params, const MarketState& state);

/// Welfare of concentrated vs balanced market outcomes around the critical
/// network effect; symmetric params required.
HeadEffectComparison head_effect_comparison(const MarketParams& params,
                                            const HeadEffectComparisonOptions& opts = {});

}  // namespace streammarket
