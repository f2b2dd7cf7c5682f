#pragma once

#include "streammarket/market.hpp"

#include <cstdint>
#include <utility>
#include <vector>

namespace streammarket {

struct SteadyStateOptions {
    /// Negative tolerances mean "use the defaults": tol_n = 1e-8 M and
    /// tol_q = 1e-8 max(1, max_i q_i) re-evaluated at the current iterate.
    double tol_n = -1.0;
    double tol_q = -1.0;
    double damping = 0.5;   ///< in (0, 1]
    int max_iter = 200000;
    bool freeze_quality = false;  ///< hold quality at the start value
};

struct EquilibriumReport {
    explicit EquilibriumReport(MarketState s) : state(std::move(s)) {}

    MarketState state;
    double residual_n = 0.0;  ///< max_i |n_i - M P_i|
    double residual_q = 0.0;  ///< max_i |c'(q_i) - (1-tau) R M alpha_i P_i (1-P_i)|
    int iterations = 0;
    bool converged = false;
    /// (start, attained fixed point) pairs from multi-start probing.
    std::vector<std::pair<MarketState, MarketState>> basin_probe;
};

/// Damped Gauss-Seidel fixed point: n <- (1-d) n + d M P(n, q), then each
/// q_i <- (1-d) q_i + d BR_i. Returns converged=false instead of throwing
/// when the iteration budget runs out.
EquilibriumReport solve_steady_state(const MarketParams& params, const MarketState& start,
                                     const SteadyStateOptions& opts = {});

/// The q_i >= 0 solving c'(q_i) = (1-tau) R M alpha_i P_i(q_i) (1-P_i(q_i))
/// self-consistently (P_i re-evaluated as q_i moves, everything else held
/// fixed). Root bracketing always succeeds: the left side runs from 0 past
/// the right side's global maximum (1-tau) R M alpha_i / 4.
double quality_best_response(const MarketParams& params, const MarketState& state, int i);

/// Random interior state: viewers uniform on the M-scaled simplex, qualities
/// uniform on [0, q_cap] where c'(q_cap) equals the largest possible marginal
/// revenue, allocation copied from `allocation`.
MarketState random_interior_state(const MarketParams& params, const Vector& allocation,
                                  std::uint64_t seed);

/// Runs solve_steady_state from `count` random interior starts and returns the
/// (start, attained) pairs in seed order.
std::vector<std::pair<MarketState, MarketState>> basin_probe(const MarketParams& params,
                                                             const Vector& allocation,
                                                             int count, std::uint64_t seed,
                                                             const SteadyStateOptions& opts = {});

}  // namespace streammarket
