#pragma once

#include "streammarket/market.hpp"
#include "streammarket/welfare.hpp"

#include <vector>

namespace streammarket {

struct ControlOptions {
    double horizon = 1.0;   ///< T > 0 (finite truncation of the discounted objective)
    int steps = 50;         ///< K grid cells; the control is piecewise-constant per cell
    double tol = 1e-6;      ///< on FOC residual and allocation-path change
    int max_sweeps = 200;
    double relaxation = 1.0;  ///< w in (0, 1]: theta <- (1-w) theta + w candidate
    bool include_quality_dynamics = false;  ///< adds quality costates; off = quality frozen
};

struct ControlSolution {
    std::vector<double> times;          ///< K+1 grid nodes
    Matrix theta_path;                  ///< (K+1) x N; row k is cell k's control, last row repeats
    Matrix costates;                    ///< (K+1) x N viewer costates; last row is exactly zero
    Matrix quality_costates;            ///< (K+1) x N when quality dynamics are included, else 0 x 0
    std::vector<MarketState> states;    ///< forward states at the nodes
    std::vector<double> welfare_path;   ///< W at each node under that row's control
    std::vector<double> foc_residual_path;  ///< per cell: projected Hamiltonian gradient, sup-norm
    double discounted_welfare = 0.0;    ///< trapezoid of e^{-rho t} W(t)
    bool converged = false;
    int sweeps = 0;
};

/// H = W(state) + sum_i lambda_i gamma (M P_i - n_i).
double hamiltonian(const MarketParams& params, const MarketState& state, const Vector& costate);

/// dH/dn_i, assembled analytically.
Vector hamiltonian_viewer_gradient(const MarketParams& params, const MarketState& state,
                                   const Vector& costate);

/// dH/dtheta_i, assembled analytically.
Vector hamiltonian_allocation_gradient(const MarketParams& params, const MarketState& state,
                                       const Vector& costate);

/// lambdadot_i = rho lambda_i - dH/dn_i.
Vector costate_drift(const MarketParams& params, const MarketState& state, const Vector& costate);

/// Forward-backward sweep: forward RK4 state integration under the current
/// control path, backward RK4 costate integration from the transversality
/// condition lambda(T) = 0, then a line-searched projected-gradient update of
/// the control at every grid cell. Discounted welfare is non-decreasing
/// across accepted sweeps.
ControlSolution solve_fbsm(const MarketParams& params, const MarketState& initial,
                           const ControlOptions& opts);

}  // namespace streammarket
