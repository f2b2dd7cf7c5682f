#pragma once

#include "streammarket/market.hpp"
#include "streammarket/welfare.hpp"

#include <string>
#include <vector>

namespace streammarket {

enum class AllocationMode {
    ExactGradient,  ///< projected gradient ascent on the implemented welfare
    PaperFoc        ///< stationarity system P/phi + R M phi P (1-P) = lambda
};

std::string to_string(AllocationMode mode);

struct AllocationSolution {
    Vector theta;
    double lambda = 0.0;       ///< simplex-constraint multiplier
    Vector mu;                 ///< nonnegativity multipliers, mu_i >= 0
    Vector gradient;           ///< dW/dtheta (exact_gradient) or the FOC values (paper_foc)
    double welfare = 0.0;
    double foc_residual = 0.0;
    std::vector<int> active_corners;  ///< indices with theta_i = 0
    AllocationMode mode = AllocationMode::ExactGradient;
    bool converged = false;
    bool infeasible = false;  ///< paper_foc: no lambda balances the simplex
    int iterations = 0;
};

struct AllocationOptions {
    AllocationMode mode = AllocationMode::ExactGradient;
    double tol = 1e-8;
    int max_iter = 2000;
    bool equilibrium_coupled = false;
    SteadyStateOptions solve;  ///< used only when equilibrium_coupled
};

/// Euclidean projection onto { theta >= 0, sum theta = 1 } (sort-based).
Vector simplex_project(const Vector& y);

/// Welfare at allocation `theta` around base state (n, q). Uncoupled (the
/// default) keeps (n, q) fixed and lets viewer counts respond as M P(theta);
/// coupled re-solves the steady state at theta first.
double welfare_of(const MarketParams& params, const MarketState& base, const Vector& theta,
                  bool equilibrium_coupled = false, const SteadyStateOptions& solve = {});

AllocationSolution optimize_allocation(const MarketParams& params, const MarketState& base,
                                       const Vector& start, const AllocationOptions& opts = {});

}  // namespace streammarket
