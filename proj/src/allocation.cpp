#include "streammarket/allocation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>

namespace streammarket {

namespace {

/// Stationarity value of the printed allocation system, as a function of the
/// choice probability alone: g(P) = P/phi + R M phi P (1-P).
double foc_value(const MarketParams& params, double p) {
    const double phi = params.traffic_sensitivity;
    return p / phi + params.revenue_rate * params.total_viewers * phi * p * (1.0 - p);
}

Vector gradient_uncoupled(const MarketParams& params, const MarketState& base,
                          const Vector& theta) {
    return welfare_allocation_gradient(
        params, MarketState::unchecked(base.viewers, base.quality, theta));
}

Vector gradient_coupled(const MarketParams& params, const MarketState& base, const Vector& theta,
                        const SteadyStateOptions& solve) {
    const double h = 1e-6;
    Vector g(theta.size());
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
        Vector plus = theta, minus = theta;
        plus[i] += h;
        minus[i] -= h;
        g[i] = (welfare_of(params, base, plus, true, solve) -
                welfare_of(params, base, minus, true, solve)) /
               (2.0 * h);
    }
    return g;
}

void fill_kkt(AllocationSolution& sol, const Vector& g, std::optional<double> fixed_lambda = {}) {
    const int n = static_cast<int>(sol.theta.size());
    double lambda = 0.0;
    if (fixed_lambda) {
        lambda = *fixed_lambda;
    } else {
        int active = 0;
        for (int i = 0; i < n; ++i) {
            if (sol.theta[i] > 0.0) {
                lambda += g[i];
                ++active;
            }
        }
        lambda = active > 0 ? lambda / active : 0.0;
    }
    sol.lambda = lambda;
    sol.mu = Vector::Zero(n);
    sol.active_corners.clear();
    double residual = 0.0;
    for (int i = 0; i < n; ++i) {
        if (sol.theta[i] > 0.0) {
            residual = std::max(residual, std::abs(g[i] - lambda));
        } else {
            sol.active_corners.push_back(i);
            sol.mu[i] = std::max(0.0, lambda - g[i]);
            residual = std::max(residual, std::max(0.0, g[i] - lambda));
        }
    }
    sol.gradient = g;
    sol.foc_residual = residual;
}

AllocationSolution solve_exact_gradient(const MarketParams& params, const MarketState& base,
                                        const Vector& start, const AllocationOptions& opts) {
    const auto value = [&](const Vector& theta) {
        return welfare_of(params, base, theta, opts.equilibrium_coupled, opts.solve);
    };
    const auto gradient = [&](const Vector& theta) {
        return opts.equilibrium_coupled ? gradient_coupled(params, base, theta, opts.solve)
                                        : gradient_uncoupled(params, base, theta);
    };

    AllocationSolution sol;
    sol.mode = AllocationMode::ExactGradient;
    sol.theta = simplex_project(start);

    double w = value(sol.theta);
    Vector g = gradient(sol.theta);
    double step = 1.0 / std::max(1.0, g.cwiseAbs().maxCoeff());
    int iter = 0;
    for (; iter < opts.max_iter; ++iter) {
        const double residual =
            (simplex_project(sol.theta + g) - sol.theta).cwiseAbs().maxCoeff();
        if (residual <= opts.tol) break;

        bool accepted = false;
        for (int trial = 0; trial < 60; ++trial) {
            const Vector candidate = simplex_project(sol.theta + step * g);
            const Vector direction = candidate - sol.theta;
            if (direction.cwiseAbs().maxCoeff() == 0.0) {
                step *= 2.0;
                continue;
            }
            const double w_candidate = value(candidate);
            if (w_candidate >= w + 1e-4 * g.dot(direction)) {
                sol.theta = candidate;
                w = w_candidate;
                accepted = true;
                step *= 2.0;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;  // line search exhausted; report the residual we reached
        g = gradient(sol.theta);
    }

    sol.iterations = iter;
    sol.welfare = w;
    fill_kkt(sol, g);
    sol.converged = (simplex_project(sol.theta + g) - sol.theta).cwiseAbs().maxCoeff() <= opts.tol;
    return sol;
}

AllocationSolution solve_paper_foc(const MarketParams& params, const MarketState& base,
                                   const AllocationOptions& opts) {
    const double phi = params.traffic_sensitivity;
    if (!(phi > 0.0))
        throw std::invalid_argument("paper_foc requires traffic_sensitivity > 0");
    const int n = params.n_streamers;

    // Base utilities without the allocation channel, max-shifted once.
    Vector v = params.attractiveness.cwiseProduct(base.quality) - params.price +
               params.network_effect * base.viewers;
    v.array() -= v.maxCoeff();

    AllocationSolution sol;
    sol.mode = AllocationMode::PaperFoc;
    sol.theta = Vector::Zero(n);

    std::vector<bool> pinned(n, false);
    double level = 0.0;   // common interior probability
    double log_z = 0.0;   // softmax normalizer (shifted scale)
    bool solved = false;
    for (int round = 0; round < 3 * n + 5; ++round) {
        const int k = n - static_cast<int>(std::count(pinned.begin(), pinned.end(), true));
        if (k == 0) {
            sol.infeasible = true;
            break;
        }
        double sum_v_interior = 0.0;
        double pinned_mass = 0.0;
        for (int i = 0; i < n; ++i) {
            if (pinned[i]) pinned_mass += std::exp(v[i]);
            else sum_v_interior += v[i];
        }

        if (pinned_mass == 0.0) {
            level = 1.0 / k;
            log_z = (phi + sum_v_interior - k * std::log(level)) / k;
        } else {
            // Interior allocations sum to 1; their common probability level is
            // the unique root of a strictly increasing function of the level.
            const auto theta_sum = [&](double p_hat) {
                const double lz = std::log(pinned_mass) - std::log1p(-k * p_hat);
                return (k * std::log(p_hat) + k * lz - sum_v_interior) / phi - 1.0;
            };
            double lo = 1e-300, hi = (1.0 - 1e-12) / k;
            if (theta_sum(hi) < 0.0) {
                sol.infeasible = true;
                break;
            }
            for (int it = 0; it < 300 && hi - lo > 1e-16 * std::max(1.0, hi); ++it) {
                const double mid = 0.5 * (lo + hi);
                (theta_sum(mid) < 0.0 ? lo : hi) = mid;
            }
            level = 0.5 * (lo + hi);
            log_z = std::log(pinned_mass) - std::log1p(-k * level);
        }

        for (int i = 0; i < n; ++i)
            sol.theta[i] = pinned[i] ? 0.0 : (std::log(level) + log_z - v[i]) / phi;

        // Pin the most negative interior coordinate, if any.
        int worst = -1;
        for (int i = 0; i < n; ++i)
            if (!pinned[i] && sol.theta[i] < -1e-14 &&
                (worst < 0 || sol.theta[i] < sol.theta[worst]))
                worst = i;
        if (worst >= 0) {
            pinned[worst] = true;
            continue;
        }

        // Release the worst corner-condition violator, if any.
        const double lambda = foc_value(params, level);
        int release = -1;
        double worst_violation = 1e-9 * std::max(1.0, std::abs(lambda));
        for (int i = 0; i < n; ++i) {
            if (!pinned[i]) continue;
            const double violation = foc_value(params, std::exp(v[i] - log_z)) - lambda;
            if (violation > worst_violation) {
                worst_violation = violation;
                release = i;
            }
        }
        if (release >= 0) {
            pinned[release] = false;
            continue;
        }

        // Feasible and corner-consistent: clean tiny negatives and stop.
        sol.theta = sol.theta.cwiseMax(0.0);
        sol.theta /= sol.theta.sum();
        solved = true;
        sol.iterations = round + 1;
        break;
    }
    if (!solved) sol.infeasible = true;
    if (sol.infeasible) {
        sol.theta = Vector::Constant(n, 1.0 / n);
        sol.converged = false;
        sol.welfare = welfare_of(params, base, sol.theta, false);
        sol.mu = Vector::Zero(n);
        sol.gradient = Vector::Zero(n);
        return sol;
    }

    const Vector p = choice_probabilities(v + phi * sol.theta);
    Vector g(n);
    for (int i = 0; i < n; ++i) g[i] = foc_value(params, p[i]);
    sol.welfare = welfare_of(params, base, sol.theta, false);
    fill_kkt(sol, g, foc_value(params, level));
    sol.converged = sol.foc_residual <= std::max(opts.tol, 1e-9 * std::max(1.0, sol.lambda));
    return sol;
}

}  // namespace

std::string to_string(AllocationMode mode) {
    return mode == AllocationMode::ExactGradient ? "exact_gradient" : "paper_foc";
}

Vector simplex_project(const Vector& y) {
    if (!y.allFinite()) throw std::domain_error("cannot project a non-finite vector");
    const int n = static_cast<int>(y.size());
    std::vector<double> u(y.data(), y.data() + n);
    std::sort(u.begin(), u.end(), std::greater<>());
    double running = 0.0;
    double tau = 0.0;
    for (int j = 0; j < n; ++j) {
        running += u[j];
        const double candidate = (running - 1.0) / (j + 1);
        if (u[j] - candidate > 0.0) tau = candidate;
    }
    return (y.array() - tau).cwiseMax(0.0);
}

double welfare_of(const MarketParams& params, const MarketState& base, const Vector& theta,
                  bool equilibrium_coupled, const SteadyStateOptions& solve) {
    if (theta.size() != params.n_streamers)
        throw std::invalid_argument("allocation must have length n_streamers");
    if (!theta.allFinite()) throw std::domain_error("allocation must be finite");

    if (equilibrium_coupled) {
        const MarketState start = MarketState::unchecked(base.viewers, base.quality, theta);
        const EquilibriumReport eq = solve_steady_state(params, start, solve);
        if (!eq.converged)
            throw std::runtime_error("coupled welfare: equilibrium failed to converge");
        return welfare_breakdown(params, eq.state).total;
    }

    // Static reading: (n, q) stay at the base state, viewer counts respond
    // through the choice probabilities alone.
    const MarketState at_theta = MarketState::unchecked(base.viewers, base.quality, theta);
    const UtilityVector v = utilities(params, at_theta);
    const Vector p = choice_probabilities(v);
    const double m = params.total_viewers;
    const double cs = m * log_sum_exp(v);
    double ps = 0.0;
    for (int i = 0; i < params.n_streamers; ++i)
        ps += (1.0 - params.platform_cut) * params.revenue_rate * m * p[i] -
              params.cost.value(base.quality[i]);
    const double pi = params.platform_cut * params.revenue_rate * m * p.sum();
    return cs + ps + pi;
}

AllocationSolution optimize_allocation(const MarketParams& params, const MarketState& base,
                                       const Vector& start, const AllocationOptions& opts) {
    if (start.size() != params.n_streamers)
        throw std::invalid_argument("allocation must have length n_streamers");
    if (opts.mode == AllocationMode::PaperFoc) {
        if (opts.equilibrium_coupled)
            throw std::invalid_argument("paper_foc is a static system; coupled mode unsupported");
        return solve_paper_foc(params, base, opts);
    }
    return solve_exact_gradient(params, base, start, opts);
}

}  // namespace streammarket
