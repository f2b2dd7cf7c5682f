#include "streammarket/control.hpp"

#include "streammarket/allocation.hpp"
#include "streammarket/dynamics.hpp"
#include "streammarket/stability.hpp"

#include <cmath>

namespace streammarket {

namespace {

double instantaneous_welfare(const MarketParams& params, const MarketState& state) {
    return consumer_surplus(params, state) + producer_surplus(params, state) +
           platform_profit(params, state);
}

struct Grid {
    std::vector<MarketState> nodes;  // K+1
    std::vector<MarketState> mids;   // K
};

struct Sweep {
    const MarketParams& params;
    const ControlOptions& opts;
    double dt;

    Vector state_drift_n(const MarketState& s) const { return viewer_drift(params, s); }
    Vector state_drift_q(const MarketState& s) const {
        return opts.include_quality_dynamics ? quality_drift(params, s)
                                             : Vector(Vector::Zero(s.size()));
    }

    MarketState rk4_state(const MarketState& x, const Vector& theta, double h) const {
        const auto f = [&](const Vector& n, const Vector& q) {
            const MarketState s = MarketState::unchecked(n, q, theta);
            return std::pair<Vector, Vector>(state_drift_n(s), state_drift_q(s));
        };
        const auto [k1n, k1q] = f(x.viewers, x.quality);
        const auto [k2n, k2q] = f(x.viewers + 0.5 * h * k1n, x.quality + 0.5 * h * k1q);
        const auto [k3n, k3q] = f(x.viewers + 0.5 * h * k2n, x.quality + 0.5 * h * k2q);
        const auto [k4n, k4q] = f(x.viewers + h * k3n, x.quality + h * k3q);
        Vector n = x.viewers + (h / 6.0) * (k1n + 2.0 * k2n + 2.0 * k3n + k4n);
        Vector q = x.quality + (h / 6.0) * (k1q + 2.0 * k2q + 2.0 * k3q + k4q);
        q = q.cwiseMax(0.0);
        if (!n.allFinite() || !q.allFinite()) throw std::runtime_error("control: state diverged");
        return MarketState::unchecked(std::move(n), std::move(q), theta);
    }

    Grid forward(const MarketState& initial, const Matrix& theta) const {
        Grid g;
        g.nodes.reserve(opts.steps + 1);
        g.mids.reserve(opts.steps);
        g.nodes.push_back(MarketState::unchecked(initial.viewers, initial.quality,
                                                 theta.row(0).transpose()));
        for (int k = 0; k < opts.steps; ++k) {
            const Vector cell_theta = theta.row(k).transpose();
            const MarketState mid = rk4_state(g.nodes.back(), cell_theta, 0.5 * dt);
            g.mids.push_back(mid);
            g.nodes.push_back(rk4_state(mid, cell_theta, 0.5 * dt));
        }
        return g;
    }

    double discounted_welfare(const Grid& grid, const Matrix& theta) const {
        const double rho = params.discount_rate;
        double total = 0.0;
        for (int k = 0; k < opts.steps; ++k) {
            const Vector cell_theta = theta.row(k).transpose();
            const MarketState left = MarketState::unchecked(
                grid.nodes[k].viewers, grid.nodes[k].quality, cell_theta);
            const MarketState right = MarketState::unchecked(
                grid.nodes[k + 1].viewers, grid.nodes[k + 1].quality, cell_theta);
            const double f_left = std::exp(-rho * k * dt) * instantaneous_welfare(params, left);
            const double f_right =
                std::exp(-rho * (k + 1) * dt) * instantaneous_welfare(params, right);
            total += 0.5 * dt * (f_left + f_right);
        }
        return total;
    }

    // Costate pair (lambda for viewers, nu for qualities when enabled).
    struct Costate {
        Vector lambda;
        Vector nu;
    };

    Costate costate_rhs(const MarketState& s, const Costate& c) const {
        const double rho = params.discount_rate;
        const int n = params.n_streamers;
        Costate out;
        if (!opts.include_quality_dynamics) {
            out.lambda = rho * c.lambda - hamiltonian_viewer_gradient(params, s, c.lambda);
            out.nu = Vector::Zero(n);
            return out;
        }
        const Matrix jac = jacobian_at(params, s);
        const Vector dh_dn = welfare_viewer_gradient(params, s) +
                             jac.topLeftCorner(n, n).transpose() * c.lambda +
                             jac.bottomLeftCorner(n, n).transpose() * c.nu;
        const Vector dh_dq = welfare_quality_gradient(params, s) +
                             jac.topRightCorner(n, n).transpose() * c.lambda +
                             jac.bottomRightCorner(n, n).transpose() * c.nu;
        out.lambda = rho * c.lambda - dh_dn;
        out.nu = rho * c.nu - dh_dq;
        return out;
    }

    // One RK4 step of the costate equations backwards across cell k, using the
    // stored forward states at the cell's right node, midpoint, and left node.
    Costate rk4_costate_back(const Grid& grid, const Matrix& theta, int k,
                             const Costate& at_right) const {
        const Vector cell_theta = theta.row(k).transpose();
        const auto at = [&](const MarketState& s) {
            return MarketState::unchecked(s.viewers, s.quality, cell_theta);
        };
        const MarketState right = at(grid.nodes[k + 1]);
        const MarketState mid = at(grid.mids[k]);
        const MarketState left = at(grid.nodes[k]);
        const double h = -dt;
        const Costate k1 = costate_rhs(right, at_right);
        const Costate k2 = costate_rhs(mid, {at_right.lambda + 0.5 * h * k1.lambda,
                                             at_right.nu + 0.5 * h * k1.nu});
        const Costate k3 = costate_rhs(mid, {at_right.lambda + 0.5 * h * k2.lambda,
                                             at_right.nu + 0.5 * h * k2.nu});
        const Costate k4 = costate_rhs(left, {at_right.lambda + h * k3.lambda,
                                              at_right.nu + h * k3.nu});
        Costate out;
        out.lambda = at_right.lambda +
                     (h / 6.0) * (k1.lambda + 2.0 * k2.lambda + 2.0 * k3.lambda + k4.lambda);
        out.nu = at_right.nu + (h / 6.0) * (k1.nu + 2.0 * k2.nu + 2.0 * k3.nu + k4.nu);
        return out;
    }
};

}  // namespace

double hamiltonian(const MarketParams& params, const MarketState& state, const Vector& costate) {
    if (costate.size() != params.n_streamers)
        throw std::invalid_argument("costate must have length n_streamers");
    if (!costate.allFinite()) throw std::invalid_argument("costate must be finite");
    return instantaneous_welfare(params, state) + costate.dot(viewer_drift(params, state));
}

Vector hamiltonian_viewer_gradient(const MarketParams& params, const MarketState& state,
                                   const Vector& costate) {
    const ProbabilityJacobians jac = probability_jacobians(params, state);
    const double gamma = params.viewer_speed;
    const Matrix drift_jac =
        gamma * (params.total_viewers * jac.dn -
                 Matrix::Identity(params.n_streamers, params.n_streamers));
    return welfare_viewer_gradient(params, state) + drift_jac.transpose() * costate;
}

Vector hamiltonian_allocation_gradient(const MarketParams& params, const MarketState& state,
                                       const Vector& costate) {
    const ProbabilityJacobians jac = probability_jacobians(params, state);
    return welfare_allocation_gradient(params, state) +
           params.viewer_speed * params.total_viewers * jac.dtheta.transpose() * costate;
}

Vector costate_drift(const MarketParams& params, const MarketState& state,
                     const Vector& costate) {
    return params.discount_rate * costate - hamiltonian_viewer_gradient(params, state, costate);
}

ControlSolution solve_fbsm(const MarketParams& params, const MarketState& initial,
                           const ControlOptions& opts) {
    if (!(opts.horizon > 0.0)) throw std::invalid_argument("horizon must be > 0");
    if (opts.steps < 1) throw std::invalid_argument("steps must be >= 1");
    if (!(opts.relaxation > 0.0 && opts.relaxation <= 1.0))
        throw std::invalid_argument("relaxation must be in (0, 1]");
    const int n = params.n_streamers;
    const int k_cells = opts.steps;

    Sweep sweep{params, opts, opts.horizon / k_cells};
    Matrix theta(k_cells + 1, n);
    for (int k = 0; k <= k_cells; ++k) theta.row(k) = initial.allocation.transpose();

    Grid grid = sweep.forward(initial, theta);
    double objective = sweep.discounted_welfare(grid, theta);

    Matrix lambdas = Matrix::Zero(k_cells + 1, n);
    Matrix nus = Matrix::Zero(k_cells + 1, n);
    std::vector<double> residuals(k_cells, 0.0);
    Matrix gradients(k_cells, n);

    bool converged = false;
    int sweeps_done = 0;
    double step = 1.0;
    for (int sweep_index = 1; sweep_index <= opts.max_sweeps; ++sweep_index) {
        sweeps_done = sweep_index;

        // Backward costate pass from lambda(T) = 0.
        Sweep::Costate c{Vector::Zero(n), Vector::Zero(n)};
        lambdas.row(k_cells).setZero();
        nus.row(k_cells).setZero();
        for (int k = k_cells - 1; k >= 0; --k) {
            c = sweep.rk4_costate_back(grid, theta, k, c);
            lambdas.row(k) = c.lambda.transpose();
            nus.row(k) = c.nu.transpose();
        }

        double max_residual = 0.0;
        for (int k = 0; k < k_cells; ++k) {
            const Vector cell_theta = theta.row(k).transpose();
            const MarketState node = MarketState::unchecked(grid.nodes[k].viewers,
                                                            grid.nodes[k].quality, cell_theta);
            const Vector g =
                hamiltonian_allocation_gradient(params, node, lambdas.row(k).transpose());
            gradients.row(k) = g.transpose();
            residuals[k] = (simplex_project(cell_theta + g) - cell_theta).cwiseAbs().maxCoeff();
            max_residual = std::max(max_residual, residuals[k]);
        }
        if (max_residual <= opts.tol) {
            converged = true;
            break;
        }

        // Line-searched projected gradient update of the whole control path.
        const auto candidate_path = [&](double s) {
            Matrix out = theta;
            for (int k = 0; k < k_cells; ++k) {
                const Vector cur = theta.row(k).transpose();
                const Vector moved = simplex_project(cur + s * gradients.row(k).transpose());
                out.row(k) =
                    ((1.0 - opts.relaxation) * cur + opts.relaxation * moved).transpose();
            }
            out.row(k_cells) = out.row(k_cells - 1);
            return out;
        };

        bool accepted = false;
        for (int trial = 0; trial < 50; ++trial) {
            const Matrix trial_theta = candidate_path(step);
            const double change = (trial_theta - theta).cwiseAbs().maxCoeff();
            if (change == 0.0) break;
            const Grid trial_grid = sweep.forward(initial, trial_theta);
            const double trial_objective = sweep.discounted_welfare(trial_grid, trial_theta);
            if (trial_objective >= objective - 1e-12 * std::abs(objective)) {
                theta = trial_theta;
                grid = trial_grid;
                objective = trial_objective;
                accepted = true;
                step *= 2.0;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;
    }

    ControlSolution sol;
    sol.times.resize(k_cells + 1);
    for (int k = 0; k <= k_cells; ++k) sol.times[k] = k * sweep.dt;
    sol.theta_path = theta;
    sol.costates = lambdas;
    if (opts.include_quality_dynamics) sol.quality_costates = nus;
    sol.states.reserve(k_cells + 1);
    sol.welfare_path.resize(k_cells + 1);
    for (int k = 0; k <= k_cells; ++k) {
        const MarketState node = MarketState::unchecked(grid.nodes[k].viewers,
                                                        grid.nodes[k].quality,
                                                        theta.row(k).transpose());
        sol.welfare_path[k] = instantaneous_welfare(params, node);
        sol.states.push_back(node);
    }
    sol.foc_residual_path = residuals;
    sol.discounted_welfare = objective;
    sol.converged = converged;
    sol.sweeps = sweeps_done;
    return sol;
}

}  // namespace streammarket
