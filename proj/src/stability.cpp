#include "streammarket/stability.hpp"

#include "streammarket/dynamics.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace streammarket {

namespace {

struct QualityRowTerms {
    double gain;      // eta (1-tau) R M alpha_i (1 - 2 P_i), divided by c'' when normalized
    double own_cost;  // coefficient of delta_ij on the quality diagonal
};

QualityRowTerms quality_row_terms(const MarketParams& params, const MarketState& state,
                                  const Vector& p, int i, QualityLaw law) {
    const double margin =
        (1.0 - params.platform_cut) * params.revenue_rate * params.total_viewers;
    const double a = margin * params.attractiveness[i];
    const double c2 = params.cost.second_derivative(state.quality[i]);
    QualityRowTerms t;
    t.gain = params.quality_speed * a * (1.0 - 2.0 * p[i]);
    t.own_cost = -params.quality_speed * c2;
    if (law == QualityLaw::NewtonNormalized) {
        t.gain /= c2;
        t.own_cost /= c2;
        // d/dq_i of eta g_i / c''(q_i) picks up -(c'''/c'') qdot_i.
        const double g = a * p[i] * (1.0 - p[i]) - params.cost.derivative(state.quality[i]);
        const double qdot = params.quality_speed * g / c2;
        t.own_cost -= params.cost.third_derivative(state.quality[i]) / c2 * qdot;
    }
    return t;
}

void check_square(const Matrix& m) {
    if (m.rows() != m.cols() || m.rows() < 1)
        throw std::invalid_argument("matrix must be square and non-empty");
    if (m.rows() > 1024) throw std::invalid_argument("matrix exceeds the 1024x1024 desk-scale cap");
}

double steady_state_scale(const MarketParams& params) {
    double s = 1.0;
    for (int i = 0; i < params.n_streamers; ++i)
        s = std::max(s, 0.25 * (1.0 - params.platform_cut) * params.revenue_rate *
                            params.total_viewers * params.attractiveness[i]);
    return s;
}

bool is_steady(const MarketParams& params, const MarketState& state, bool quality_frozen) {
    const Vector p = choice_probabilities(utilities(params, state));
    const double rn =
        (state.viewers - params.total_viewers * p).cwiseAbs().maxCoeff();
    if (rn > 1e-6 * params.total_viewers) return false;
    if (quality_frozen) return true;
    double rq = 0.0;
    for (int i = 0; i < params.n_streamers; ++i) {
        const double margin = (1.0 - params.platform_cut) * params.revenue_rate *
                              params.total_viewers * params.attractiveness[i];
        rq = std::max(rq, std::abs(params.cost.derivative(state.quality[i]) -
                                   margin * p[i] * (1.0 - p[i])));
    }
    return rq <= 1e-6 * steady_state_scale(params);
}

std::string format_value(double x) {
    std::ostringstream os;
    os << x;
    return os.str();
}

}  // namespace

Matrix jacobian_at(const MarketParams& params, const MarketState& state, QualityLaw law) {
    const int n = params.n_streamers;
    const Vector p = choice_probabilities(utilities(params, state));
    const ProbabilityJacobians jac = probability_jacobians(params, state);
    const double gamma = params.viewer_speed;
    const double m = params.total_viewers;

    Matrix j = Matrix::Zero(2 * n, 2 * n);
    j.topLeftCorner(n, n) = gamma * (m * jac.dn - Matrix::Identity(n, n));
    j.topRightCorner(n, n) = gamma * m * jac.dq;
    for (int i = 0; i < n; ++i) {
        const QualityRowTerms t = quality_row_terms(params, state, p, i, law);
        j.block(n + i, 0, 1, n) = t.gain * jac.dn.row(i);
        j.block(n + i, n, 1, n) = t.gain * jac.dq.row(i);
        j(n + i, n + i) += t.own_cost;
    }
    return j;
}

Matrix jacobian_fd(const MarketParams& params, const MarketState& state, QualityLaw law,
                   double step) {
    const int n = params.n_streamers;
    const auto drift_at = [&](const Vector& nn, const Vector& qq) {
        const MarketState s = MarketState::unchecked(nn, qq, state.allocation);
        Vector f(2 * n);
        f.head(n) = viewer_drift(params, s);
        f.tail(n) = quality_drift(params, s, law);
        return f;
    };

    Matrix j(2 * n, 2 * n);
    for (int col = 0; col < 2 * n; ++col) {
        Vector n_plus = state.viewers, q_plus = state.quality;
        Vector n_minus = state.viewers, q_minus = state.quality;
        if (col < n) {
            n_plus[col] += step;
            n_minus[col] -= step;
        } else {
            q_plus[col - n] += step;
            q_minus[col - n] -= step;
        }
        j.col(col) = (drift_at(n_plus, q_plus) - drift_at(n_minus, q_minus)) / (2.0 * step);
    }
    return j;
}

std::vector<std::complex<double>> eigenvalues(const Matrix& matrix) {
    check_square(matrix);
    Eigen::EigenSolver<Matrix> solver(matrix, /*computeEigenvectors=*/false);
    if (solver.info() != Eigen::Success) throw std::runtime_error("eigensolver stalled");
    std::vector<std::complex<double>> out(matrix.rows());
    for (Eigen::Index i = 0; i < matrix.rows(); ++i) out[i] = solver.eigenvalues()[i];
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        if (a.real() != b.real()) return a.real() > b.real();
        return a.imag() > b.imag();
    });
    return out;
}

StabilityReport classify_stability(const MarketParams& params, const MarketState& state,
                                   const StabilityOptions& opts) {
    const QualityLaw law =
        opts.newton_normalized_qdot ? QualityLaw::NewtonNormalized : QualityLaw::GradientAscent;
    StabilityReport report;
    report.method = opts.method;
    Matrix full = opts.method == JacobianMethod::Analytic ? jacobian_at(params, state, law)
                                                          : jacobian_fd(params, state, law);
    const int n = params.n_streamers;
    report.jacobian = opts.quality_frozen ? Matrix(full.topLeftCorner(n, n)) : std::move(full);
    report.eigenvalues = eigenvalues(report.jacobian);
    report.max_real_part = report.eigenvalues.front().real();
    report.stable = report.max_real_part < -opts.tol_eig;
    report.at_steady_state = is_steady(params, state, opts.quality_frozen);
    return report;
}

CriticalBetaReport critical_beta(const MarketParams& params, const CriticalBetaOptions& opts) {
    const int n = params.n_streamers;
    const double m = params.total_viewers;
    if (n < 2) throw std::invalid_argument("critical beta needs at least two streamers");
    Vector q0 = opts.initial_quality.size() == n ? opts.initial_quality : Vector::Zero(n);
    const Vector theta = Vector::Constant(n, 1.0 / n);
    const QualityLaw law =
        opts.newton_normalized_qdot ? QualityLaw::NewtonNormalized : QualityLaw::GradientAscent;

    // Per-streamer linearization: own-viewer and own-quality feedback of one
    // streamer, cross-streamer terms excluded.
    const auto indicator = [&](double beta) {
        const MarketParams pb = params.with_network_effect(beta);
        SteadyStateOptions solve = opts.solve;
        solve.freeze_quality = opts.quality_frozen;
        const MarketState start = MarketState::unchecked(Vector::Constant(n, m / n), q0, theta);
        const EquilibriumReport eq = solve_steady_state(pb, start, solve);
        if (!eq.converged)
            throw std::runtime_error("equilibrium failed to converge at beta=" +
                                     format_value(beta));
        const Vector p = choice_probabilities(utilities(pb, eq.state));
        double worst = -std::numeric_limits<double>::infinity();
        for (int i = 0; i < n; ++i) {
            const double pq = p[i] * (1.0 - p[i]);
            const double a11 = pb.viewer_speed * (m * beta * pq - 1.0);
            if (opts.quality_frozen) {
                worst = std::max(worst, a11);
                continue;
            }
            const QualityRowTerms t = quality_row_terms(pb, eq.state, p, i, law);
            const double a12 = pb.viewer_speed * m * pb.attractiveness[i] * pq;
            const double a21 = t.gain * beta * pq;
            const double a22 = t.gain * pb.attractiveness[i] * pq + t.own_cost;
            const double tr = a11 + a22;
            const double disc = 0.25 * (a11 - a22) * (a11 - a22) + a12 * a21;
            const double max_re = disc >= 0.0 ? 0.5 * tr + std::sqrt(disc) : 0.5 * tr;
            worst = std::max(worst, max_re);
        }
        return worst;
    };

    double lo = opts.bracket.first;
    double hi = opts.bracket.second;
    if (!(lo >= 0.0 && hi > lo)) throw std::invalid_argument("invalid bracket");
    if (!(indicator(lo) < 0.0 && indicator(hi) > 0.0))
        throw std::invalid_argument("bracket does not straddle");
    for (int iter = 0; iter < 200 && hi - lo > opts.tol_beta; ++iter) {
        const double mid = 0.5 * (lo + hi);
        (indicator(mid) < 0.0 ? lo : hi) = mid;
    }

    CriticalBetaReport report;
    report.beta_star = 0.5 * (lo + hi);
    report.bracket = opts.bracket;
    report.quality_frozen = opts.quality_frozen;
    if (opts.quality_frozen && params.is_symmetric() && n >= 2)
        report.analytic_reference = static_cast<double>(n) * n / (m * (n - 1));
    return report;
}

double perturbation_decay_rate(const MarketParams& params, const MarketState& state,
                               double relative_size, const StabilityOptions& opts) {
    MarketParams sim = params;
    if (opts.quality_frozen) {
        sim.quality_speed = 0.0;
        sim.validate();
    }
    const int n = params.n_streamers;
    const QualityLaw law =
        opts.newton_normalized_qdot ? QualityLaw::NewtonNormalized : QualityLaw::GradientAscent;
    Matrix full = jacobian_at(sim, state, law);
    const Matrix j = opts.quality_frozen ? Matrix(full.topLeftCorner(n, n)) : std::move(full);

    Eigen::EigenSolver<Matrix> solver(j, /*computeEigenvectors=*/true);
    if (solver.info() != Eigen::Success) throw std::runtime_error("eigensolver stalled");
    Eigen::Index lead = 0;
    for (Eigen::Index i = 1; i < j.rows(); ++i)
        if (solver.eigenvalues()[i].real() > solver.eigenvalues()[lead].real()) lead = i;
    const double rate = -solver.eigenvalues()[lead].real();
    if (!(rate > 0.0)) throw std::invalid_argument("state is not a stable steady state");
    double fastest = rate;
    for (Eigen::Index i = 0; i < j.rows(); ++i)
        fastest = std::max(fastest, std::abs(solver.eigenvalues()[i].real()));

    Vector direction = solver.eigenvectors().col(lead).real();
    if (direction.norm() < 1e-12) direction = solver.eigenvectors().col(lead).imag();
    direction.normalize();

    // Scale the perturbation so viewers and qualities stay nonnegative.
    double size = relative_size * params.total_viewers;
    Vector dn = direction.head(n);
    Vector dq = opts.quality_frozen ? Vector(Vector::Zero(n)) : Vector(direction.tail(n));
    for (int i = 0; i < n; ++i) {
        if (dn[i] < 0.0 && state.viewers[i] + size * dn[i] < 0.0)
            size = 0.5 * state.viewers[i] / -dn[i];
        if (dq[i] < 0.0 && state.quality[i] + size * dq[i] < 0.0)
            size = 0.5 * state.quality[i] / -dq[i];
    }

    const MarketState start = MarketState::unchecked(state.viewers + size * dn,
                                                     state.quality + size * dq, state.allocation);
    IntegratorConfig cfg;
    cfg.horizon = 3.0 / rate;
    cfg.step = std::min(0.05 / params.viewer_speed, 1.0 / fastest);
    const long total_steps = static_cast<long>(std::ceil(cfg.horizon / cfg.step));
    cfg.record_every = std::max(1L, total_steps / 400);
    const Trajectory traj = integrate(sim, start, cfg);

    // Least-squares slope of log ||delta(t)||.
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    const auto count = static_cast<double>(traj.times.size());
    for (std::size_t k = 0; k < traj.times.size(); ++k) {
        const double delta_n = (traj.states[k].viewers - state.viewers).norm();
        const double delta_q = (traj.states[k].quality - state.quality).norm();
        const double y = std::log(std::hypot(delta_n, delta_q));
        sx += traj.times[k];
        sy += y;
        sxx += traj.times[k] * traj.times[k];
        sxy += traj.times[k] * y;
    }
    const double slope = (count * sxy - sx * sy) / (count * sxx - sx * sx);
    return -slope;
}

}  // namespace streammarket
