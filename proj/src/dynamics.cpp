#include "streammarket/dynamics.hpp"

#include <cmath>
#include <sstream>

namespace streammarket {

namespace {

struct Phase {
    Vector n;
    Vector q;
};

Phase drift(const MarketParams& params, const Phase& x, const Vector& theta) {
    const MarketState s = MarketState::unchecked(x.n, x.q, theta);
    return Phase{viewer_drift(params, s), quality_drift(params, s)};
}

Phase axpy(const Phase& x, double h, const Phase& d) {
    return Phase{x.n + h * d.n, x.q + h * d.q};
}

std::string format_time(double t) {
    std::ostringstream os;
    os << t;
    return os.str();
}

}  // namespace

void IntegratorConfig::validate() const {
    if (!(step > 0.0) || !std::isfinite(step)) throw std::invalid_argument("step must be > 0");
    if (!(horizon > 0.0) || !std::isfinite(horizon))
        throw std::invalid_argument("horizon must be > 0");
    if (step > horizon) throw std::invalid_argument("step must not exceed horizon");
    if (record_every < 1) throw std::invalid_argument("record_every must be >= 1");
}

DivergenceError::DivergenceError(double time, MarketState last_finite)
    : std::runtime_error("divergence at t=" + format_time(time)),
      time_(time),
      last_finite_(std::move(last_finite)) {}

Vector viewer_drift(const MarketParams& params, const MarketState& state) {
    const Vector p = choice_probabilities(utilities(params, state));
    return params.viewer_speed * (params.total_viewers * p - state.viewers);
}

Trajectory integrate(const MarketParams& params, const MarketState& initial,
                     const IntegratorConfig& cfg, const AllocationSchedule& theta_schedule) {
    cfg.validate();
    if (params.viewer_speed * cfg.step >= 2.0)
        throw std::invalid_argument("step too large: viewer_speed * step must be < 2");

    const double m = params.total_viewers;
    const auto theta_at = [&](double t) -> Vector {
        return theta_schedule ? theta_schedule(t) : initial.allocation;
    };

    Trajectory out;
    const auto record = [&](double t, const Phase& x, const Vector& theta) {
        Vector s = x.n / m;
        out.times.push_back(t);
        out.states.push_back(MarketState::unchecked(x.n, x.q, theta));
        out.hhi.push_back(s.squaredNorm());
        out.shares.push_back(std::move(s));
    };

    Phase x{initial.viewers, initial.quality};
    const long steps = static_cast<long>(std::ceil(cfg.horizon / cfg.step - 1e-12));
    double t = 0.0;
    record(t, x, theta_at(0.0));

    for (long k = 0; k < steps; ++k) {
        const double h = std::min(cfg.step, cfg.horizon - t);
        Phase next{Vector(), Vector()};
        if (cfg.method == IntegratorMethod::Euler) {
            next = axpy(x, h, drift(params, x, theta_at(t)));
        } else {
            const Vector theta0 = theta_at(t);
            const Vector theta_half = theta_at(t + 0.5 * h);
            const Vector theta1 = theta_at(t + h);
            const Phase k1 = drift(params, x, theta0);
            const Phase k2 = drift(params, axpy(x, 0.5 * h, k1), theta_half);
            const Phase k3 = drift(params, axpy(x, 0.5 * h, k2), theta_half);
            const Phase k4 = drift(params, axpy(x, h, k3), theta1);
            next.n = x.n + (h / 6.0) * (k1.n + 2.0 * k2.n + 2.0 * k3.n + k4.n);
            next.q = x.q + (h / 6.0) * (k1.q + 2.0 * k2.q + 2.0 * k3.q + k4.q);
        }
        next.q = next.q.cwiseMax(0.0);  // quality cannot go negative
        t += h;

        if (!next.n.allFinite() || !next.q.allFinite())
            throw DivergenceError(t, out.states.back());
        x = std::move(next);

        if ((k + 1) % cfg.record_every == 0 || k + 1 == steps) record(t, x, theta_at(t));
    }
    return out;
}

PathDependenceReport path_dependence_experiment(const MarketParams& params, double epsilon,
                                                const IntegratorConfig& cfg) {
    if (!params.is_symmetric()) throw std::invalid_argument("params not symmetric");
    const int n = params.n_streamers;
    if (n < 2) throw std::invalid_argument("experiment needs at least two streamers");
    const double m = params.total_viewers;
    if (!(epsilon >= 0.0) || epsilon >= m / n)
        throw std::invalid_argument("epsilon must lie in [0, M/N)");

    Vector n0 = Vector::Constant(n, m / n);
    n0[0] += epsilon;
    n0[1] -= epsilon;
    const MarketState initial(n0, Vector::Zero(n), Vector::Constant(n, 1.0 / n));

    PathDependenceReport report;
    report.trajectory = integrate(params, initial, cfg);
    report.times = report.trajectory.times;
    report.delta_n.reserve(report.times.size());
    for (const MarketState& s : report.trajectory.states)
        report.delta_n.push_back(s.viewers[0] - s.viewers[1]);

    const double sign0 = report.delta_n.front() >= 0.0 ? 1.0 : -1.0;
    for (double d : report.delta_n)
        if (d * sign0 < 0.0) report.crossover = true;

    const Vector& final_n = report.trajectory.final_state().viewers;
    int best = 0;
    for (int i = 1; i < n; ++i)
        if (final_n[i] > final_n[best]) best = i;
    bool tie = false;
    for (int i = 0; i < n; ++i)
        if (i != best && final_n[best] - final_n[i] <= 1e-6 * m) tie = true;
    if (!tie) report.dominant = best;
    return report;
}

}  // namespace streammarket
