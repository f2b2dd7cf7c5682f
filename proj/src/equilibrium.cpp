#include "streammarket/equilibrium.hpp"

#include <cmath>
#include <random>

namespace streammarket {

namespace {

double marginal_revenue_scale(const MarketParams& params, int i) {
    return (1.0 - params.platform_cut) * params.revenue_rate * params.total_viewers *
           params.attractiveness[i];
}

/// log sum_{k != i} exp(V_k), computed with max-shift stability.
double rest_log_sum(const UtilityVector& v, int i) {
    double shift = -std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < v.size(); ++k)
        if (k != i && v[k] > shift) shift = v[k];
    double acc = 0.0;
    for (Eigen::Index k = 0; k < v.size(); ++k)
        if (k != i) acc += std::exp(v[k] - shift);
    return shift + std::log(acc);
}

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

}  // namespace

double quality_best_response(const MarketParams& params, const MarketState& state, int i) {
    if (i < 0 || i >= params.n_streamers) throw std::out_of_range("streamer index out of range");
    const double scale = marginal_revenue_scale(params, i);
    if (scale <= 0.0) return 0.0;
    if (params.n_streamers == 1) return 0.0;  // P(1-P) = 0 for a monopolist

    const UtilityVector v = utilities(params, state);
    const double rest = rest_log_sum(v, i);
    const double base = -params.price[i] + params.network_effect * state.viewers[i] +
                        params.traffic_sensitivity * state.allocation[i];
    const auto excess = [&](double q) {
        const double p = sigmoid(params.attractiveness[i] * q + base - rest);
        return params.cost.derivative(q) - scale * p * (1.0 - p);
    };

    double hi = 1.0;
    while (params.cost.derivative(hi) <= scale * 0.25) hi *= 2.0;
    if (excess(0.0) >= 0.0) return 0.0;

    double lo = 0.0;
    for (int iter = 0; iter < 200 && hi - lo > 1e-15 * std::max(1.0, hi); ++iter) {
        const double mid = 0.5 * (lo + hi);
        (excess(mid) < 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

EquilibriumReport solve_steady_state(const MarketParams& params, const MarketState& start,
                                     const SteadyStateOptions& opts) {
    if (!(opts.damping > 0.0 && opts.damping <= 1.0))
        throw std::invalid_argument("damping must be in (0, 1]");
    const double m = params.total_viewers;
    const int n = params.n_streamers;
    const double d = opts.damping;

    Vector viewers = start.viewers;
    const double sum0 = viewers.sum();
    if (sum0 > 0.0 && std::abs(sum0 - m) > 0.0) viewers *= m / sum0;
    else if (sum0 <= 0.0) viewers = Vector::Constant(n, m / n);
    Vector quality = start.quality;
    const Vector theta = start.allocation;

    const auto residuals = [&](const MarketState& s, double& rn, double& rq) {
        const Vector p = choice_probabilities(utilities(params, s));
        rn = (s.viewers - m * p).cwiseAbs().maxCoeff();
        rq = 0.0;
        if (!opts.freeze_quality) {
            for (int i = 0; i < n; ++i) {
                const double foc = params.cost.derivative(s.quality[i]) -
                                   marginal_revenue_scale(params, i) * p[i] * (1.0 - p[i]);
                rq = std::max(rq, std::abs(foc));
            }
        }
    };

    EquilibriumReport report{MarketState::unchecked(viewers, quality, theta)};
    for (int iter = 1; iter <= opts.max_iter; ++iter) {
        MarketState s = MarketState::unchecked(viewers, quality, theta);
        const Vector p = choice_probabilities(utilities(params, s));
        viewers = (1.0 - d) * viewers + d * m * p;
        if (!opts.freeze_quality) {
            for (int i = 0; i < n; ++i) {
                const MarketState cur = MarketState::unchecked(viewers, quality, theta);
                quality[i] = (1.0 - d) * quality[i] + d * quality_best_response(params, cur, i);
            }
        }

        MarketState next = MarketState::unchecked(viewers, quality, theta);
        double rn = 0.0, rq = 0.0;
        residuals(next, rn, rq);
        const double tol_n = opts.tol_n >= 0.0 ? opts.tol_n : 1e-8 * m;
        const double tol_q =
            opts.tol_q >= 0.0 ? opts.tol_q : 1e-8 * std::max(1.0, quality.maxCoeff());
        report.state = std::move(next);
        report.residual_n = rn;
        report.residual_q = rq;
        report.iterations = iter;
        if (rn <= tol_n && rq <= tol_q) {
            report.converged = true;
            break;
        }
    }
    return report;
}

MarketState random_interior_state(const MarketParams& params, const Vector& allocation,
                                  std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const int n = params.n_streamers;

    Vector viewers(n);
    for (int i = 0; i < n; ++i) viewers[i] = -std::log(std::max(unit(rng), 1e-300));
    viewers *= params.total_viewers / viewers.sum();

    double scale = 0.0;
    for (int i = 0; i < n; ++i) scale = std::max(scale, marginal_revenue_scale(params, i));
    double q_cap = 1.0;
    while (params.cost.derivative(q_cap) < 0.25 * scale && q_cap < 1e12) q_cap *= 2.0;
    Vector quality(n);
    for (int i = 0; i < n; ++i) quality[i] = q_cap * unit(rng);

    return MarketState::unchecked(viewers, quality, allocation);
}

std::vector<std::pair<MarketState, MarketState>> basin_probe(const MarketParams& params,
                                                             const Vector& allocation, int count,
                                                             std::uint64_t seed,
                                                             const SteadyStateOptions& opts) {
    std::vector<std::pair<MarketState, MarketState>> pairs;
    pairs.reserve(count);
    for (int k = 0; k < count; ++k) {
        MarketState start = random_interior_state(params, allocation, seed + k);
        EquilibriumReport report = solve_steady_state(params, start, opts);
        pairs.emplace_back(std::move(start), std::move(report.state));
    }
    return pairs;
}

}  // namespace streammarket
