#include "streammarket/market.hpp"

#include <cmath>
#include <limits>
#include <utility>

namespace streammarket {

namespace {

void require(bool ok, const std::string& message) {
    if (!ok) throw std::invalid_argument(message);
}

}  // namespace

CostSpec CostSpec::quadratic(double kappa) {
    require(std::isfinite(kappa) && kappa > 0.0, "cost: kappa must be > 0");
    return CostSpec(Kind::Quadratic, kappa, 0.0, 0.0);
}

CostSpec CostSpec::cubic(double a, double b) {
    require(std::isfinite(a) && a > 0.0, "cost: a must be > 0");
    require(std::isfinite(b) && b > 0.0, "cost: b must be > 0");
    return CostSpec(Kind::Cubic, 0.0, a, b);
}

double CostSpec::value(double q) const {
    return kind_ == Kind::Quadratic ? 0.5 * kappa_ * q * q : a_ * q * q + b_ * q * q * q;
}

double CostSpec::derivative(double q) const {
    return kind_ == Kind::Quadratic ? kappa_ * q : 2.0 * a_ * q + 3.0 * b_ * q * q;
}

double CostSpec::second_derivative(double q) const {
    return kind_ == Kind::Quadratic ? kappa_ : 2.0 * a_ + 6.0 * b_ * q;
}

double CostSpec::third_derivative(double /*q*/) const {
    return kind_ == Kind::Quadratic ? 0.0 : 6.0 * b_;
}

MarketParams::MarketParams(int n_streamers_, double total_viewers_, Vector attractiveness_,
                           Vector price_, double network_effect_, double viewer_speed_,
                           double quality_speed_, double platform_cut_, double revenue_rate_,
                           double traffic_sensitivity_, double discount_rate_, CostSpec cost_)
    : n_streamers(n_streamers_),
      total_viewers(total_viewers_),
      attractiveness(std::move(attractiveness_)),
      price(std::move(price_)),
      network_effect(network_effect_),
      viewer_speed(viewer_speed_),
      quality_speed(quality_speed_),
      platform_cut(platform_cut_),
      revenue_rate(revenue_rate_),
      traffic_sensitivity(traffic_sensitivity_),
      discount_rate(discount_rate_),
      cost(cost_) {
    validate();
}

MarketParams MarketParams::symmetric(int n, double m, double alpha, double p, double beta,
                                     double gamma, double eta, double tau, double r,
                                     double phi, double rho, CostSpec cost) {
    return MarketParams(n, m, Vector::Constant(n, alpha), Vector::Constant(n, p), beta,
                        gamma, eta, tau, r, phi, rho, cost);
}

bool MarketParams::is_symmetric(double tol) const {
    const double alpha_spread = attractiveness.maxCoeff() - attractiveness.minCoeff();
    const double price_spread = price.maxCoeff() - price.minCoeff();
    return alpha_spread <= tol && price_spread <= tol;
}

void MarketParams::validate() const {
    require(n_streamers >= 1, "n_streamers must be >= 1");
    require(std::isfinite(total_viewers) && total_viewers > 0.0, "total_viewers must be > 0");
    require(attractiveness.size() == n_streamers, "attractiveness must have length n_streamers");
    require(price.size() == n_streamers, "price must have length n_streamers");
    for (int i = 0; i < n_streamers; ++i) {
        require(std::isfinite(attractiveness[i]) && attractiveness[i] >= 0.0,
                "attractiveness must be >= 0");
        require(std::isfinite(price[i]) && price[i] >= 0.0, "price must be >= 0");
    }
    require(std::isfinite(network_effect) && network_effect >= 0.0, "network_effect must be >= 0");
    require(std::isfinite(viewer_speed) && viewer_speed > 0.0, "viewer_speed must be > 0");
    require(std::isfinite(quality_speed) && quality_speed >= 0.0, "quality_speed must be >= 0");
    require(std::isfinite(platform_cut) && platform_cut >= 0.0 && platform_cut < 1.0,
            "platform_cut must be in [0, 1)");
    require(std::isfinite(revenue_rate) && revenue_rate > 0.0, "revenue_rate must be > 0");
    require(std::isfinite(traffic_sensitivity) && traffic_sensitivity >= 0.0,
            "traffic_sensitivity must be >= 0");
    require(std::isfinite(discount_rate) && discount_rate >= 0.0, "discount_rate must be >= 0");
}

MarketParams MarketParams::with_network_effect(double beta) const {
    MarketParams out = *this;
    out.network_effect = beta;
    out.validate();
    return out;
}

MarketState::MarketState(Vector n, Vector q, Vector theta)
    : viewers(std::move(n)), quality(std::move(q)), allocation(std::move(theta)) {
    validate();
}

MarketState::MarketState(Unchecked, Vector n, Vector q, Vector theta)
    : viewers(std::move(n)), quality(std::move(q)), allocation(std::move(theta)) {}

MarketState MarketState::unchecked(Vector n, Vector q, Vector theta) {
    return MarketState(Unchecked{}, std::move(n), std::move(q), std::move(theta));
}

void MarketState::validate() const {
    const auto n = viewers.size();
    require(n >= 1, "state must have at least one streamer");
    require(quality.size() == n && allocation.size() == n,
            "viewers, quality, allocation must have equal length");
    for (Eigen::Index i = 0; i < n; ++i) {
        require(std::isfinite(viewers[i]) && viewers[i] >= 0.0, "viewers must be >= 0");
        require(std::isfinite(quality[i]) && quality[i] >= 0.0, "quality must be >= 0");
        require(std::isfinite(allocation[i]) && allocation[i] >= 0.0, "allocation must be >= 0");
    }
    require(std::abs(allocation.sum() - 1.0) <= 1e-12, "allocation does not sum to 1");
}

UtilityVector utilities(const MarketParams& params, const MarketState& state) {
    return params.attractiveness.cwiseProduct(state.quality) - params.price +
           params.network_effect * state.viewers +
           params.traffic_sensitivity * state.allocation;
}

Vector choice_probabilities(const UtilityVector& v) {
    if (!v.allFinite()) throw std::domain_error("invalid utility");
    const double shift = v.maxCoeff();
    Vector p = (v.array() - shift).exp();
    p /= p.sum();
    return p;
}

double log_sum_exp(const UtilityVector& v) {
    if (!v.allFinite()) throw std::domain_error("invalid utility");
    const double shift = v.maxCoeff();
    return shift + std::log((v.array() - shift).exp().sum());
}

ProbabilityJacobians probability_jacobians(const MarketParams& params,
                                           const MarketState& state) {
    const Vector p = choice_probabilities(utilities(params, state));
    // Shared logit kernel dP_i/dV_j = delta_ij P_i - P_i P_j; each channel
    // scales column j by dV_j/dx_j.
    Matrix kernel = -p * p.transpose();
    kernel.diagonal() += p;

    ProbabilityJacobians out;
    out.dn = params.network_effect * kernel;
    out.dq = kernel * params.attractiveness.asDiagonal();
    out.dtheta = params.traffic_sensitivity * kernel;
    return out;
}

double streamer_profit(const MarketParams& params, const MarketState& state, int i) {
    if (i < 0 || i >= params.n_streamers) throw std::out_of_range("streamer index out of range");
    return (1.0 - params.platform_cut) * params.revenue_rate * state.viewers[i] -
           params.cost.value(state.quality[i]);
}

Vector quality_drift(const MarketParams& params, const MarketState& state, QualityLaw law) {
    const Vector p = choice_probabilities(utilities(params, state));
    const double margin = (1.0 - params.platform_cut) * params.revenue_rate * params.total_viewers;
    const int n = params.n_streamers;
    Vector out(n);
    for (int i = 0; i < n; ++i) {
        double g = margin * params.attractiveness[i] * p[i] * (1.0 - p[i]) -
                   params.cost.derivative(state.quality[i]);
        if (law == QualityLaw::NewtonNormalized) g /= params.cost.second_derivative(state.quality[i]);
        out[i] = params.quality_speed * g;
    }
    return out;
}

}  // namespace streammarket
