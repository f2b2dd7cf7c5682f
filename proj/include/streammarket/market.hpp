#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace streammarket {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Deterministic viewer utility per streamer, V_i = alpha_i q_i - p_i + beta n_i + phi theta_i.
using UtilityVector = Eigen::VectorXd;

/// Content-production cost curve. Strictly convex with c(0) = 0, so marginal
/// cost starts at zero and eventually crosses any bounded marginal revenue.
///
/// Quadratic: c(q) = kappa q^2 / 2 (third derivative identically zero).
/// Cubic:     c(q) = a q^2 + b q^3, restricted to q >= 0.
class CostSpec {
  public:
    enum class Kind { Quadratic, Cubic };

    static CostSpec quadratic(double kappa);
    static CostSpec cubic(double a, double b);

    Kind kind() const { return kind_; }
    double kappa() const { return kappa_; }
    double cubic_a() const { return a_; }
    double cubic_b() const { return b_; }

    double value(double q) const;
    double derivative(double q) const;
    double second_derivative(double q) const;
    double third_derivative(double q) const;

  private:
    CostSpec(Kind kind, double kappa, double a, double b)
        : kind_(kind), kappa_(kappa), a_(a), b_(b) {}

    Kind kind_;
    double kappa_;
    double a_;
    double b_;
};

/// All exogenous market constants. Validated once at construction; every
/// operation in the library assumes a validated instance.
class MarketParams {
  public:
    int n_streamers;           ///< N >= 1
    double total_viewers;      ///< M > 0, continuous viewer mass
    Vector attractiveness;     ///< alpha_i >= 0, length N
    Vector price;              ///< p_i >= 0, length N
    double network_effect;     ///< beta >= 0, utility per co-viewer
    double viewer_speed;       ///< gamma > 0, 1/time
    double quality_speed;      ///< eta >= 0, 1/time (0 freezes quality)
    double platform_cut;       ///< tau in [0, 1)
    double revenue_rate;       ///< R > 0, revenue per viewer per unit time
    double traffic_sensitivity;///< phi >= 0, utility per unit allocation weight
    double discount_rate;      ///< rho >= 0, used by the dynamic allocation solver
    CostSpec cost;

    MarketParams(int n_streamers, double total_viewers, Vector attractiveness,
                 Vector price, double network_effect, double viewer_speed,
                 double quality_speed, double platform_cut, double revenue_rate,
                 double traffic_sensitivity, double discount_rate, CostSpec cost);

    /// Identical streamers: alpha_i = alpha, p_i = p for all i.
    static MarketParams symmetric(int n_streamers, double total_viewers,
                                  double alpha, double p, double network_effect,
                                  double viewer_speed, double quality_speed,
                                  double platform_cut, double revenue_rate,
                                  double traffic_sensitivity, double discount_rate,
                                  CostSpec cost);

    bool is_symmetric(double tol = 0.0) const;

    /// Re-checks every field constraint; throws std::invalid_argument naming
    /// the offending field.
    void validate() const;

    /// Copy with a different network-effect strength.
    MarketParams with_network_effect(double beta) const;
};

/// Endogenous variables at an instant: viewer counts, qualities, and the
/// platform's traffic-allocation weights (a point on the simplex).
class MarketState {
  public:
    Vector viewers;     ///< n_i >= 0
    Vector quality;     ///< q_i >= 0
    Vector allocation;  ///< theta_i >= 0, sum = 1 within 1e-12

    MarketState(Vector viewers, Vector quality, Vector allocation);

    /// Skips validation; internal fast path for integrator-produced states.
    static MarketState unchecked(Vector viewers, Vector quality, Vector allocation);

    int size() const { return static_cast<int>(viewers.size()); }
    void validate() const;

  private:
    struct Unchecked {};
    MarketState(Unchecked, Vector n, Vector q, Vector theta);
};

struct ProbabilityJacobians {
    Matrix dn;      ///< dP_i/dn_j     = beta  (delta_ij P_i - P_i P_j)
    Matrix dq;      ///< dP_i/dq_j     = alpha_j (delta_ij P_i - P_i P_j)
    Matrix dtheta;  ///< dP_i/dtheta_j = phi   (delta_ij P_i - P_i P_j)
};

/// Which quality adjustment law the drift and its Jacobian rows follow.
/// GradientAscent:   qdot_i = eta [ (1-tau) R M alpha_i P_i (1-P_i) - c'(q_i) ]
/// NewtonNormalized: the same bracket divided by c''(q_i) (adds a c'''/c''
/// term to the q-row diagonal away from a steady state).
enum class QualityLaw { GradientAscent, NewtonNormalized };

UtilityVector utilities(const MarketParams& params, const MarketState& state);

/// Stable softmax: P_i = exp(V_i) / sum_k exp(V_k). Throws std::domain_error
/// ("invalid utility") on non-finite input.
Vector choice_probabilities(const UtilityVector& v);

/// Stable log(sum_k exp(V_k)); same domain check as choice_probabilities.
double log_sum_exp(const UtilityVector& v);

ProbabilityJacobians probability_jacobians(const MarketParams& params,
                                           const MarketState& state);

/// pi_i = (1 - tau) R n_i - c(q_i). Throws std::out_of_range on a bad index.
double streamer_profit(const MarketParams& params, const MarketState& state, int i);

Vector quality_drift(const MarketParams& params, const MarketState& state,
                     QualityLaw law = QualityLaw::GradientAscent);

}  // namespace streammarket
