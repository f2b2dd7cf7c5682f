#pragma once

#include "streammarket/equilibrium.hpp"
#include "streammarket/market.hpp"

#include <complex>
#include <optional>
#include <vector>

namespace streammarket {

enum class JacobianMethod { Analytic, FiniteDifference };

struct StabilityOptions {
    double tol_eig = 1e-9;
    bool newton_normalized_qdot = false;  ///< 1/c''-normalized quality rows
    bool quality_frozen = false;          ///< classify the viewer block alone
    JacobianMethod method = JacobianMethod::Analytic;
};

struct StabilityReport {
    Matrix jacobian;  ///< viewer block first, then quality block
    std::vector<std::complex<double>> eigenvalues;  ///< sorted by descending real part
    double max_real_part = 0.0;
    bool stable = false;  ///< max_real_part < -tol_eig
    JacobianMethod method = JacobianMethod::Analytic;
    bool at_steady_state = true;  ///< false flags a non-steady input (still computed)
};

struct CriticalBetaReport {
    double beta_star = 0.0;
    std::pair<double, double> bracket{0.0, 0.0};
    bool quality_frozen = true;
    /// N^2 / (M (N-1)); present only for symmetric params with quality frozen.
    std::optional<double> analytic_reference;
};

struct CriticalBetaOptions {
    bool quality_frozen = true;
    std::pair<double, double> bracket{0.0, 1.0};
    double tol_beta = 1e-9;
    Vector initial_quality;  ///< quality held (frozen) or used as solver start; zeros if empty
    bool newton_normalized_qdot = false;
    SteadyStateOptions solve;
};

/// Full 2N x 2N Jacobian of (viewer_drift, quality_drift) at a state,
/// including all cross-streamer terms. The quality rows follow `law`.
Matrix jacobian_at(const MarketParams& params, const MarketState& state,
                   QualityLaw law = QualityLaw::GradientAscent);

/// Central finite-difference Jacobian of the same drift field.
Matrix jacobian_fd(const MarketParams& params, const MarketState& state,
                   QualityLaw law = QualityLaw::GradientAscent, double step = 1e-6);

/// Dense spectrum, sorted by descending real part (ties: descending imaginary
/// part). Throws std::runtime_error("eigensolver stalled") if the QR
/// iteration fails to converge.
std::vector<std::complex<double>> eigenvalues(const Matrix& matrix);

StabilityReport classify_stability(const MarketParams& params, const MarketState& state,
                                   const StabilityOptions& opts = {});

/// Locates the network-effect strength where the symmetric steady state loses
/// local stability, bisecting on the per-streamer linearization (the
/// viewer/quality block of a single streamer; cross-streamer feedback is
/// excluded so the frozen-quality symmetric threshold is exactly
/// N^2 / (M (N-1))). classify_stability, by contrast, judges the full
/// cross-term Jacobian.
CriticalBetaReport critical_beta(const MarketParams& params, const CriticalBetaOptions& opts);

/// Simulates a small perturbation along the leading eigenvector of a stable
/// steady state and returns the fitted exponential decay rate of its norm
/// (positive number; compare against -max Re lambda).
double perturbation_decay_rate(const MarketParams& params, const MarketState& state,
                               double relative_size = 1e-4,
                               const StabilityOptions& opts = {});

}  // namespace streammarket
