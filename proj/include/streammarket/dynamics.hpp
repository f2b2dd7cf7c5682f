#pragma once

#include "streammarket/market.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace streammarket {

/// Time-varying allocation override. When absent, the initial state's
/// allocation is held constant over the whole horizon.
using AllocationSchedule = std::function<Vector(double t)>;

enum class IntegratorMethod { RK4, Euler };

struct IntegratorConfig {
    double step = 0.01;                              ///< dt > 0, dt <= horizon
    double horizon = 10.0;                           ///< T > 0
    IntegratorMethod method = IntegratorMethod::RK4;
    int record_every = 1;                            ///< sample every k-th step

    void validate() const;
};

/// Time-indexed sample path with per-sample market shares and concentration.
struct Trajectory {
    std::vector<double> times;
    std::vector<MarketState> states;
    std::vector<Vector> shares;  ///< s_i = n_i / M per sample
    std::vector<double> hhi;     ///< sum_i s_i^2 per sample

    const MarketState& final_state() const { return states.back(); }
};

/// Thrown when the integrated state stops being finite; carries the last
/// finite sample so callers can inspect how far the run got.
class DivergenceError : public std::runtime_error {
  public:
    DivergenceError(double time, MarketState last_finite);

    double time() const { return time_; }
    const MarketState& last_finite_state() const { return last_finite_; }

  private:
    double time_;
    MarketState last_finite_;
};

struct PathDependenceReport {
    std::vector<double> times;
    std::vector<double> delta_n;       ///< n_1(t) - n_2(t)
    std::optional<int> dominant;       ///< largest final n_i; nullopt on a tie
    bool crossover = false;            ///< true if delta_n ever changed sign
    Trajectory trajectory;
};

/// ndot_i = gamma ( M P_i - n_i ).
Vector viewer_drift(const MarketParams& params, const MarketState& state);

/// Integrates viewer adjustment and quality drift jointly, clamping quality
/// at zero from below. Samples every cfg.record_every steps (first and last
/// samples always included). Throws DivergenceError on a non-finite state and
/// std::invalid_argument when gamma * dt >= 2 (explicit-scheme guard).
Trajectory integrate(const MarketParams& params, const MarketState& initial,
                     const IntegratorConfig& cfg,
                     const AllocationSchedule& theta_schedule = nullptr);

/// Two otherwise-identical streamers seeded at M/N +- epsilon (remaining
/// streamers, if any, start at M/N). Requires symmetric params and
/// epsilon < M/N.
PathDependenceReport path_dependence_experiment(const MarketParams& params, double epsilon,
                                                const IntegratorConfig& cfg);

}  // namespace streammarket
