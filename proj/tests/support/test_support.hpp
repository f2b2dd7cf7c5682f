#pragma once

#include "streammarket/market.hpp"

#include <functional>
#include <random>

namespace smtest {

using streammarket::CostSpec;
using streammarket::MarketParams;
using streammarket::MarketState;
using streammarket::Matrix;
using streammarket::Vector;

inline Vector random_simplex(int n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(1e-12, 1.0);
    Vector v(n);
    for (int i = 0; i < n; ++i) v[i] = -std::log(unit(rng));
    return v / v.sum();
}

struct RandomInstance {
    MarketParams params;
    MarketState state;
};

/// Moderate-scale random market: utilities stay O(10) so softmax and its
/// derivatives are well conditioned for finite-difference checks.
inline RandomInstance random_instance(std::mt19937_64& rng, int n_min = 2, int n_max = 6) {
    std::uniform_int_distribution<int> n_dist(n_min, n_max);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const int n = n_dist(rng);
    const double m = 50.0 + 1950.0 * unit(rng);

    Vector alpha(n), price(n);
    for (int i = 0; i < n; ++i) alpha[i] = 0.2 + 1.8 * unit(rng);
    for (int i = 0; i < n; ++i) price[i] = unit(rng);

    const double beta = 3.0 * unit(rng) / m;
    const double gamma = 0.5 + 1.5 * unit(rng);
    const double eta = 0.5 + unit(rng);
    const double tau = 0.1 + 0.4 * unit(rng);
    const double revenue = 0.5 + 1.5 * unit(rng);
    const double phi = 0.1 + 0.9 * unit(rng);
    const double rho = 0.1 + unit(rng);
    const CostSpec cost = unit(rng) < 0.5
                              ? CostSpec::quadratic(20.0 + 380.0 * unit(rng))
                              : CostSpec::cubic(10.0 + 90.0 * unit(rng), 1.0 + 9.0 * unit(rng));

    MarketParams params(n, m, alpha, price, beta, gamma, eta, tau, revenue, phi, rho, cost);

    Vector viewers = m * random_simplex(n, rng);
    Vector quality(n);
    for (int i = 0; i < n; ++i) quality[i] = 3.0 * unit(rng);
    MarketState state(viewers, quality, random_simplex(n, rng));
    return {std::move(params), std::move(state)};
}

/// Central finite difference of a vector-valued function, one input column.
inline Vector central_difference(const std::function<Vector(const Vector&)>& f, const Vector& x,
                                 int column, double step) {
    Vector plus = x, minus = x;
    plus[column] += step;
    minus[column] -= step;
    return (f(plus) - f(minus)) / (2.0 * step);
}

/// Full finite-difference Jacobian df_i/dx_j.
inline Matrix fd_jacobian(const std::function<Vector(const Vector&)>& f, const Vector& x,
                          double step = 1e-6) {
    const Vector f0 = f(x);
    Matrix j(f0.size(), x.size());
    for (int col = 0; col < x.size(); ++col) j.col(col) = central_difference(f, x, col, step);
    return j;
}

inline double relative_matrix_error(const Matrix& got, const Matrix& want) {
    const double scale = std::max(1.0, want.cwiseAbs().maxCoeff());
    return (got - want).cwiseAbs().maxCoeff() / scale;
}

inline double relative_vector_error(const Vector& got, const Vector& want) {
    const double scale = std::max(1.0, want.cwiseAbs().maxCoeff());
    return (got - want).cwiseAbs().maxCoeff() / scale;
}

}  // namespace smtest
