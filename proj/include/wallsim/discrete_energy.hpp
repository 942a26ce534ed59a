#pragma once

// Discrete energy of n walls at 0 < x_1 < ... < x_n with a fixed barrier wall
// at x_0 = 0:
//
//   E_n(x) = P sum_{0 <= i < j <= n} V(s (x_j - x_i)) + C + (1/n) sum_i x_i,
//
// with s = n alpha_n and, by regime,
//   regimes 2-4:  P = alpha_n / n,                        C = 0,
//   regime 1:     P = 1 / n^2,                             C = -1/2 log(e / (2 n alpha_n)),
//   regime 5:     P = exp(2 (alpha_n - 1)) / (n alpha_n),  C = 0.
// The barrier wall is never part of the state.

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wallsim/error.hpp"
#include "wallsim/potential.hpp"
#include "wallsim/regime.hpp"
#include "wallsim/transport.hpp"

namespace wallsim {

/// Element of Omega_n: strictly increasing positive wall positions.
class WallConfiguration {
public:
    explicit WallConfiguration(std::vector<double> positions) : x_(std::move(positions)) {
        validate(x_);
    }

    std::size_t size() const { return x_.size(); }
    std::span<const double> positions() const { return x_; }
    double operator[](std::size_t i) const { return x_[i]; }

    /// Throws DomainError unless x is in Omega_n.
    static void validate(std::span<const double> x) {
        if (x.empty()) throw DomainError("wall configuration needs n >= 1 walls");
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (!std::isfinite(x[i])) throw DomainError("wall configuration: non-finite position");
            const double left = i == 0 ? 0.0 : x[i - 1];
            if (!(x[i] > left)) {
                throw DomainError(i == 0 ? "wall configuration: x_1 must be positive"
                                         : "wall configuration: positions must be strictly "
                                           "increasing (index " + std::to_string(i) + ")");
            }
        }
    }

    static bool is_valid(std::span<const double> x) {
        try {
            validate(x);
            return true;
        } catch (const DomainError&) {
            return false;
        }
    }

private:
    std::vector<double> x_;
};

struct EnergyScaling {
    double prefactor;  ///< P
    double scale;      ///< s = n alpha_n
    double constant;   ///< C
};

inline EnergyScaling energy_scaling(const ScalingRegime& regime, std::size_t n) {
    const double nd = static_cast<double>(n);
    const double alpha = regime.alpha(n);
    const double s = nd * alpha;
    switch (regime.id()) {
        case Regime::logarithmic:
            return {1.0 / (nd * nd), s, -0.5 * (1.0 - std::log(2.0 * s))};
        case Regime::constrained:
            return {std::exp(2.0 * (alpha - 1.0)) / s, s, 0.0};
        default:
            return {alpha / nd, s, 0.0};
    }
}

struct EnergyOptions {
    /// Skip pair terms with s (x_j - x_i) beyond this radius; off by default.
    std::optional<double> cutoff;

    static EnergyOptions with_cutoff(double radius = 40.0) { return {radius}; }
};

namespace detail {

// Calls body(i, j, r) for every pair 0 <= i < j <= n with r = s (x_j - x_i),
// where index 0 is the barrier. x must be in Omega_n.
template <class Body>
void for_each_pair(std::span<const double> x, double s, const EnergyOptions& opts, Body&& body) {
    const std::size_t n = x.size();
    auto pos = [&](std::size_t k) { return k == 0 ? 0.0 : x[k - 1]; };
    for (std::size_t i = 0; i < n; ++i) {
        const double xi = pos(i);
        for (std::size_t j = i + 1; j <= n; ++j) {
            const double r = s * (x[j - 1] - xi);
            if (opts.cutoff && r > *opts.cutoff) break;  // sorted: r grows with j
            body(i, j, r);
        }
    }
}

inline double loading(std::span<const double> x) {
    double sum = 0.0;
    for (double xi : x) sum += xi;
    return sum / static_cast<double>(x.size());
}

}  // namespace detail

/// E_n on a raw position vector; throws DomainError if x is not in Omega_n.
inline double energy(std::span<const double> x, const ScalingRegime& regime,
                     const EnergyOptions& opts = {}) {
    WallConfiguration::validate(x);
    const auto sc = energy_scaling(regime, x.size());
    double interaction = 0.0;
    detail::for_each_pair(x, sc.scale, opts,
                          [&](std::size_t, std::size_t, double r) { interaction += potential::value(r); });
    return sc.prefactor * interaction + sc.constant + detail::loading(x);
}

inline double energy(const WallConfiguration& x, const ScalingRegime& regime,
                     const EnergyOptions& opts = {}) {
    return energy(x.positions(), regime, opts);
}

/// grad E_n. Component i collects the pair forces with every other wall,
/// including the barrier, plus the load 1/n.
inline std::vector<double> gradient(std::span<const double> x, const ScalingRegime& regime,
                                    const EnergyOptions& opts = {}) {
    WallConfiguration::validate(x);
    const std::size_t n = x.size();
    const auto sc = energy_scaling(regime, n);
    const double k = sc.prefactor * sc.scale;
    std::vector<double> g(n, 1.0 / static_cast<double>(n));
    detail::for_each_pair(x, sc.scale, opts, [&](std::size_t i, std::size_t j, double r) {
        const double f = k * potential::first_derivative(r);
        g[j - 1] += f;
        if (i > 0) g[i - 1] -= f;
    });
    return g;
}

inline std::vector<double> gradient(const WallConfiguration& x, const ScalingRegime& regime,
                                    const EnergyOptions& opts = {}) {
    return gradient(x.positions(), regime, opts);
}

/// Hessian of E_n (symmetric positive definite on Omega_n).
inline Eigen::MatrixXd hessian(std::span<const double> x, const ScalingRegime& regime,
                               const EnergyOptions& opts = {}) {
    WallConfiguration::validate(x);
    const std::size_t n = x.size();
    const auto sc = energy_scaling(regime, n);
    const double k = sc.prefactor * sc.scale * sc.scale;
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n),
                                              static_cast<Eigen::Index>(n));
    detail::for_each_pair(x, sc.scale, opts, [&](std::size_t i, std::size_t j, double r) {
        const double c = k * potential::second_derivative(r);
        const auto jj = static_cast<Eigen::Index>(j - 1);
        h(jj, jj) += c;
        if (i > 0) {
            const auto ii = static_cast<Eigen::Index>(i - 1);
            h(ii, ii) += c;
            h(ii, jj) -= c;
            h(jj, ii) -= c;
        }
    });
    return h;
}

inline Eigen::MatrixXd hessian(const WallConfiguration& x, const ScalingRegime& regime,
                               const EnergyOptions& opts = {}) {
    return hessian(x.positions(), regime, opts);
}

/// (1/n) sum_i delta_{x_i}.
inline EmpiricalMeasure as_empirical(const WallConfiguration& x) {
    return EmpiricalMeasure::uniform({x.positions().begin(), x.positions().end()});
}

/// Inverse of as_empirical on Dom E_n: uniform weights, distinct positive atoms.
inline WallConfiguration as_configuration(const EmpiricalMeasure& mu) {
    if (!mu.is_uniform()) throw DomainError("measure is not in Dom E_n: weights are not 1/n");
    return WallConfiguration({mu.atoms().begin(), mu.atoms().end()});
}

}  // namespace wallsim
