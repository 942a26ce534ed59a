#pragma once

// Quick oracle checks for `wallsim selftest`. Each check compares a library
// routine with an independent computation.

#include <cmath>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "wallsim/discrete_energy.hpp"
#include "wallsim/dynamics.hpp"
#include "wallsim/potential.hpp"
#include "wallsim/transport.hpp"

namespace wallsim {

struct SelftestCheck {
    std::string name;
    bool passed;
    std::string detail;
};

namespace detail {

inline std::string sci(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", v);
    return buf;
}

inline SelftestCheck check_integral() {
    double basel = 0.0;
    constexpr int terms = 1'000'000;
    for (int k = terms - 1; k >= 1; --k) basel += 1.0 / (static_cast<double>(k) * k);
    const double n = terms;
    basel += 1.0 / n + 1.0 / (2.0 * n * n) + 1.0 / (6.0 * n * n * n);
    const double err = std::abs(potential::integral() - basel);
    return {"integral a = pi^2/6", err <= 1e-10, "error " + sci(err)};
}

inline SelftestCheck check_potential() {
    // closed form in long double away from the branch switch points
    double worst = 0.0;
    for (double r : {0.05, 0.5, 0.9, 1.7, 4.0}) {
        const long double x = r;
        const long double ref = x * std::cosh(x) / std::sinh(x) - std::log(std::sinh(x)) - std::log(2.0L);
        worst = std::max(worst, static_cast<double>(std::abs(potential::value(r) - ref) / ref));
    }
    return {"potential closed form", worst <= 1e-13, "relative error " + sci(worst)};
}

inline SelftestCheck check_transport() {
    std::mt19937_64 rng(12345);
    std::uniform_real_distribution<double> pos(0.0, 2.0), w(0.1, 1.0);
    std::uniform_int_distribution<int> count(1, 6);
    double worst = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        auto make = [&](std::size_t n) {
            std::vector<double> a(n), b(n);
            double total = 0.0;
            for (std::size_t i = 0; i < n; ++i) a[i] = pos(rng), total += (b[i] = w(rng));
            for (double& x : b) x /= total;
            return EmpiricalMeasure::sorted(a, b);
        };
        const auto mu = make(static_cast<std::size_t>(count(rng)));
        const auto nu = make(static_cast<std::size_t>(count(rng)));
        worst = std::max(worst, std::abs(w2_empirical(mu, nu) - brute_force_w2(mu, nu)));
    }
    return {"w2 vs brute-force transport", worst <= 1e-10, "max difference " + sci(worst)};
}

inline SelftestCheck check_gradient() {
    const std::vector<double> x{0.3, 0.7, 1.6};
    const AlphaRule rules[] = {AlphaRule::power(1.0, -2.0), AlphaRule::inv_n(), AlphaRule::inv_sqrt_n(),
                               AlphaRule::constant(1.0), AlphaRule::power(1.0, 0.5)};
    double worst = 0.0;
    for (const auto& rule : rules) {
        const ScalingRegime reg{rule};
        const auto g = gradient(x, reg);
        for (std::size_t i = 0; i < x.size(); ++i) {
            auto xp = x, xm = x;
            xp[i] += 1e-6;
            xm[i] -= 1e-6;
            const double fd = (energy(xp, reg) - energy(xm, reg)) / 2e-6;
            worst = std::max(worst, std::abs(g[i] - fd) / std::max(1.0, std::abs(g[i])));
        }
    }
    return {"gradient vs finite differences", worst <= 1e-6, "relative error " + sci(worst)};
}

inline SelftestCheck check_newton_root() {
    double lo = 0.1, hi = 3.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (mid / (std::sinh(mid) * std::sinh(mid)) > 1.0 ? lo : hi) = mid;
    }
    const auto eq = equilibrium(WallConfiguration({1.0}), ScalingRegime{AlphaRule::constant(1.0)});
    const double err = std::abs(eq[0] - 0.5 * (lo + hi));
    return {"single-wall Newton root vs bisection", err <= 1e-6, "error " + sci(err)};
}

}  // namespace detail

inline std::vector<SelftestCheck> run_selftest() {
    return {detail::check_integral(), detail::check_potential(), detail::check_transport(),
            detail::check_gradient(), detail::check_newton_root()};
}

}  // namespace wallsim
