#pragma once

// Wall-wall interaction potential
//
//     V(r) = r coth r - log|sinh r| - log 2,
//
// which behaves like -log|r| at short range and like 2|r| exp(-2|r|) at long
// range. Every evaluator is split into three branches:
//   |r| < 1e-3      Taylor series about the logarithmic singularity,
//   1e-3 <= |r| < 1 the closed form,
//   |r| >= 1        the closed form rewritten in e = exp(-2|r|), which neither
//                   cancels nor overflows.

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "wallsim/error.hpp"

namespace wallsim::potential {

inline constexpr double series_radius = 1e-3;
inline constexpr double exponential_radius = 1.0;

namespace detail {

inline void require_nonzero_finite(double r, const char* who) {
    if (!std::isfinite(r)) {
        throw DomainError(std::string(who) + ": non-finite argument");
    }
    if (r == 0.0) {
        throw DomainError(std::string(who) + ": logarithmic singularity at r = 0");
    }
}

}  // namespace detail

/// V(r) + log|r|, which is smooth (even, analytic) at r = 0 with value 1 - log 2.
/// Used to integrate V against smooth weights near the singularity.
inline double regular_part(double r) {
    const double x = std::abs(r);
    if (x < series_radius) {
        const double x2 = x * x;
        return 1.0 - std::numbers::ln2 + x2 / 6.0 - x2 * x2 / 60.0;
    }
    if (!std::isfinite(x)) {
        throw DomainError("potential::regular_part: non-finite argument");
    }
    if (x < exponential_radius) {
        return x / std::tanh(x) - std::log(std::sinh(x) / x) - std::numbers::ln2;
    }
    const double e = std::exp(-2.0 * x);
    return 2.0 * x * e / (1.0 - e) - std::log1p(-e) + std::log(x);
}

/// V(r). Throws DomainError for r = 0 or non-finite r.
inline double value(double r) {
    detail::require_nonzero_finite(r, "potential::value");
    const double x = std::abs(r);
    if (x < series_radius) {
        return regular_part(x) - std::log(x);
    }
    if (x < exponential_radius) {
        return x / std::tanh(x) - std::log(std::sinh(x)) - std::numbers::ln2;
    }
    const double e = std::exp(-2.0 * x);
    return 2.0 * x * e / (1.0 - e) - std::log1p(-e);
}

/// V'(r) = -r / sinh^2 r.
inline double first_derivative(double r) {
    detail::require_nonzero_finite(r, "potential::first_derivative");
    const double x = std::abs(r);
    if (x < series_radius) {
        const double r2 = r * r;
        return -1.0 / r + r / 3.0 - r * r2 / 15.0 + 2.0 * r * r2 * r2 / 189.0;
    }
    if (x < exponential_radius) {
        const double s = std::sinh(r);
        return -r / (s * s);
    }
    const double e = std::exp(-2.0 * x);
    const double one_minus = 1.0 - e;
    return -r * 4.0 * e / (one_minus * one_minus);
}

/// V''(r) = -1/sinh^2 r + 2 r cosh r / sinh^3 r. Positive on r != 0.
inline double second_derivative(double r) {
    detail::require_nonzero_finite(r, "potential::second_derivative");
    const double x = std::abs(r);
    if (x < series_radius) {
        const double x2 = x * x;
        return 1.0 / x2 + 1.0 / 3.0 - x2 / 5.0 + 10.0 * x2 * x2 / 189.0;
    }
    if (x < exponential_radius) {
        const double s = std::sinh(x);
        return -1.0 / (s * s) + 2.0 * x * std::cosh(x) / (s * s * s);
    }
    const double e = std::exp(-2.0 * x);
    const double one_minus = 1.0 - e;
    const double inv_sinh2 = 4.0 * e / (one_minus * one_minus);
    return -inv_sinh2 + 2.0 * x * inv_sinh2 * (1.0 + e) / one_minus;
}

inline constexpr long effective_max_terms = 1'000'000;
inline constexpr double effective_relative_cutoff = 1e-16;

namespace detail {

// Sums term(k) for k = 1, 2, ... until a term drops below the relative
// cutoff of the running sum. Terms must be nonnegative and eventually
// decreasing.
template <class Term>
double truncated_series(Term term) {
    double sum = 0.0;
    for (long k = 1; k <= effective_max_terms; ++k) {
        const double t = term(static_cast<double>(k));
        sum += t;
        if (t <= effective_relative_cutoff * sum) {
            break;
        }
    }
    return sum;
}

inline void require_positive(double r, const char* who) {
    if (!(r > 0.0) || !std::isfinite(r)) {
        throw DomainError(std::string(who) + ": spacing must be positive and finite");
    }
}

}  // namespace detail

/// V_eff(r) = sum_{k>=1} V(k r), r > 0.
inline double effective(double r) {
    detail::require_positive(r, "potential::effective");
    return detail::truncated_series([r](double k) { return value(k * r); });
}

/// V_eff'(r) = sum_{k>=1} k V'(k r), r > 0. Negative.
inline double effective_first_derivative(double r) {
    detail::require_positive(r, "potential::effective_first_derivative");
    return -detail::truncated_series([r](double k) { return -k * first_derivative(k * r); });
}

/// V_eff''(r) = sum_{k>=1} k^2 V''(k r), r > 0.
inline double effective_second_derivative(double r) {
    detail::require_positive(r, "potential::effective_second_derivative");
    return detail::truncated_series([r](double k) { return k * k * second_derivative(k * r); });
}

/// Integral of V over [lo, hi] with 0 <= lo < hi <= +inf. The logarithmic part
/// is integrated in closed form below r = 1; the rest by adaptive quadrature.
inline double integral(double lo, double hi) {
    if (!(lo >= 0.0) || !(hi > lo)) {
        throw DomainError("potential::integral: need 0 <= lo < hi");
    }
    constexpr double tol = 1e-15;
    using boost::math::quadrature::gauss_kronrod;

    double total = 0.0;
    const double split = 1.0;
    if (lo < split) {
        const double b = std::min(hi, split);
        // int_lo^b (-log r) dr = [r - r log r]_lo^b, with 0 log 0 = 0.
        const auto anti = [](double r) { return r > 0.0 ? r - r * std::log(r) : 0.0; };
        total += anti(b) - anti(lo);
        total += gauss_kronrod<double, 31>::integrate(regular_part, lo, b, 15, tol);
    }
    if (hi > split) {
        const double a = std::max(lo, split);
        if (std::isinf(hi)) {
            boost::math::quadrature::exp_sinh<double> tail;
            total += tail.integrate([](double r) { return value(r); }, a,
                                    std::numeric_limits<double>::infinity(), tol);
        } else {
            total += gauss_kronrod<double, 31>::integrate([](double r) { return value(r); }, a, hi,
                                                          15, tol);
        }
    }
    return total;
}

/// a = integral of V over (0, inf). Computed once.
inline double integral() {
    static const double a =
        integral(0.0, 1.0) + integral(1.0, std::numeric_limits<double>::infinity());
    return a;
}

}  // namespace wallsim::potential
