#pragma once

#include <cmath>
#include <cstddef>
#include <string>

#include "wallsim/error.hpp"

namespace wallsim {

/// The five asymptotic relations between alpha_n and n. Each selects a
/// different continuum energy; the enumerator names the structure of that
/// energy.
enum class Regime : int {
    logarithmic = 1,  ///< alpha_n << 1/n: log-kernel interaction
    nonlocal = 2,     ///< n alpha_n -> c: smooth nonlocal kernel c V(c .)
    quadratic = 3,    ///< 1/n << alpha_n << 1: local a rho^2
    effective = 4,    ///< alpha_n -> c: local c V_eff(c/rho) rho
    constrained = 5,  ///< alpha_n >> 1: rho <= 1 constraint
};

inline int regime_number(Regime r) { return static_cast<int>(r); }

inline Regime regime_from_number(int id) {
    if (id < 1 || id > 5) {
        throw DomainError("regime must be in 1..5, got " + std::to_string(id));
    }
    return static_cast<Regime>(id);
}

/// alpha(n) = coefficient * n^exponent.
struct AlphaRule {
    double coefficient = 1.0;
    double exponent = 0.0;

    double operator()(std::size_t n) const {
        return coefficient * std::pow(static_cast<double>(n), exponent);
    }

    static AlphaRule inv_n(double c = 1.0) { return {c, -1.0}; }
    static AlphaRule inv_sqrt_n(double c = 1.0) { return {c, -0.5}; }
    static AlphaRule constant(double c) { return {c, 0.0}; }
    static AlphaRule power(double c, double exponent) { return {c, exponent}; }
};

/// Regime asymptotics implied by a power-law rule.
inline Regime regime_of(const AlphaRule& rule) {
    const double e = rule.exponent;
    if (e < -1.0) return Regime::logarithmic;
    if (e == -1.0) return Regime::nonlocal;
    if (e < 0.0) return Regime::quadratic;
    if (e == 0.0) return Regime::effective;
    return Regime::constrained;
}

/// Active regime together with its concrete alpha rule. The constant c is the
/// rule's coefficient; it only enters the continuum energies of regimes 2
/// and 4.
class ScalingRegime {
public:
    ScalingRegime(Regime id, AlphaRule rule) : id_(id), rule_(rule) {
        if (!(rule.coefficient > 0.0) || !std::isfinite(rule.coefficient) ||
            !std::isfinite(rule.exponent)) {
            throw DomainError("alpha rule needs a positive finite coefficient");
        }
        if (regime_of(rule) != id) {
            throw DomainError("alpha rule n^" + std::to_string(rule.exponent) +
                              " is inconsistent with regime " +
                              std::to_string(regime_number(id)));
        }
    }

    /// Regime selected by the rule's exponent.
    explicit ScalingRegime(AlphaRule rule) : ScalingRegime(regime_of(rule), rule) {}

    Regime id() const { return id_; }
    const AlphaRule& rule() const { return rule_; }
    double c() const { return rule_.coefficient; }
    double alpha(std::size_t n) const { return rule_(n); }

private:
    Regime id_;
    AlphaRule rule_;
};

}  // namespace wallsim
