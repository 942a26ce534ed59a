#pragma once

// Continuum limits of the wall energy and their Wasserstein gradient flows.
//
// Energies (first moment plus a regime-dependent term):
//   E1  + 1/2 int int -log|x - y| dmu dmu
//   E2  + c/2 int int V(c (x - y)) dmu dmu
//   E3  + a int rho^2
//   E4  + c int V_eff(c / rho) rho
//   E5  + 0 if rho <= 1, +inf otherwise
//
// Gradient flows on [0, L] with zero flux at both ends, written as
// d/dt rho + d/dx F = 0:
//   1, 2  F = rho u,  u = -1 - (W' * rho),  W = -log|.| or c V(c .)
//   3     F = -rho - a d/dx(rho^2)
//   4     F = -rho - D(rho) d/dx rho,  D(rho) = c^3 / rho^2 V_eff''(c / rho)

#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "wallsim/error.hpp"
#include "wallsim/potential.hpp"
#include "wallsim/regime.hpp"
#include "wallsim/transport.hpp"

namespace wallsim {

inline constexpr double infinite_energy = std::numeric_limits<double>::infinity();

/// Piecewise-constant probability density on m equal cells of [0, L].
class DensityGrid {
public:
    static constexpr double mass_tolerance = 1e-10;

    DensityGrid(double length, std::vector<double> values)
        : length_(length), values_(std::move(values)) {
        if (!(length_ > 0.0) || !std::isfinite(length_)) {
            throw DomainError("density grid: length must be positive");
        }
        if (values_.empty()) throw DomainError("density grid: need at least one cell");
        for (double v : values_) {
            if (!(v >= 0.0) || !std::isfinite(v)) {
                throw DomainError("density grid: values must be finite and nonnegative");
            }
        }
        if (std::abs(mass() - 1.0) > mass_tolerance) {
            throw DomainError("density grid: mass " + std::to_string(mass()) + " is not 1");
        }
    }

    /// Rescales nonnegative values to unit mass.
    static DensityGrid normalized(double length, std::vector<double> values) {
        const double h = length / static_cast<double>(values.size());
        const double total = h * std::accumulate(values.begin(), values.end(), 0.0);
        if (!(total > 0.0)) throw DomainError("density grid: zero total mass");
        for (double& v : values) v /= total;
        return DensityGrid(length, std::move(values));
    }

    /// Density 1/support on [0, support], cell averages taken exactly.
    static DensityGrid uniform(double length, std::size_t m, double support) {
        if (!(support > 0.0) || support > length) {
            throw DomainError("density grid: uniform support must lie in (0, L]");
        }
        const double h = length / static_cast<double>(m);
        std::vector<double> v(m, 0.0);
        for (std::size_t j = 0; j < m; ++j) {
            const double lo = static_cast<double>(j) * h;
            const double hi = std::min(lo + h, support);
            if (hi > lo) v[j] = (hi - lo) / (h * support);
        }
        return normalized(length, std::move(v));
    }

    double length() const { return length_; }
    std::size_t cells() const { return values_.size(); }
    double spacing() const { return length_ / static_cast<double>(values_.size()); }
    std::span<const double> values() const { return values_; }
    double operator[](std::size_t j) const { return values_[j]; }
    double cell_left(std::size_t j) const { return static_cast<double>(j) * spacing(); }
    double cell_center(std::size_t j) const { return (static_cast<double>(j) + 0.5) * spacing(); }

    double mass() const {
        return spacing() * std::accumulate(values_.begin(), values_.end(), 0.0);
    }

    /// Exact for piecewise-constant densities.
    double first_moment() const {
        double m = 0.0;
        for (std::size_t j = 0; j < cells(); ++j) m += values_[j] * cell_center(j);
        return m * spacing();
    }

    double max_value() const { return *std::max_element(values_.begin(), values_.end()); }

    QuantileFunction quantile() const {
        return QuantileFunction::from_cell_density(length_, values_);
    }

private:
    double length_;
    std::vector<double> values_;
};

/// L1 distance between two densities on the same grid.
inline double l1_distance(const DensityGrid& a, const DensityGrid& b) {
    if (a.cells() != b.cells() || a.length() != b.length()) {
        throw DomainError("l1_distance: grids differ");
    }
    double d = 0.0;
    for (std::size_t j = 0; j < a.cells(); ++j) d += std::abs(a[j] - b[j]);
    return d * a.spacing();
}

/// Support endpoint 2 sqrt(a) of the regime-3 minimiser.
inline double pileup_support() { return 2.0 * std::sqrt(potential::integral()); }

/// Default truncation of the half-line: three times the pile-up support.
inline double default_domain_length() { return 3.0 * pileup_support(); }
inline constexpr std::size_t default_cells = 512;

/// rho*(x) = (2 sqrt(a) - x) / (2a) on [0, 2 sqrt(a)], zero beyond.
inline double steady_profile_regime3(double x) {
    const double a = potential::integral();
    const double b = pileup_support();
    return (x >= 0.0 && x <= b) ? (b - x) / (2.0 * a) : 0.0;
}

/// Cell averages of rho*; unit mass by construction.
inline DensityGrid steady_state_regime3(double length = default_domain_length(),
                                        std::size_t m = default_cells) {
    const double a = potential::integral();
    const double b = pileup_support();
    if (length < b) throw DomainError("steady_state_regime3: domain shorter than support");
    const double h = length / static_cast<double>(m);
    std::vector<double> v(m, 0.0);
    for (std::size_t j = 0; j < m; ++j) {
        const double lo = static_cast<double>(j) * h;
        const double hi = std::min(lo + h, b);
        if (hi > lo) v[j] = (b * (hi - lo) - 0.5 * (hi * hi - lo * lo)) / (2.0 * a * h);
    }
    return DensityGrid(length, std::move(v));
}

namespace detail {

// Second antiderivative of log|u|.
inline double log_second_antiderivative(double u) {
    if (u == 0.0) return 0.0;
    return 0.5 * u * u * std::log(std::abs(u)) - 0.75 * u * u;
}

// int_{cell i} int_{cell j} -log|x - y| dx dy for |i - j| = d.
inline double log_cell_pair(std::size_t d, double h) {
    const double dd = static_cast<double>(d);
    return -(log_second_antiderivative((dd + 1.0) * h) - 2.0 * log_second_antiderivative(dd * h) +
             log_second_antiderivative((dd - 1.0) * h));
}

// int_{cell i} int_{cell j} V(c (x - y)) dx dy for |i - j| = d. The logarithm
// in V is integrated exactly; the smooth remainder V(r) + log|r| by Gauss on
// the triangle-weighted separation, split where the weight has its kink.
inline double potential_cell_pair(std::size_t d, double c, double h) {
    using gauss = boost::math::quadrature::gauss<double, 20>;
    const double centre = static_cast<double>(d) * h;
    auto smooth = [&](double t) {
        return (h - std::abs(t)) * potential::regular_part(c * std::abs(centre + t));
    };
    return log_cell_pair(d, h) - h * h * std::log(c) + gauss::integrate(smooth, -h, 0.0) +
           gauss::integrate(smooth, 0.0, h);
}

inline double toeplitz_quadratic_form(std::span<const double> rho, std::span<const double> kernel) {
    const std::size_t m = rho.size();
    double sum = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        if (rho[i] == 0.0) continue;
        double row = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            row += rho[j] * kernel[i > j ? i - j : j - i];
        }
        sum += rho[i] * row;
    }
    return sum;
}

}  // namespace detail

/// Continuum energy of a density grid. Returns infinite_energy when the
/// density violates the regime-5 constraint.
inline double continuum_energy(const DensityGrid& rho, const ScalingRegime& regime) {
    const std::size_t m = rho.cells();
    const double h = rho.spacing();
    const double c = regime.c();
    const auto v = rho.values();
    const double first = rho.first_moment();

    switch (regime.id()) {
        case Regime::logarithmic: {
            std::vector<double> kernel(m);
            for (std::size_t d = 0; d < m; ++d) kernel[d] = detail::log_cell_pair(d, h);
            return first + 0.5 * detail::toeplitz_quadratic_form(v, kernel);
        }
        case Regime::nonlocal: {
            std::vector<double> kernel(m);
            for (std::size_t d = 0; d < m; ++d) kernel[d] = detail::potential_cell_pair(d, c, h);
            return first + 0.5 * c * detail::toeplitz_quadratic_form(v, kernel);
        }
        case Regime::quadratic: {
            double sq = 0.0;
            for (double x : v) sq += x * x;
            return first + potential::integral() * sq * h;
        }
        case Regime::effective: {
            double sum = 0.0;
            for (double x : v) {
                if (x > 0.0) sum += potential::effective(c / x) * x;
            }
            return first + c * sum * h;
        }
        case Regime::constrained:
            return rho.max_value() <= 1.0 + 1e-12 ? first : infinite_energy;
    }
    return first;
}

/// Continuum energy of an empirical measure. Only the interaction energies
/// (regimes 1 and 2) are defined on atomic measures; the self-interaction of
/// each atom is omitted and coincident atoms give infinite_energy.
inline double continuum_energy(const EmpiricalMeasure& mu, const ScalingRegime& regime) {
    if (regime.id() != Regime::logarithmic && regime.id() != Regime::nonlocal) {
        throw DomainError("continuum energy of regime " + std::to_string(regime_number(regime.id())) +
                          " requires a density");
    }
    if (mu.has_coincident_atoms()) return infinite_energy;
    const auto x = mu.atoms();
    const auto w = mu.weights();
    const double c = regime.c();
    double interaction = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        for (std::size_t j = i + 1; j < x.size(); ++j) {
            const double d = x[j] - x[i];
            const double k = regime.id() == Regime::logarithmic ? -std::log(d)
                                                                 : c * potential::value(c * d);
            interaction += 2.0 * w[i] * w[j] * k;
        }
    }
    return mu.moment(1) + 0.5 * interaction;
}

struct PdeSettings {
    double cfl = 0.4;
    std::vector<double> sample_times{0.0, 1.0};
    double rho_floor = 1e-14;  ///< floor inside the regime-4 diffusivity only

    void validate() const {
        if (!(cfl > 0.0 && cfl < 1.0)) throw DomainError("pde settings: cfl must be in (0,1)");
        if (sample_times.empty()) throw DomainError("pde settings: no sample times");
        for (std::size_t i = 0; i < sample_times.size(); ++i) {
            if (!(sample_times[i] >= 0.0) || !std::isfinite(sample_times[i]) ||
                (i > 0 && !(sample_times[i] > sample_times[i - 1]))) {
                throw DomainError("pde settings: sample times must be finite, >= 0, increasing");
            }
        }
    }
};

struct PdeRun {
    std::vector<DensityGrid> snapshots;  ///< one per sample time
    std::size_t steps = 0;
    double max_step_mass_change = 0.0;   ///< max over steps of |mass_after - mass_before|
    double max_boundary_density = 0.0;   ///< max over snapshots of rho in the last cell
};

/// Boundary monitor threshold for the right end of the truncated domain.
inline constexpr double boundary_density_limit = 1e-8;

namespace detail {

class FluxAssembler {
public:
    FluxAssembler(const ScalingRegime& regime, std::size_t m, double h, double rho_floor)
        : regime_(regime), m_(m), h_(h), floor_(rho_floor), a_(potential::integral()) {
        const double c = regime.c();
        if (regime.id() == Regime::logarithmic || regime.id() == Regime::nonlocal) {
            auto w = [&](double z) {
                return regime.id() == Regime::logarithmic ? -std::log(std::abs(z))
                                                          : c * potential::value(c * z);
            };
            kernel_.assign(m, 0.0);
            for (std::size_t d = 1; d < m; ++d) {
                const double dd = static_cast<double>(d);
                kernel_[d] = w((dd + 0.5) * h) - w((dd - 0.5) * h);
            }
        }
    }

    // Fills face fluxes F[0..m] (F[0] = F[m] = 0) and returns the stable
    // time step bound cfl-free: 1 / (umax/h + 2 Dmax/h^2).
    double assemble(std::span<const double> rho, std::vector<double>& flux) {
        flux.assign(m_ + 1, 0.0);
        double umax = 0.0, dmax = 0.0;
        switch (regime_.id()) {
            case Regime::logarithmic:
            case Regime::nonlocal: {
                velocity_.assign(m_, -1.0);
                for (std::size_t i = 0; i < m_; ++i) {
                    double conv = 0.0;
                    for (std::size_t j = 0; j < m_; ++j) {
                        if (j == i || rho[j] == 0.0) continue;
                        const double k = i > j ? kernel_[i - j] : -kernel_[j - i];
                        conv += rho[j] * k;
                    }
                    velocity_[i] -= conv;
                }
                for (std::size_t f = 1; f < m_; ++f) {
                    const double u = 0.5 * (velocity_[f - 1] + velocity_[f]);
                    flux[f] = u > 0.0 ? u * rho[f - 1] : u * rho[f];
                    umax = std::max(umax, std::abs(u));
                }
                break;
            }
            case Regime::quadratic: {
                umax = 1.0;
                double rmax = 0.0;
                for (std::size_t f = 1; f < m_; ++f) {
                    flux[f] = -rho[f] - a_ * (rho[f] * rho[f] - rho[f - 1] * rho[f - 1]) / h_;
                    rmax = std::max(rmax, rho[f - 1]);
                }
                rmax = std::max(rmax, rho[m_ - 1]);
                dmax = 2.0 * a_ * rmax;
                break;
            }
            case Regime::effective: {
                umax = 1.0;
                const double c = regime_.c();
                diffusivity_.assign(m_, 0.0);
                for (std::size_t j = 0; j < m_; ++j) {
                    const double r = std::max(rho[j], floor_);
                    diffusivity_[j] =
                        c * c * c / (r * r) * potential::effective_second_derivative(c / r);
                }
                for (std::size_t f = 1; f < m_; ++f) {
                    const double d = 0.5 * (diffusivity_[f - 1] + diffusivity_[f]);
                    flux[f] = -rho[f] - d * (rho[f] - rho[f - 1]) / h_;
                    dmax = std::max(dmax, d);
                }
                break;
            }
            case Regime::constrained:
                throw DomainError("pde: regime 5 has no well-defined flux");
        }
        for (double F : flux) {
            if (!std::isfinite(F)) throw DomainError("pde: non-finite flux");
        }
        const double rate = umax / h_ + 2.0 * dmax / (h_ * h_);
        return rate > 0.0 ? 1.0 / rate : std::numeric_limits<double>::infinity();
    }

private:
    ScalingRegime regime_;
    std::size_t m_;
    double h_;
    double floor_;
    double a_;
    std::vector<double> kernel_;
    std::vector<double> velocity_;
    std::vector<double> diffusivity_;
};

inline DensityGrid snapshot(double length, const std::vector<double>& rho) {
    std::vector<double> v(rho);
    for (double& x : v) {
        if (x < 0.0 && x > -1e-10) x = 0.0;
    }
    return DensityGrid(length, std::move(v));
}

}  // namespace detail

/// Explicit conservative finite-volume solution of the regime's gradient flow;
/// first-order upwind drift, central diffusion, zero flux at x = 0 and x = L.
inline PdeRun pde_run(const DensityGrid& rho0, const ScalingRegime& regime,
                      const PdeSettings& settings) {
    settings.validate();
    if (regime.id() == Regime::constrained) {
        throw DomainError("pde: regime 5 is too degenerate for a PDE description");
    }
    const std::size_t m = rho0.cells();
    const double h = rho0.spacing();
    detail::FluxAssembler fluxes(regime, m, h, settings.rho_floor);

    PdeRun run;
    std::vector<double> rho(rho0.values().begin(), rho0.values().end());
    std::vector<double> flux;
    double t = 0.0;
    auto record = [&] {
        run.snapshots.push_back(detail::snapshot(rho0.length(), rho));
        run.max_boundary_density = std::max(run.max_boundary_density, rho.back());
    };

    for (double target : settings.sample_times) {
        while (t < target) {
            const double bound = fluxes.assemble(rho, flux);
            double dt = settings.cfl * bound;
            bool lands = false;
            if (t + dt >= target) {
                dt = target - t;
                lands = true;
            }
            double before = 0.0, after = 0.0;
            for (std::size_t i = 0; i < m; ++i) {
                before += rho[i];
                rho[i] -= dt / h * (flux[i + 1] - flux[i]);
                after += rho[i];
            }
            run.max_step_mass_change = std::max(run.max_step_mass_change, std::abs(after - before) * h);
            const double lowest = *std::min_element(rho.begin(), rho.end());
            if (lowest < -1e-10) {
                throw InstabilityError("pde: negative density " + std::to_string(lowest) +
                                       " at t = " + std::to_string(t) + "; reduce cfl");
            }
            t = lands ? target : t + dt;
            ++run.steps;
        }
        record();
    }
    return run;
}

inline std::vector<DensityGrid> pde_solve(const DensityGrid& rho0, const ScalingRegime& regime,
                                          const PdeSettings& settings) {
    return pde_run(rho0, regime, settings).snapshots;
}

}  // namespace wallsim
