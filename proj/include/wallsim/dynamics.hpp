#pragma once

// Gradient flow dx/dt = -n grad E_n(x) of the wall system, its equilibrium,
// and the discrete evolution variational inequality along sampled
// trajectories.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "wallsim/discrete_energy.hpp"
#include "wallsim/error.hpp"
#include "wallsim/regime.hpp"
#include "wallsim/transport.hpp"

namespace wallsim {

struct SolverSettings {
    double rtol = 1e-8;
    double atol = 1e-10;
    double max_step = std::numeric_limits<double>::infinity();
    double newton_tol = 1e-12;
    int newton_max_iter = 100;
    double initial_step = 1e-6;
    double min_step = 1e-14;

    void validate() const {
        if (!(rtol > 0.0 && atol > 0.0 && max_step > 0.0 && newton_tol > 0.0 &&
              initial_step > 0.0 && min_step > 0.0 && newton_max_iter > 0)) {
            throw DomainError("solver settings: all tolerances and steps must be positive");
        }
    }
};

struct IntegrationStats {
    std::size_t accepted = 0;
    std::size_t rejected = 0;
    std::size_t newton_iterations = 0;
};

/// Wall states at the requested sample times.
struct Trajectory {
    std::vector<double> times;
    std::vector<WallConfiguration> states;
    ScalingRegime regime;
    IntegrationStats stats;
};

namespace detail {

inline std::span<const double> as_span(const Eigen::VectorXd& v) {
    return {v.data(), static_cast<std::size_t>(v.size())};
}

inline Eigen::VectorXd to_vector(std::span<const double> x) {
    return Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
}

inline Eigen::VectorXd energy_gradient(const Eigen::VectorXd& y, const ScalingRegime& regime) {
    return to_vector(gradient(as_span(y), regime));
}

// Solves an SPD system, falling back to LU if Cholesky breaks down.
inline Eigen::VectorXd spd_solve(const Eigen::MatrixXd& a, const Eigen::VectorXd& b) {
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() == Eigen::Success) return llt.solve(b);
    return a.partialPivLu().solve(b);
}

inline double weighted_max_norm(const Eigen::VectorXd& v, const Eigen::VectorXd& scale_a,
                                const Eigen::VectorXd& scale_b, const SolverSettings& s) {
    double worst = 0.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        const double w = s.atol + s.rtol * std::max(std::abs(scale_a[i]), std::abs(scale_b[i]));
        worst = std::max(worst, std::abs(v[i]) / w);
    }
    return worst;
}

struct HistoryPoint {
    double t;
    Eigen::VectorXd y;
};

}  // namespace detail

/// Integrates the gradient flow with variable-step BDF (order 1 for the first
/// two steps, then order 2) and an analytic Jacobian. Local error is measured
/// against atol + rtol |x| in the max norm, from the Milne difference between
/// an explicit predictor and the implicit corrector. Sample states are linear
/// interpolants between accepted steps.
inline Trajectory evolve(const WallConfiguration& x0, const ScalingRegime& regime,
                         const std::vector<double>& sample_times,
                         const SolverSettings& settings = {}) {
    settings.validate();
    if (sample_times.empty() || sample_times.front() != 0.0) {
        throw DomainError("evolve: sample times must start at 0");
    }
    for (std::size_t i = 1; i < sample_times.size(); ++i) {
        if (!(sample_times[i] > sample_times[i - 1]) || !std::isfinite(sample_times[i])) {
            throw DomainError("evolve: sample times must be finite and strictly increasing");
        }
    }

    Trajectory traj{sample_times, {x0}, regime, {}};
    const std::size_t n = x0.size();
    const double nd = static_cast<double>(n);
    const double t_end = sample_times.back();
    const auto unit = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n),
                                                static_cast<Eigen::Index>(n));

    std::vector<detail::HistoryPoint> hist{{0.0, detail::to_vector(x0.positions())}};
    std::size_t next_sample = 1;
    double h = std::min({settings.initial_step, settings.max_step, t_end});

    while (next_sample < sample_times.size()) {
        const auto& cur = hist.back();
        h = std::min({h, settings.max_step, t_end - cur.t});
        if (h < settings.min_step) {
            throw IntegrationError("evolve: step size fell below " +
                                   std::to_string(settings.min_step) + " at t = " +
                                   std::to_string(cur.t));
        }
        const int order = hist.size() >= 3 ? 2 : 1;

        // BDF: a0 y + a1 y_n + a2 y_{n-1} + h n grad E(y) = 0.
        double a0 = 1.0, a1 = -1.0, a2 = 0.0, milne = 0.5;
        Eigen::VectorXd predictor;
        if (order == 1) {
            predictor = cur.y - h * nd * detail::energy_gradient(cur.y, regime);
        } else {
            const auto& p1 = hist[hist.size() - 2];
            const auto& p2 = hist[hist.size() - 3];
            const double hp = cur.t - p1.t, hpp = p1.t - p2.t;
            const double w = h / hp;
            a0 = (1.0 + 2.0 * w) / (1.0 + w);
            a1 = -(1.0 + w);
            a2 = w * w / (1.0 + w);
            // Leading error constants for y''' = 1, with t_{n+1} = 0.
            const double residual =
                (a1 * std::pow(-h, 3) + a2 * std::pow(-h - hp, 3)) / 6.0;
            const double c_corr = -residual / a0;
            const double c_pred = -h * (h + hp) * (h + hp + hpp) / 6.0;
            milne = c_corr / (c_corr - c_pred);
            // Quadratic extrapolation through the last three points.
            const double t0 = p2.t, t1 = p1.t, t2 = cur.t, tn = cur.t + h;
            const double l0 = (tn - t1) * (tn - t2) / ((t0 - t1) * (t0 - t2));
            const double l1 = (tn - t0) * (tn - t2) / ((t1 - t0) * (t1 - t2));
            const double l2 = (tn - t0) * (tn - t1) / ((t2 - t0) * (t2 - t1));
            predictor = l0 * p2.y + l1 * p1.y + l2 * cur.y;
        }
        Eigen::VectorXd history_term = a1 * cur.y;
        if (order == 2) history_term += a2 * hist[hist.size() - 2].y;

        // Simplified Newton with the Jacobian frozen at the predictor.
        Eigen::VectorXd y = predictor;
        bool converged = false;
        try {
            if (!WallConfiguration::is_valid(detail::as_span(y))) y = cur.y;
            const Eigen::MatrixXd jac = a0 * unit + h * nd * hessian(detail::as_span(y), regime);
            Eigen::LLT<Eigen::MatrixXd> llt(jac);
            const bool spd = llt.info() == Eigen::Success;
            Eigen::PartialPivLU<Eigen::MatrixXd> lu;
            if (!spd) lu.compute(jac);
            double previous = std::numeric_limits<double>::infinity();
            for (int it = 0; it < 10; ++it) {
                const Eigen::VectorXd g =
                    a0 * y + history_term + h * nd * detail::energy_gradient(y, regime);
                const Eigen::VectorXd delta = spd ? Eigen::VectorXd(llt.solve(g)) : lu.solve(g);
                y -= delta;
                ++traj.stats.newton_iterations;
                const double size = detail::weighted_max_norm(delta, y, cur.y, settings);
                if (!std::isfinite(size) || size > 2.0 * previous) break;
                previous = size;
                if (size <= 1e-3) {
                    converged = WallConfiguration::is_valid(detail::as_span(y));
                    break;
                }
            }
        } catch (const DomainError&) {
            converged = false;  // iterate left Omega_n
        }
        if (!converged) {
            ++traj.stats.rejected;
            h *= 0.25;
            continue;
        }

        const Eigen::VectorXd err = milne * (y - predictor);
        const double err_norm = detail::weighted_max_norm(err, y, cur.y, settings);
        const double expo = 1.0 / (order + 1);
        if (!(err_norm <= 1.0)) {
            ++traj.stats.rejected;
            h *= std::clamp(0.9 * std::pow(err_norm, -expo), 0.2, 0.9);
            continue;
        }
        if (!y.allFinite()) throw IntegrationError("evolve: non-finite state");

        ++traj.stats.accepted;
        const double t_new = h >= t_end - cur.t ? t_end : cur.t + h;
        while (next_sample < sample_times.size() && sample_times[next_sample] <= t_new) {
            const double theta = (sample_times[next_sample] - cur.t) / (t_new - cur.t);
            Eigen::VectorXd ys = (1.0 - theta) * cur.y + theta * y;
            traj.states.emplace_back(std::vector<double>(ys.data(), ys.data() + ys.size()));
            ++next_sample;
        }
        hist.push_back({t_new, y});
        if (hist.size() > 3) hist.erase(hist.begin());
        const double grow = err_norm > 0.0 ? 0.9 * std::pow(err_norm, -expo) : 2.0;
        h *= std::clamp(grow, 0.2, 2.0);
    }
    return traj;
}

struct EquilibriumResult {
    WallConfiguration state;
    int iterations;
    double residual;  ///< ||grad E_n||_inf at state
};

/// Damped Newton on grad E_n = 0 with the analytic Hessian. Steps are halved
/// while the iterate leaves Omega_n or the residual does not decrease.
inline EquilibriumResult solve_equilibrium(const WallConfiguration& x0, const ScalingRegime& regime,
                                           const SolverSettings& settings = {}) {
    settings.validate();
    Eigen::VectorXd x = detail::to_vector(x0.positions());
    Eigen::VectorXd g = detail::energy_gradient(x, regime);
    double residual = g.lpNorm<Eigen::Infinity>();
    int iterations = 0;
    while (residual > settings.newton_tol) {
        if (iterations >= settings.newton_max_iter) {
            throw NonConvergenceError("equilibrium: Newton did not converge in " +
                                          std::to_string(settings.newton_max_iter) +
                                          " iterations",
                                      residual);
        }
        const Eigen::VectorXd step = detail::spd_solve(hessian(detail::as_span(x), regime), g);
        double lambda = 1.0;
        bool improved = false;
        while (lambda > 1e-12) {
            Eigen::VectorXd trial = x - lambda * step;
            if (WallConfiguration::is_valid(detail::as_span(trial))) {
                Eigen::VectorXd gt = detail::energy_gradient(trial, regime);
                const double rt = gt.lpNorm<Eigen::Infinity>();
                if (rt < residual) {
                    x = std::move(trial);
                    g = std::move(gt);
                    residual = rt;
                    improved = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        ++iterations;
        if (!improved) {
            throw NonConvergenceError("equilibrium: line search stalled", residual);
        }
    }
    return {WallConfiguration(std::vector<double>(x.data(), x.data() + x.size())), iterations,
            residual};
}

inline WallConfiguration equilibrium(const WallConfiguration& x0, const ScalingRegime& regime,
                                     const SolverSettings& settings = {}) {
    return solve_equilibrium(x0, regime, settings).state;
}

/// EVI residuals at interior sample times:
///   r_j = 1/2 d/dt W2^2(mu_t, nu)|_{t_j} - (E_n(nu) - E_n(mu_{t_j})),
/// with the time derivative by central differences over neighbouring samples.
/// The inequality predicts r_j <= 0 up to differencing error.
inline std::vector<double> evi_residual(const Trajectory& traj, const EmpiricalMeasure& nu,
                                        const ScalingRegime& regime) {
    const std::size_t samples = traj.states.size();
    if (samples < 3) throw DomainError("evi_residual: need at least 3 samples");
    if (nu.size() != traj.states.front().size()) {
        throw DomainError("evi_residual: test measure must have n atoms");
    }
    if (nu.has_coincident_atoms()) throw DomainError("evi_residual: test measure not in Dom E_n");
    const double e_nu = energy(as_configuration(nu), regime);

    std::vector<double> dist2(samples);
    std::vector<double> e(samples);
    for (std::size_t j = 0; j < samples; ++j) {
        const double w = w2_empirical(as_empirical(traj.states[j]), nu);
        dist2[j] = w * w;
        e[j] = energy(traj.states[j], regime);
    }
    std::vector<double> r;
    r.reserve(samples - 2);
    for (std::size_t j = 1; j + 1 < samples; ++j) {
        const double dt = traj.times[j + 1] - traj.times[j - 1];
        const double ddt = (dist2[j + 1] - dist2[j - 1]) / dt;
        r.push_back(0.5 * ddt - (e_nu - e[j]));
    }
    return r;
}

}  // namespace wallsim
