#pragma once

// Convergence-rate experiments: wall counts n_k = floor(10 2^{k/2}), the gap
// gamma_k = W2(mu_t^{n_{k+1}}, mu_t^{n_k}) between successive resolutions and
// the rate estimate p_k = -(2 / log 2) log(gamma_{k+1} / gamma_k).

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <functional>
#include <iostream>
#include <limits>
#include <mutex>
#include <numbers>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "wallsim/continuum.hpp"
#include "wallsim/dynamics.hpp"
#include "wallsim/error.hpp"
#include "wallsim/potential.hpp"
#include "wallsim/regime.hpp"
#include "wallsim/transport.hpp"

namespace wallsim {

inline constexpr double equilibrium_time = std::numeric_limits<double>::infinity();

inline std::vector<double> default_sample_times() {
    return {std::ldexp(1.0, -6), std::ldexp(1.0, -2), std::ldexp(1.0, 2), equilibrium_time};
}

struct ExperimentConfig {
    AlphaRule alpha_rule = AlphaRule::inv_sqrt_n();
    std::size_t k_max = 10;
    std::vector<double> sample_times = default_sample_times();  ///< may end with inf
    SolverSettings solver;
    std::filesystem::path output_dir = ".";
    std::uint64_t seed = 0;  ///< reserved; runs are deterministic
    unsigned threads = 0;    ///< 0: hardware concurrency

    void validate() const {
        if (k_max < 2) throw DomainError("experiment: k_max must be at least 2");
        if (sample_times.empty()) throw DomainError("experiment: no sample times");
        for (std::size_t i = 0; i < sample_times.size(); ++i) {
            const double t = sample_times[i];
            const bool last = i + 1 == sample_times.size();
            if (!(t > 0.0) || (std::isinf(t) && !last) || std::isnan(t) ||
                (i > 0 && !(t > sample_times[i - 1]))) {
                throw DomainError(
                    "experiment: sample times must be positive, increasing, with inf only last");
            }
        }
        solver.validate();
        (void)ScalingRegime{alpha_rule};
    }
};

/// floor(10 * 2^{k/2}) for k = 0..k_max.
inline std::vector<std::size_t> nk_schedule(std::size_t k_max, std::ostream* warnings = &std::clog) {
    if (k_max > 10 && warnings) {
        *warnings << "warning: k_max = " << k_max << " exceeds the tabulated range 0..10\n";
    }
    std::vector<std::size_t> out;
    out.reserve(k_max + 1);
    for (std::size_t k = 0; k <= k_max; ++k) {
        // 2^{k/2} = 2^{k div 2} * (sqrt 2 if k odd); floor of the product.
        const double v = std::ldexp(k % 2 ? 10.0 * std::numbers::sqrt2 : 10.0, static_cast<int>(k / 2));
        out.push_back(static_cast<std::size_t>(std::floor(v)));
    }
    return out;
}

/// Equidistant walls x_i = 2 sqrt(a) i / n.
inline WallConfiguration initial_condition(std::size_t n) {
    if (n == 0) throw DomainError("initial_condition: n must be positive");
    const double b = pileup_support();
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = b * static_cast<double>(i + 1) / static_cast<double>(n);
    }
    return WallConfiguration(std::move(x));
}

inline double rate_exponent(double gamma_k, double gamma_k1) {
    if (!(gamma_k > 0.0) || !(gamma_k1 > 0.0)) {
        throw DomainError("rate_exponent: gamma values must be positive");
    }
    return -(2.0 / std::numbers::ln2) * std::log(gamma_k1 / gamma_k);
}

/// Column label: inf, 2^j for exact powers of two, otherwise %.17g.
inline std::string time_label(double t) {
    if (std::isinf(t)) return "inf";
    int e = 0;
    if (std::frexp(t, &e) == 0.5) return "2^" + std::to_string(e - 1);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", t);
    return buf;
}

struct RateRow {
    std::size_t k;
    std::size_t n_k;
    std::vector<std::optional<double>> gamma;  ///< per column
    std::vector<std::optional<double>> p;      ///< per column; empty on the last row
};

struct RateTable {
    std::vector<double> sample_times;
    std::vector<RateRow> rows;  ///< k = 0..k_max-1
    std::vector<std::string> diagnostics;

    /// p values of one column, skipping missing entries.
    std::vector<double> p_column(std::size_t column) const {
        std::vector<double> out;
        for (const auto& r : rows) {
            if (column < r.p.size() && r.p[column]) out.push_back(*r.p[column]);
        }
        return out;
    }
};

namespace detail {

inline unsigned thread_count(unsigned requested) {
    if (const char* env = std::getenv("WALLSIM_THREADS"); env && *env) {
        try {
            requested = static_cast<unsigned>(std::stoul(env));
        } catch (const std::exception&) {
            throw DomainError(std::string("WALLSIM_THREADS is not a count: ") + env);
        }
    }
    if (requested == 0) requested = std::max(1u, std::thread::hardware_concurrency());
    return requested;
}

// Calls body(i) for i in [0, count) on up to `threads` workers. The first
// exception is rethrown after all workers finish.
template <class Body>
void parallel_for(std::size_t count, unsigned threads, Body&& body) {
    const unsigned width = static_cast<unsigned>(std::min<std::size_t>(threads, count));
    if (width <= 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_lock;
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < width; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i; (i = next.fetch_add(1)) < count;) {
                try {
                    body(i);
                } catch (...) {
                    std::lock_guard<std::mutex> guard(failure_lock);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

struct ColumnStates {
    std::vector<std::optional<WallConfiguration>> states;
    std::vector<std::string> diagnostics;
};

// Integrates one resolution through the sample times segment by segment, so a
// failure only voids the affected and later finite columns. The inf column is
// the equilibrium seeded from the last finite state reached.
inline ColumnStates simulate_columns(std::size_t n, const ScalingRegime& regime,
                                     const std::vector<double>& times,
                                     const SolverSettings& solver) {
    ColumnStates out;
    out.states.resize(times.size());
    WallConfiguration x = initial_condition(n);
    double t = 0.0;
    bool alive = true;
    for (std::size_t j = 0; j < times.size(); ++j) {
        const std::string where = "n=" + std::to_string(n) + " t=" + time_label(times[j]);
        try {
            if (std::isinf(times[j])) {
                out.states[j] = equilibrium(x, regime, solver);
            } else if (alive) {
                x = evolve(x, regime, {0.0, times[j] - t}, solver).states.back();
                t = times[j];
                out.states[j] = x;
            }
        } catch (const Error& e) {
            if (!std::isinf(times[j])) alive = false;
            out.diagnostics.push_back(where + ": " + e.what());
        }
    }
    return out;
}

}  // namespace detail

/// Successive-resolution gaps and rate exponents for k = 0..k_max.
inline RateTable rate_table(const ExperimentConfig& config) {
    config.validate();
    const ScalingRegime regime{config.alpha_rule};
    const auto ns = nk_schedule(config.k_max);
    const auto& times = config.sample_times;
    const std::size_t cols = times.size();

    std::vector<detail::ColumnStates> sims(ns.size());
    detail::parallel_for(ns.size(), detail::thread_count(config.threads), [&](std::size_t k) {
        sims[k] = detail::simulate_columns(ns[k], regime, times, config.solver);
    });

    RateTable table{times, {}, {}};
    for (const auto& s : sims) {
        table.diagnostics.insert(table.diagnostics.end(), s.diagnostics.begin(), s.diagnostics.end());
    }
    for (std::size_t k = 0; k < config.k_max; ++k) {
        RateRow row{k, ns[k], std::vector<std::optional<double>>(cols), {}};
        for (std::size_t j = 0; j < cols; ++j) {
            const auto& a = sims[k].states[j];
            const auto& b = sims[k + 1].states[j];
            if (a && b) row.gamma[j] = w2_empirical(as_empirical(*b), as_empirical(*a));
        }
        table.rows.push_back(std::move(row));
    }
    for (std::size_t k = 0; k + 1 < table.rows.size(); ++k) {
        auto& row = table.rows[k];
        row.p.resize(cols);
        for (std::size_t j = 0; j < cols; ++j) {
            const auto& g0 = row.gamma[j];
            const auto& g1 = table.rows[k + 1].gamma[j];
            if (g0 && g1 && *g0 > 0.0 && *g1 > 0.0) {
                row.p[j] = rate_exponent(*g0, *g1);
            } else if (g0 && g1) {
                table.diagnostics.push_back("k=" + std::to_string(k) + " t=" + time_label(times[j]) +
                                            ": zero gap, rate undefined");
            }
        }
    }
    return table;
}

inline std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// Long-format CSV: one line per (k, t).
inline void write_rate_csv(const RateTable& table, std::ostream& out) {
    out << "k,n_k,t,gamma,p\n";
    for (const auto& row : table.rows) {
        for (std::size_t j = 0; j < table.sample_times.size(); ++j) {
            out << row.k << ',' << row.n_k << ',' << time_label(table.sample_times[j]) << ',';
            if (row.gamma[j]) out << format_number(*row.gamma[j]);
            out << ',';
            if (j < row.p.size() && row.p[j]) out << format_number(*row.p[j]);
            out << '\n';
        }
    }
}

/// p_k against k, one polyline per sample time.
inline void write_rate_svg(const RateTable& table, std::ostream& out) {
    constexpr double width = 640, height = 400, margin = 50;
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    std::size_t kmax = 1;
    for (const auto& row : table.rows) {
        for (const auto& p : row.p) {
            if (!p) continue;
            lo = std::min(lo, *p);
            hi = std::max(hi, *p);
            kmax = std::max(kmax, row.k);
        }
    }
    if (!(hi >= lo)) lo = 0.0, hi = 1.0;
    if (hi - lo < 1e-3) lo -= 0.05, hi += 0.05;
    auto px = [&](double k) { return margin + k / static_cast<double>(kmax) * (width - 2 * margin); };
    auto py = [&](double p) { return height - margin - (p - lo) / (hi - lo) * (height - 2 * margin); };

    static const char* colours[] = {"#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02"};
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
        << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<line x1=\"" << margin << "\" y1=\"" << height - margin << "\" x2=\"" << width - margin
        << "\" y2=\"" << height - margin << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << margin << "\" y1=\"" << margin << "\" x2=\"" << margin << "\" y2=\""
        << height - margin << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << width / 2 << "\" y=\"" << height - 10 << "\">k</text>\n";
    out << "<text x=\"5\" y=\"" << margin - 10 << "\">p (" << format_number(lo) << " .. "
        << format_number(hi) << ")</text>\n";
    for (std::size_t j = 0; j < table.sample_times.size(); ++j) {
        out << "<polyline fill=\"none\" stroke=\"" << colours[j % 6] << "\" points=\"";
        for (const auto& row : table.rows) {
            if (j < row.p.size() && row.p[j]) out << px(static_cast<double>(row.k)) << ',' << py(*row.p[j]) << ' ';
        }
        out << "\"/>\n<text x=\"" << width - margin + 5 << "\" y=\"" << margin + 15.0 * static_cast<double>(j)
            << "\" fill=\"" << colours[j % 6] << "\">t=" << time_label(table.sample_times[j]) << "</text>\n";
    }
    out << "</svg>\n";
}

/// Least-squares slope of values against their index.
inline double trend_slope(const std::vector<double>& v) {
    const double count = static_cast<double>(v.size());
    if (v.size() < 2) throw DomainError("trend_slope: need two values");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double x = static_cast<double>(i);
        sx += x, sy += v[i], sxx += x * x, sxy += x * v[i];
    }
    return (count * sxy - sx * sy) / (count * sxx - sx * sx);
}

struct ContinuumGap {
    std::size_t n;
    double w2;
};

/// W2 between the regime-3 wall system at time t and the regime-3 PDE solution
/// at t, both started from the uniform density on [0, 2 sqrt a].
inline std::vector<ContinuumGap> continuum_gaps(const std::vector<std::size_t>& ns, double t,
                                                std::size_t cells = default_cells,
                                                double length = default_domain_length(),
                                                const SolverSettings& solver = {}) {
    const ScalingRegime regime{AlphaRule::inv_sqrt_n()};
    PdeSettings pde;
    pde.sample_times = {t};
    const auto rho = pde_solve(DensityGrid::uniform(length, cells, pileup_support()), regime, pde).back();
    const auto q = rho.quantile();
    std::vector<ContinuumGap> out;
    for (std::size_t n : ns) {
        const auto x = evolve(initial_condition(n), regime, {0.0, t}, solver).states.back();
        out.push_back({n, w2_quantile(as_empirical(x), q)});
    }
    return out;
}

}  // namespace wallsim
