#pragma once

// One-dimensional quadratic optimal transport.
//
// On the line W2(mu, nu)^2 = int_0^1 |Q_mu(s) - Q_nu(s)|^2 ds where Q is the
// left-continuous quantile function Q(s) = inf{x : mu((-inf, x]) >= s}.

#include <boost/math/quadrature/tanh_sinh.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "wallsim/error.hpp"

namespace wallsim {

/// Finite sum of weighted Dirac masses on the line. Atoms are sorted
/// ascending; coincident atoms are allowed.
class EmpiricalMeasure {
public:
    static constexpr double mass_tolerance = 1e-12;

    EmpiricalMeasure(std::vector<double> atoms, std::vector<double> weights)
        : atoms_(std::move(atoms)), weights_(std::move(weights)) {
        if (atoms_.empty()) throw DomainError("empirical measure needs at least one atom");
        if (atoms_.size() != weights_.size()) {
            throw DomainError("empirical measure: atom/weight count mismatch");
        }
        double total = 0.0;
        for (std::size_t i = 0; i < atoms_.size(); ++i) {
            if (!std::isfinite(atoms_[i])) throw DomainError("empirical measure: non-finite atom");
            if (!(weights_[i] > 0.0) || !std::isfinite(weights_[i])) {
                throw DomainError("empirical measure: weights must be positive");
            }
            if (i > 0 && atoms_[i] < atoms_[i - 1]) {
                throw DomainError("empirical measure: atoms must be sorted ascending");
            }
            total += weights_[i];
        }
        if (std::abs(total - 1.0) > mass_tolerance) {
            throw DomainError("empirical measure: weights sum to " + std::to_string(total));
        }
    }

    /// Uniform weights 1/n on sorted atoms.
    static EmpiricalMeasure uniform(std::vector<double> atoms) {
        const std::size_t n = atoms.size();
        std::vector<double> w(n, n ? 1.0 / static_cast<double>(n) : 0.0);
        return EmpiricalMeasure(std::move(atoms), std::move(w));
    }

    /// Sorts (atom, weight) pairs first.
    static EmpiricalMeasure sorted(std::vector<double> atoms, std::vector<double> weights) {
        if (atoms.size() != weights.size()) {
            throw DomainError("empirical measure: atom/weight count mismatch");
        }
        std::vector<std::size_t> idx(atoms.size());
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        std::stable_sort(idx.begin(), idx.end(),
                         [&](std::size_t a, std::size_t b) { return atoms[a] < atoms[b]; });
        std::vector<double> a, w;
        a.reserve(idx.size());
        w.reserve(idx.size());
        for (auto i : idx) {
            a.push_back(atoms[i]);
            w.push_back(weights[i]);
        }
        return EmpiricalMeasure(std::move(a), std::move(w));
    }

    std::size_t size() const { return atoms_.size(); }
    std::span<const double> atoms() const { return atoms_; }
    std::span<const double> weights() const { return weights_; }

    double total_mass() const { return std::accumulate(weights_.begin(), weights_.end(), 0.0); }

    double moment(int p) const {
        double m = 0.0;
        for (std::size_t i = 0; i < size(); ++i) m += weights_[i] * std::pow(atoms_[i], p);
        return m;
    }
    double second_moment() const { return moment(2); }

    bool has_coincident_atoms() const {
        return std::adjacent_find(atoms_.begin(), atoms_.end()) != atoms_.end();
    }

    /// True when all weights equal 1/n.
    bool is_uniform() const {
        const double w = 1.0 / static_cast<double>(size());
        return std::all_of(weights_.begin(), weights_.end(),
                           [w](double x) { return std::abs(x - w) <= 1e-15; });
    }

    /// Cumulative weights C_0 = 0 < C_1 < ... < C_n = 1 (last pinned to 1).
    std::vector<double> cumulative() const {
        std::vector<double> c(size() + 1, 0.0);
        for (std::size_t i = 0; i < size(); ++i) c[i + 1] = c[i] + weights_[i];
        c.back() = 1.0;
        return c;
    }

private:
    std::vector<double> atoms_;
    std::vector<double> weights_;
};

/// Exact W2 between two empirical measures by merging cumulative-weight
/// breakpoints: on every merged sub-interval of (0,1) both quantiles are
/// constant.
inline double w2_empirical(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu) {
    const auto ca = mu.cumulative();
    const auto cb = nu.cumulative();
    const auto a = mu.atoms();
    const auto b = nu.atoms();
    std::size_t i = 0, j = 0;
    double s = 0.0, sum = 0.0;
    while (i < a.size() && j < b.size()) {
        const double next = std::min(ca[i + 1], cb[j + 1]);
        const double d = a[i] - b[j];
        sum += (next - s) * d * d;
        s = next;
        if (ca[i + 1] == next) ++i;
        if (cb[j + 1] == next) ++j;
    }
    return std::sqrt(std::max(sum, 0.0));
}

inline constexpr std::size_t brute_force_max_atoms = 12;

namespace detail {

inline double w2_by_permutation(std::span<const double> a, std::span<const double> b) {
    std::vector<std::size_t> perm(b.size());
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    double best = std::numeric_limits<double>::infinity();
    do {
        double cost = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            const double d = a[i] - b[perm[i]];
            cost += d * d;
        }
        best = std::min(best, cost);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best / static_cast<double>(a.size());
}

// Min-cost transport by successive shortest augmenting paths on the network
// source -> atoms of mu -> atoms of nu -> sink, with Bellman-Ford on the
// residual graph. Returns the optimal squared cost.
inline double w2_by_min_cost_flow(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu) {
    struct Edge {
        std::size_t to;
        double capacity;
        double cost;
    };
    const auto a = mu.atoms();
    const auto b = nu.atoms();
    const std::size_t na = a.size(), nb = b.size();
    const std::size_t source = na + nb, sink = source + 1, nodes = sink + 1;
    constexpr double inf = std::numeric_limits<double>::infinity();

    std::vector<Edge> edges;
    std::vector<std::vector<std::size_t>> out(nodes);
    auto add = [&](std::size_t u, std::size_t v, double cap, double cost) {
        out[u].push_back(edges.size());
        edges.push_back({v, cap, cost});
        out[v].push_back(edges.size());
        edges.push_back({u, 0.0, -cost});
    };
    for (std::size_t i = 0; i < na; ++i) add(source, i, mu.weights()[i], 0.0);
    for (std::size_t j = 0; j < nb; ++j) add(na + j, sink, nu.weights()[j], 0.0);
    for (std::size_t i = 0; i < na; ++i) {
        for (std::size_t j = 0; j < nb; ++j) add(i, na + j, inf, (a[i] - b[j]) * (a[i] - b[j]));
    }

    constexpr double eps = 1e-15;
    double total = 0.0, shipped = 0.0;
    for (std::size_t iter = 0; iter < 4 * edges.size() && shipped < 1.0 - 1e-13; ++iter) {
        std::vector<double> dist(nodes, inf);
        std::vector<std::size_t> via(nodes, edges.size());
        dist[source] = 0.0;
        for (std::size_t round = 0; round + 1 < nodes; ++round) {
            bool changed = false;
            for (std::size_t u = 0; u < nodes; ++u) {
                if (dist[u] == inf) continue;
                for (std::size_t e : out[u]) {
                    const Edge& ed = edges[e];
                    if (ed.capacity > eps && dist[u] + ed.cost < dist[ed.to] - 1e-15) {
                        dist[ed.to] = dist[u] + ed.cost;
                        via[ed.to] = e;
                        changed = true;
                    }
                }
            }
            if (!changed) break;
        }
        if (dist[sink] == inf) break;

        double amount = inf;
        std::size_t steps = 0;
        for (std::size_t v = sink; v != source; v = edges[via[v] ^ 1].to) {
            if (++steps > nodes) throw Error("brute_force_w2: cycle in augmenting path");
            amount = std::min(amount, edges[via[v]].capacity);
        }
        for (std::size_t v = sink; v != source; v = edges[via[v] ^ 1].to) {
            edges[via[v]].capacity -= amount;
            edges[via[v] ^ 1].capacity += amount;
        }
        total += amount * dist[sink];
        shipped += amount;
    }
    return total;
}

}  // namespace detail

/// W2 by solving the discrete transport problem directly, without using the
/// monotone structure of one-dimensional transport. Oracle for tests; at most
/// 12 atoms in total.
inline double brute_force_w2(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu) {
    if (mu.size() + nu.size() > brute_force_max_atoms) {
        throw DomainError("brute_force_w2: instance too large (" +
                          std::to_string(mu.size() + nu.size()) + " atoms)");
    }
    double squared;
    if (mu.size() == nu.size() && mu.is_uniform() && nu.is_uniform()) {
        squared = detail::w2_by_permutation(mu.atoms(), nu.atoms());
    } else {
        squared = detail::w2_by_min_cost_flow(mu, nu);
    }
    return std::sqrt(std::max(squared, 0.0));
}

/// Monotone map s in (0,1) -> position, with optional breakpoints in s where
/// it is not smooth.
class QuantileFunction {
public:
    enum class Representation { piecewise_constant, numeric_inverse_cdf, analytic };

    QuantileFunction(std::function<double(double)> evaluator, Representation rep,
                     std::vector<double> breakpoints = {})
        : evaluator_(std::move(evaluator)), rep_(rep), breakpoints_(std::move(breakpoints)) {
        std::sort(breakpoints_.begin(), breakpoints_.end());
    }

    double operator()(double s) const { return evaluator_(s); }
    Representation representation() const { return rep_; }
    std::span<const double> breakpoints() const { return breakpoints_; }

    /// Left-continuous generalised inverse of the empirical CDF.
    static QuantileFunction from_measure(const EmpiricalMeasure& mu) {
        auto cum = std::make_shared<std::vector<double>>(mu.cumulative());
        auto atoms = std::make_shared<std::vector<double>>(mu.atoms().begin(), mu.atoms().end());
        std::vector<double> bps(cum->begin() + 1, cum->end() - 1);
        auto f = [cum, atoms](double s) {
            // first i with C_{i+1} >= s
            auto it = std::lower_bound(cum->begin() + 1, cum->end(), s);
            auto i = static_cast<std::size_t>(std::distance(cum->begin() + 1, it));
            return (*atoms)[std::min(i, atoms->size() - 1)];
        };
        return QuantileFunction(f, Representation::piecewise_constant, std::move(bps));
    }

    /// Piecewise-constant density with cell values on m equal cells of [0, L].
    /// The CDF is piecewise linear; it is inverted cell by cell.
    static QuantileFunction from_cell_density(double length, std::span<const double> values) {
        const std::size_t m = values.size();
        if (m == 0 || !(length > 0.0)) throw DomainError("quantile: empty density grid");
        const double h = length / static_cast<double>(m);
        auto cum = std::make_shared<std::vector<double>>(m + 1, 0.0);
        for (std::size_t j = 0; j < m; ++j) {
            if (values[j] < 0.0) throw DomainError("quantile: negative density");
            (*cum)[j + 1] = (*cum)[j] + values[j] * h;
        }
        const double total = cum->back();
        if (!(total > 0.0)) throw DomainError("quantile: density has zero mass");
        for (double& c : *cum) c /= total;
        cum->back() = 1.0;

        std::vector<double> bps;
        for (std::size_t j = 1; j < m; ++j) {
            const double c = (*cum)[j];
            if (c > 0.0 && c < 1.0 && (bps.empty() || c > bps.back())) bps.push_back(c);
        }
        auto f = [cum, h, m](double s) {
            auto it = std::lower_bound(cum->begin() + 1, cum->end(), s);
            auto j = std::min(static_cast<std::size_t>(std::distance(cum->begin() + 1, it)), m - 1);
            const double lo = (*cum)[j], hi = (*cum)[j + 1];
            const double frac = hi > lo ? std::clamp((s - lo) / (hi - lo), 0.0, 1.0) : 0.0;
            return (static_cast<double>(j) + frac) * h;
        };
        return QuantileFunction(f, Representation::numeric_inverse_cdf, std::move(bps));
    }

private:
    std::function<double(double)> evaluator_;
    Representation rep_;
    std::vector<double> breakpoints_;
};

struct QuadratureOptions {
    bool refine = true;
    double relative_tolerance = 1e-8;
    std::size_t max_nodes = std::size_t{1} << 20;
};

/// W2 between two quantile functions by composite Gauss quadrature of
/// |qa - qb|^2 on (0,1). The nodes are spread over the merged breakpoints of
/// both inputs and doubled until two successive values agree to the relative
/// tolerance.
inline double w2_quantile(const QuantileFunction& qa, const QuantileFunction& qb,
                          std::size_t m = 16, QuadratureOptions opts = {}) {
    if (m < 16) throw DomainError("w2_quantile: need at least 16 nodes");

    std::vector<double> edges{0.0};
    std::merge(qa.breakpoints().begin(), qa.breakpoints().end(), qb.breakpoints().begin(),
               qb.breakpoints().end(), std::back_inserter(edges));
    edges.push_back(1.0);
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    const std::size_t pieces = edges.size() - 1;

    // Analytic quantiles may be singular at s = 0 or 1 (unbounded support,
    // density blow-up). On the two end pieces the nodes are then graded by
    // s = lo + w p(u), p(u) = u^3 (10 - 15u + 6u^2), whose derivative vanishes
    // to second order at both ends.
    using Rep = QuantileFunction::Representation;
    const bool graded = qa.representation() == Rep::analytic || qb.representation() == Rep::analytic;

    auto evaluate = [&](std::size_t per_piece) {
        constexpr double g = 0.28867513459481288;  // 1 / (2 sqrt 3)
        double sum = 0.0;
        for (std::size_t p = 0; p < pieces; ++p) {
            const double lo = edges[p], width = edges[p + 1] - lo;
            if (!(width > 0.0)) continue;
            const bool grade = graded && (p == 0 || p + 1 == pieces);
            const double h = 1.0 / static_cast<double>(per_piece);
            double piece = 0.0;
            for (std::size_t k = 0; k < per_piece; ++k) {
                const double mid = (static_cast<double>(k) + 0.5) * h;
                for (double u : {mid - g * h, mid + g * h}) {
                    double s = lo + width * u, jac = 1.0;
                    if (grade) {
                        const double u3 = u * u * u;
                        s = lo + width * u3 * (10.0 + u * (-15.0 + 6.0 * u));
                        jac = 30.0 * u * u * (1.0 - u) * (1.0 - u);
                    }
                    const double d = qa(s) - qb(s);
                    piece += d * d * jac;
                }
            }
            sum += 0.5 * piece * h * width;
        }
        if (!std::isfinite(sum)) throw DomainError("w2_quantile: non-finite integrand");
        return std::sqrt(sum);
    };

    std::size_t per_piece = std::max<std::size_t>(1, (m + pieces - 1) / pieces);
    double previous = evaluate(per_piece);
    if (!opts.refine) return previous;
    double change = std::numeric_limits<double>::infinity();
    while (true) {
        per_piece *= 2;
        if (per_piece * pieces > opts.max_nodes) {
            std::ostringstream msg;
            msg.precision(17);
            msg << "w2_quantile: no convergence to relative tolerance " << opts.relative_tolerance
                << " within " << opts.max_nodes << " nodes; last value " << previous
                << ", last change " << change;
            throw NonConvergenceError(msg.str(), change);
        }
        const double current = evaluate(per_piece);
        change = std::abs(current - previous);
        if (change <= opts.relative_tolerance * current) return current;
        previous = current;
    }
}

inline double w2_quantile(const EmpiricalMeasure& mu, const QuantileFunction& q,
                          std::size_t m = 16, QuadratureOptions opts = {}) {
    return w2_quantile(QuantileFunction::from_measure(mu), q, m, opts);
}

/// Recovery sequence: n atoms at Q(i/(n+1)), i = 1..n, uniform weights.
/// Duplicate quantile values stay as coincident atoms; check
/// has_coincident_atoms() before handing the result to the energy.
inline EmpiricalMeasure recovery_sequence(const QuantileFunction& q, std::size_t n) {
    if (n == 0) throw DomainError("recovery_sequence: n must be positive");
    std::vector<double> atoms(n);
    for (std::size_t i = 1; i <= n; ++i) {
        const double x = q(static_cast<double>(i) / static_cast<double>(n + 1));
        if (!std::isfinite(x)) throw DomainError("recovery_sequence: quantile evaluation failed");
        if (i > 1 && x < atoms[i - 2]) {
            throw DomainError("recovery_sequence: quantile is not monotone");
        }
        atoms[i - 1] = x;
    }
    return EmpiricalMeasure::uniform(std::move(atoms));
}

struct MomentBound {
    double lhs;
    double rhs;
    bool holds(double slack = 1e-12) const { return lhs <= rhs + slack * (1.0 + std::abs(rhs)); }
};

/// Both sides of the uniform moment bound for the recovery sequence:
///   lhs = 1/(n+1) sum_{i=0}^{n} phi(x_i)  with x_0 = 0,
///   rhs = int phi dmu = int_0^1 phi(Q(s)) ds.
/// For non-decreasing phi and mu supported in [0, inf), lhs <= rhs.
inline MomentBound second_moment_bound_check(const QuantileFunction& q, std::size_t n,
                                             const std::function<double(double)>& phi) {
    const auto rec = recovery_sequence(q, n);
    double lhs = phi(0.0);
    for (double x : rec.atoms()) lhs += phi(x);
    lhs /= static_cast<double>(n + 1);

    // Integrate piece by piece between the quantile's breakpoints; tanh-sinh
    // copes with integrable endpoint singularities (unbounded support).
    std::vector<double> edges{0.0};
    edges.insert(edges.end(), q.breakpoints().begin(), q.breakpoints().end());
    edges.push_back(1.0);
    double rhs = 0.0, err = 0.0;
    try {
        boost::math::quadrature::tanh_sinh<double> integrator;
        for (std::size_t p = 0; p + 1 < edges.size(); ++p) {
            if (!(edges[p + 1] > edges[p])) continue;
            double piece_err = 0.0;
            rhs += integrator.integrate([&](double s) { return phi(q(s)); }, edges[p],
                                        edges[p + 1], 1e-12, &piece_err);
            err += piece_err;
        }
    } catch (const std::exception& e) {
        throw DomainError(std::string("second_moment_bound_check: phi not integrable: ") + e.what());
    }
    if (!std::isfinite(rhs) || !std::isfinite(lhs) || err > 1e-6 * (1.0 + std::abs(rhs))) {
        throw DomainError("second_moment_bound_check: phi not integrable against mu");
    }
    return {lhs, rhs};
}

}  // namespace wallsim
