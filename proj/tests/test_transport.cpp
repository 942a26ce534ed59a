#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "wallsim/transport.hpp"

using namespace wallsim;

namespace {

EmpiricalMeasure random_measure(std::mt19937_64& rng, std::size_t n, bool uniform) {
    std::uniform_real_distribution<double> pos(0.0, 3.0), w(0.1, 1.0);
    std::vector<double> atoms(n), weights(n);
    for (auto& a : atoms) a = pos(rng);
    std::sort(atoms.begin(), atoms.end());
    double total = 0.0;
    for (auto& x : weights) total += (x = uniform ? 1.0 : w(rng));
    for (auto& x : weights) x /= total;
    return EmpiricalMeasure(atoms, weights);
}

QuantileFunction analytic(std::function<double(double)> f) {
    return QuantileFunction(std::move(f), QuantileFunction::Representation::analytic);
}

}  // namespace

TEST(EmpiricalMeasure, Validation) {
    EXPECT_THROW(EmpiricalMeasure({}, {}), DomainError);
    EXPECT_THROW(EmpiricalMeasure({0.1, 0.2}, {0.5}), DomainError);
    EXPECT_THROW(EmpiricalMeasure({0.2, 0.1}, {0.5, 0.5}), DomainError);
    EXPECT_THROW(EmpiricalMeasure({0.1, 0.2}, {0.5, 0.6}), DomainError);
    EXPECT_THROW(EmpiricalMeasure({0.1, 0.2}, {1.5, -0.5}), DomainError);
    const auto mu = EmpiricalMeasure::sorted({0.3, 0.1}, {0.75, 0.25});
    EXPECT_EQ(mu.atoms()[0], 0.1);
    EXPECT_EQ(mu.weights()[0], 0.25);
    EXPECT_NEAR(mu.second_moment(), 0.25 * 0.01 + 0.75 * 0.09, 1e-16);
    EXPECT_TRUE(EmpiricalMeasure::uniform({0.0, 0.0}).has_coincident_atoms());
}

TEST(Transport, KnownDistances) {
    const auto a = EmpiricalMeasure::uniform({0.0});
    const auto b = EmpiricalMeasure::uniform({2.0});
    EXPECT_DOUBLE_EQ(w2_empirical(a, b), 2.0);
    const auto c = EmpiricalMeasure::uniform({0.0, 1.0});
    EXPECT_NEAR(w2_empirical(a, c), std::sqrt(0.5), 1e-15);
    // Translation by t gives W2 = t.
    const auto d = EmpiricalMeasure::uniform({0.5, 1.5});
    EXPECT_NEAR(w2_empirical(c, d), 0.5, 1e-15);
}

TEST(Transport, AgreesWithBruteForceOn200Instances) {
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<int> count(1, 6);
    for (int trial = 0; trial < 200; ++trial) {
        const bool uniform = trial % 2 == 0;
        const std::size_t na = static_cast<std::size_t>(count(rng));
        const std::size_t nb = uniform ? na : static_cast<std::size_t>(count(rng));
        const auto mu = random_measure(rng, na, uniform);
        const auto nu = random_measure(rng, nb, uniform);
        EXPECT_NEAR(w2_empirical(mu, nu), brute_force_w2(mu, nu), 1e-10) << trial;
    }
}

TEST(Transport, BruteForceRefusesLargeInputs) {
    std::mt19937_64 rng(1);
    const auto mu = random_measure(rng, 7, true);
    EXPECT_THROW(brute_force_w2(mu, mu), DomainError);
}

TEST(Transport, MetricAxioms) {
    std::mt19937_64 rng(99);
    std::uniform_int_distribution<int> count(1, 20);
    for (int trial = 0; trial < 100; ++trial) {
        const auto a = random_measure(rng, static_cast<std::size_t>(count(rng)), false);
        const auto b = random_measure(rng, static_cast<std::size_t>(count(rng)), false);
        const auto c = random_measure(rng, static_cast<std::size_t>(count(rng)), false);
        EXPECT_EQ(w2_empirical(a, a), 0.0);
        EXPECT_GE(w2_empirical(a, b), 0.0);
        EXPECT_NEAR(w2_empirical(a, b), w2_empirical(b, a), 1e-14);
        EXPECT_LE(w2_empirical(a, c), w2_empirical(a, b) + w2_empirical(b, c) + 1e-12);
    }
}

TEST(Transport, QuantileQuadratureMatchesExactEmpirical) {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        const auto a = random_measure(rng, 9, false);
        const auto b = random_measure(rng, 13, false);
        const double q = w2_quantile(QuantileFunction::from_measure(a),
                                     QuantileFunction::from_measure(b));
        EXPECT_NEAR(q, w2_empirical(a, b), 1e-12);
    }
}

TEST(Transport, AnalyticQuantiles) {
    // U[0,1] vs U[0,2]: W2^2 = int_0^1 s^2 ds = 1/3.
    const double w = w2_quantile(analytic([](double s) { return s; }),
                                 analytic([](double s) { return 2.0 * s; }));
    EXPECT_NEAR(w, std::sqrt(1.0 / 3.0), 1e-8);
    // Dirac at 0 vs U[0,1] through the empirical overload.
    EXPECT_NEAR(w2_quantile(EmpiricalMeasure::uniform({0.0}), analytic([](double s) { return s; })),
                std::sqrt(1.0 / 3.0), 1e-8);
    // U[0,1] vs sqrt law Q(s) = sqrt(s): W2^2 = 1/3 - 2 * 2/5 + 1/2.
    const double v = w2_quantile(analytic([](double s) { return s; }),
                                 analytic([](double s) { return std::sqrt(s); }));
    EXPECT_NEAR(v * v, 1.0 / 3.0 - 0.8 + 0.5, 1e-8);
}

TEST(Transport, QuadratureOptions) {
    EXPECT_THROW(w2_quantile(analytic([](double s) { return s; }), analytic([](double s) { return s; }), 8),
                 DomainError);
    QuadratureOptions fixed;
    fixed.refine = false;
    const double coarse = w2_quantile(analytic([](double s) { return s; }),
                                      analytic([](double s) { return std::sqrt(s); }), 16, fixed);
    EXPECT_NEAR(coarse * coarse, 1.0 / 3.0 - 0.8 + 0.5, 1e-3);
    QuadratureOptions tight;
    tight.relative_tolerance = 1e-15;
    tight.max_nodes = 64;
    EXPECT_THROW(w2_quantile(analytic([](double s) { return s; }),
                             analytic([](double s) { return std::sqrt(s); }), 16, tight),
                 NonConvergenceError);
}

TEST(Transport, CellDensityQuantile) {
    // Uniform density on [0, 2]: Q(s) = 2 s.
    const std::vector<double> rho(8, 0.5);
    const auto q = QuantileFunction::from_cell_density(2.0, rho);
    for (double s : {0.01, 0.3, 0.5, 0.99}) EXPECT_NEAR(q(s), 2.0 * s, 1e-14);
    // Density only on the second half of [0, 1].
    const std::vector<double> half{0.0, 2.0};
    const auto qh = QuantileFunction::from_cell_density(1.0, half);
    EXPECT_NEAR(qh(0.5), 0.75, 1e-15);
    EXPECT_NEAR(w2_quantile(qh, analytic([](double s) { return 0.5 + 0.5 * s; })), 0.0, 1e-14);
    EXPECT_THROW(QuantileFunction::from_cell_density(1.0, std::vector<double>{0.0, 0.0}), DomainError);
    EXPECT_THROW(QuantileFunction::from_cell_density(1.0, std::vector<double>{-1.0, 3.0}), DomainError);
}

TEST(Transport, RecoverySequence) {
    const auto rec = recovery_sequence(analytic([](double s) { return 3.0 * s; }), 5);
    ASSERT_EQ(rec.size(), 5u);
    for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(rec.atoms()[i], 3.0 * static_cast<double>(i + 1) / 6.0, 1e-15);
    EXPECT_TRUE(rec.is_uniform());
    EXPECT_THROW(recovery_sequence(analytic([](double s) { return -s; }), 4), DomainError);
    EXPECT_THROW(recovery_sequence(analytic([](double s) { return s; }), 0), DomainError);
}

TEST(Transport, RecoveryConvergesInW2) {
    const auto q = analytic([](double s) { return std::sqrt(s); });
    double prev = std::numeric_limits<double>::infinity();
    for (std::size_t n : {10u, 20u, 40u, 80u}) {
        const double d = w2_quantile(recovery_sequence(q, n), q);
        EXPECT_LT(d, prev) << n;
        prev = d;
    }
}

TEST(Transport, MomentBoundOnRandomTriples) {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> scale(0.2, 4.0), power(0.3, 3.0);
    std::uniform_int_distribution<int> nn(1, 200);
    int checked = 0;
    for (int trial = 0; trial < 50; ++trial) {
        const double L = scale(rng), k = power(rng), p = power(rng);
        std::function<double(double)> qf;
        switch (trial % 3) {
            case 0: qf = [L, k](double s) { return L * std::pow(s, k); }; break;
            case 1: qf = [L](double s) { return -L * std::log1p(-s); }; break;
            default: qf = [L](double s) { return L * s * s * (3.0 - 2.0 * s); }; break;
        }
        const auto q = analytic(qf);
        const auto n = static_cast<std::size_t>(nn(rng));
        const auto bound = second_moment_bound_check(q, n, [p](double x) { return std::pow(x, p); });
        EXPECT_TRUE(bound.holds()) << trial << " lhs " << bound.lhs << " rhs " << bound.rhs;
        ++checked;
    }
    EXPECT_EQ(checked, 50);
}

TEST(Transport, MomentBoundRejectsNonIntegrablePhi) {
    // phi(x) = e^{2x} against an exponential law has infinite mean.
    const auto q = analytic([](double s) { return -std::log1p(-s); });
    EXPECT_THROW(second_moment_bound_check(q, 10, [](double x) { return std::exp(2.0 * x); }),
                 DomainError);
}
