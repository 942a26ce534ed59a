#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "wallsim/potential.hpp"

namespace wp = wallsim::potential;

namespace {

// Reference values from 40-digit evaluation of r coth r - log sinh r - log 2.
constexpr double v_at_1 = 0.45844874336819036061;
constexpr double v_prime_at_1 = -0.72406166096631046641;
constexpr double v_second_at_2 = 0.23941242291263252157;
constexpr double v_eff_at_1 = 0.57256907379074566560;

double central_difference(double (*f)(double), double r, double h) {
    return (f(r + h) - f(r - h)) / (2.0 * h);
}

// Integrating V(r) = sum_k (2r e^{-2kr} + e^{-2kr}/k) termwise gives sum_k 1/k^2.
// Summed smallest-first, with the Euler-Maclaurin tail from N on.
double series_oracle_for_a() {
    constexpr int N = 1'000'000;
    double sum = 0.0;
    for (int k = N - 1; k >= 1; --k) sum += 1.0 / (static_cast<double>(k) * k);
    const double n = N;
    return sum + 1.0 / n + 1.0 / (2.0 * n * n) + 1.0 / (6.0 * n * n * n);
}

}  // namespace

TEST(Potential, ValueAtOne) {
    EXPECT_NEAR(wp::value(1.0), v_at_1, 1e-15);
    EXPECT_EQ(wp::value(-1.0), wp::value(1.0));
}

TEST(Potential, SmallArgumentMatchesSeries) {
    EXPECT_NEAR(wp::value(1e-6) + std::log(1e-6), 1.0 - std::numbers::ln2, 1e-6);
    EXPECT_NEAR(wp::regular_part(0.0), 1.0 - std::numbers::ln2, 1e-16);
}

TEST(Potential, BranchesAgreeAtSwitchPoints) {
    for (double r : {wp::series_radius, wp::exponential_radius}) {
        const double lo = std::nextafter(r, 0.0);
        EXPECT_NEAR(wp::value(lo), wp::value(r), 1e-12) << r;
        EXPECT_NEAR(wp::first_derivative(lo), wp::first_derivative(r), 1e-9) << r;
        EXPECT_NEAR(wp::second_derivative(lo) / wp::second_derivative(r), 1.0, 1e-12) << r;
    }
}

TEST(Potential, DomainErrors) {
    EXPECT_THROW(wp::value(0.0), wallsim::DomainError);
    EXPECT_THROW(wp::value(NAN), wallsim::DomainError);
    EXPECT_THROW(wp::value(INFINITY), wallsim::DomainError);
    EXPECT_THROW(wp::first_derivative(0.0), wallsim::DomainError);
    EXPECT_THROW(wp::second_derivative(0.0), wallsim::DomainError);
    EXPECT_THROW(wp::effective(0.0), wallsim::DomainError);
    EXPECT_THROW(wp::effective(-1.0), wallsim::DomainError);
}

TEST(Potential, DerivativesMatchFiniteDifferences) {
    EXPECT_NEAR(wp::first_derivative(1.0), v_prime_at_1, 1e-15);
    EXPECT_NEAR(central_difference(wp::value, 1.0, 1e-6), v_prime_at_1, 1e-9);
    EXPECT_NEAR(wp::second_derivative(2.0), v_second_at_2, 1e-15);
    const double fd2 = (wp::value(2.0 + 1e-4) - 2.0 * wp::value(2.0) + wp::value(2.0 - 1e-4)) / 1e-8;
    EXPECT_NEAR(wp::second_derivative(2.0) / fd2, 1.0, 1e-6);
    for (double r : {0.01, 0.1, 1.0, 5.0, 20.0}) {
        const double d = wp::first_derivative(r);
        EXPECT_LT(std::abs(d - central_difference(wp::value, r, 1e-6)), 1e-6 * (1.0 + std::abs(d)))
            << r;
        EXPECT_NEAR(wp::first_derivative(-r), -d, 1e-15 * std::abs(d));
        const double s = wp::second_derivative(r);
        EXPECT_LT(std::abs(s - central_difference(wp::first_derivative, r, 1e-6)),
                  1e-6 * (1.0 + std::abs(s)))
            << r;
    }
}

TEST(Potential, EvenAndDecreasing) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-30.0, 30.0);
    for (int i = 0; i < 100; ++i) {
        const double r = u(rng);
        if (r == 0.0) continue;
        EXPECT_LT(std::abs(wp::value(r) - wp::value(-r)), 1e-14);
    }
    double prev = wp::value(1e-8);
    for (double r = 1e-3; r < 40.0; r *= 1.1) {
        const double v = wp::value(r);
        EXPECT_LT(v, prev) << r;
        EXPECT_GE(v, 0.0);
        prev = v;
    }
}

TEST(Potential, ExponentialTail) {
    for (double r = 10.0; r <= 60.0; r += 2.5) {
        const double e = std::exp(-2.0 * r);
        EXPECT_NEAR(wp::value(r) / ((2.0 * r + 1.0) * e), 1.0, 1e-7) << r;
    }
    EXPECT_EQ(wp::value(800.0), 0.0);
    EXPECT_EQ(wp::first_derivative(800.0), 0.0);
}

TEST(Potential, EffectivePotential) {
    EXPECT_GE(wp::effective(1.0), wp::value(1.0));
    double brute = 0.0;
    for (int k = 1; k <= 100; ++k) brute += wp::value(k);
    EXPECT_NEAR(wp::effective(1.0), brute, 1e-15);
    EXPECT_NEAR(wp::effective(1.0), v_eff_at_1, 1e-15);

    double tail = 0.0;
    for (int k = 2; k <= 50; ++k) tail += wp::value(10.0 * k);
    EXPECT_LT(wp::effective(10.0) - wp::value(10.0), 1e-8);
    EXPECT_NEAR(wp::effective(10.0) - wp::value(10.0), tail, 1e-20);
}

TEST(Potential, EffectiveSecondDerivativeMatchesDifferences) {
    for (double r : {0.5, 1.0, 3.0}) {
        const double h = 1e-4;
        const double fd = (wp::effective(r + h) - 2.0 * wp::effective(r) + wp::effective(r - h)) / (h * h);
        EXPECT_NEAR(wp::effective_second_derivative(r) / fd, 1.0, 1e-5) << r;
        const double fd1 = (wp::effective(r + 1e-6) - wp::effective(r - 1e-6)) / 2e-6;
        EXPECT_NEAR(wp::effective_first_derivative(r) / fd1, 1.0, 1e-7) << r;
    }
}

TEST(Potential, IntegralIsPiSquaredOverSix) {
    const double oracle = series_oracle_for_a();
    EXPECT_NEAR(oracle, std::numbers::pi * std::numbers::pi / 6.0, 1e-13);
    EXPECT_NEAR(wp::integral(), oracle, 1e-10);
    EXPECT_NEAR(2.0 * std::sqrt(wp::integral()), 2.565099660323728, 1e-12);
}

TEST(Potential, IntegralIsAdditive) {
    const double inf = std::numeric_limits<double>::infinity();
    EXPECT_EQ(wp::integral(0.0, 1.0) + wp::integral(1.0, inf), wp::integral());
    EXPECT_NEAR(wp::integral(0.0, 0.3) + wp::integral(0.3, 4.0) + wp::integral(4.0, inf),
                wp::integral(), 1e-13);
}
