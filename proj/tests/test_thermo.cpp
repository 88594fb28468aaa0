#include <doctest.h>

#include <cmath>
#include <random>

#include "qhd/grid.hpp"
#include "qhd/thermo.hpp"

using namespace qhd;

namespace {
// deterministic uniform draw, independent of library distributions
struct Uniform {
    std::mt19937_64 rng;
    explicit Uniform(std::uint64_t seed) : rng(seed) {}
    double operator()(double lo, double hi) {
        return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
    }
};
}  // namespace

TEST_CASE("f_delta") {
    CHECK(f_delta(0.0, 0.0) == 0.0);  // 0 log 0 = 0 convention
    CHECK(f_delta(0.0, 0.5) == doctest::Approx(0.5 * std::log(0.5)).epsilon(1e-14));
    for (double delta : {0.0, 0.3, 0.9}) {
        const double rho = std::exp(1.0) - delta;
        CHECK(f_delta_prime(rho, delta) == doctest::Approx(2.0).epsilon(1e-14));
    }
    CHECK_THROWS_AS(f_delta(-1.0, 0.1), std::invalid_argument);
}

TEST_CASE("p_delta") {
    CHECK(p_delta(1.0, 0.0) == 1.0);  // P(rho) = rho
    CHECK(p_delta(0.75, 0.25) == doctest::Approx(0.75).epsilon(1e-14));  // log 1 = 0
    CHECK(p_delta(0.0, 0.1) == doctest::Approx(-0.1 * std::log(0.1)).epsilon(1e-14));
    CHECK(p_delta(0.0, 0.0) == 0.0);
    CHECK_THROWS_AS(p_delta(-0.5, 0.1), std::invalid_argument);

    // P_delta(rho) -> rho with the stated rate
    for (int j = 1; j <= 8; ++j) {
        const double delta = std::pow(10.0, -j);
        for (int i = 0; i <= 100; ++i) {
            const double rho = 0.1 * i;
            const double gap = std::abs(p_delta(rho, delta) - rho);
            CHECK(gap <= delta * (std::abs(std::log(delta)) + std::log(rho + 1.0) + 1.0));
        }
    }
}

TEST_CASE("entropy density and floor") {
    const double at_min = entropy_density(std::exp(-1.0));
    CHECK(at_min == doctest::Approx(-1.0 / std::exp(1.0)).epsilon(1e-14));
    CHECK(entropy_density(1.0) == 0.0);
    CHECK(entropy_density(std::exp(1.0)) ==
          doctest::Approx(std::exp(1.0)).epsilon(1e-14));
    CHECK_THROWS_AS(entropy_density(-0.1), std::invalid_argument);

    TorusGrid g(1, 8);
    ScalarField rho(g, 0.5);
    CHECK(entropy_min_check(rho));
    rho.values[3] = std::exp(-1.0);  // exactly the minimizer
    CHECK(entropy_min_check(rho));

    // f_delta inherits the shifted bound: f_delta(rho) >= -1/e
    Uniform u(99);
    for (int i = 0; i < 10000; ++i) {
        const double rho_s = u(0.0, 10.0);
        const double delta = u(0.0, 1.0);
        CHECK(f_delta(rho_s, delta) >= kEntropyFloor - 1e-12);
    }
}

TEST_CASE("F_delta") {
    CHECK(std::abs(F_delta(Complex(0, 0), 0.3)) == 0.0);
    CHECK(F_delta(Complex(1, 0), std::exp(1.0) - 1.0).real() ==
          doctest::Approx(2.0).epsilon(1e-14));
    {
        // |z|^2 + delta = e, so the multiplier is log(e) + 1 = 2
        const double delta = 0.1;
        const Complex z(0.0, std::sqrt(std::exp(1.0) - delta));
        const Complex out = F_delta(z, delta);
        CHECK(out.real() == doctest::Approx(0.0));
        CHECK(out.imag() == doctest::Approx(2.0 * std::sqrt(std::exp(1.0) - delta)).epsilon(1e-14));
        CHECK(std::abs(out - 2.0 * z) <= 1e-14);
    }
    SUBCASE("F_delta(z) conj(z) is real: the flow preserves the modulus") {
        Uniform u(4242);
        for (int i = 0; i < 1000; ++i) {
            const Complex z(u(-5, 5), u(-5, 5));
            const Complex w = F_delta(z, 0.05) * std::conj(z);
            CHECK(std::abs(w.imag()) <= 1e-12 * (1.0 + std::abs(w)));
        }
    }
    SUBCASE("growth bound |F| <= C (|z| + |z|^3), C frozen from the sampling oracle") {
        Uniform u(515);
        for (double delta : {1e-1, 1e-3, 1e-6})
            for (int i = 0; i < 100000; ++i) {
                const Complex z = std::polar(std::pow(10.0, u(-9, 1)), u(0, 2 * M_PI));
                if (std::abs(z) > 10.0 || std::abs(z) == 0.0) continue;
                const double ratio =
                    std::abs(F_delta(z, delta)) / (std::abs(z) + std::pow(std::abs(z), 3));
                CHECK(ratio <= kGrowthConstant);
            }
    }
}

TEST_CASE("haraux ratio") {
    // both on the real axis: the numerator is real, so Im vanishes
    CHECK(haraux_ratio(Complex(1, 0), Complex(2, 0)) == doctest::Approx(0.0));
    // z1 = 1, z2 = 2i: numerator Im = -2 ln 4, |z2 - z1|^2 = 5
    CHECK(haraux_ratio(Complex(1, 0), Complex(0, 2)) ==
          doctest::Approx(-2.0 * std::log(4.0) / 5.0).epsilon(1e-14));
    CHECK_THROWS_AS(haraux_ratio(Complex(1, 1), Complex(1, 1)), std::invalid_argument);
    // z ln|z|^2 = 0 at z = 0 convention
    CHECK(std::isfinite(haraux_ratio(Complex(0, 0), Complex(1, 0))));

    // fresh-sample property check against the frozen constant
    Uniform u(2468);
    double sup = 0.0;
    for (int i = 0; i < 200000; ++i) {
        const Complex z1(u(-10, 10), u(-10, 10));
        const Complex z2(u(-10, 10), u(-10, 10));
        if (std::abs(z1 - z2) < 1e-12) continue;
        const double r = haraux_ratio(z1, z2);
        CHECK(r <= kHarauxConstant);
        sup = std::max(sup, r);
    }
    CHECK(sup > 0.9);  // the bound is nearly attained, so the test has teeth
}

TEST_CASE("lipschitz ratio") {
    // direct evaluation: |F_1(1) - F_1(0)| / ((1 + |log 1|) * 1) = log 2 + 1
    CHECK(lipschitz_ratio(Complex(1, 0), Complex(0, 0), 1.0) ==
          doctest::Approx(std::log(2.0) + 1.0).epsilon(1e-14));
    CHECK_THROWS_AS(lipschitz_ratio(Complex(1, 0), Complex(1, 0), 0.5), std::invalid_argument);
    CHECK_THROWS_AS(lipschitz_ratio(Complex(1, 0), Complex(0, 0), 0.0), std::invalid_argument);

    SUBCASE("difference quotient at the origin approaches |log delta + 1|/(1 + |log delta|)") {
        for (double delta : {1e-2, 1e-4}) {
            const double r = lipschitz_ratio(Complex(1e-9, 0), Complex(0, 0), delta);
            const double expect =
                std::abs(std::log(delta) + 1.0) / (1.0 + std::abs(std::log(delta)));
            CHECK(r == doctest::Approx(expect).epsilon(1e-6));
            CHECK(r <= 1.0 + 1e-12);
        }
    }
    SUBCASE("uniform bound over delta ladder, frozen from the sampling oracle") {
        Uniform u(31337);
        for (double delta : {1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6})
            for (int i = 0; i < 50000; ++i) {
                const Complex z1(u(-10, 10), u(-10, 10));
                const Complex z2 =
                    z1 + std::polar(std::pow(10.0, u(-8, 0)), u(0, 2 * M_PI));
                if (std::abs(z1) > 10.0 || std::abs(z2) > 10.0 || z1 == z2) continue;
                CHECK(lipschitz_ratio(z1, z2, delta) <= kLipschitzConstant);
            }
    }
}

TEST_CASE("ThermoParams validation") {
    ThermoParams ok{0.0, 1.0};
    CHECK_NOTHROW(ok.validate());
    ThermoParams bad_delta{-0.1, 1.0};
    CHECK_THROWS_AS(bad_delta.validate(), std::invalid_argument);
    ThermoParams bad_hbar{0.1, 0.0};
    CHECK_THROWS_AS(bad_hbar.validate(), std::invalid_argument);
}
