// SPDX-License-Identifier: Apache-2.0
//
// Tests for the two-type constant-fitness toolbox: the averaged
// mutation-selection ODE (closed forms against an independent RK4 oracle and
// frozen high-precision values), the rest point, the threshold conversion
// fraction, and the fraction-one expected-frequency solution with its
// evolution-equation residual.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "raremut/ode.hpp"
#include "raremut/rng.hpp"
#include "raremut/two_species.hpp"

using raremut::PathRng;
using raremut::TwoSpeciesParams;
using raremut::quasispecies_equilibrium;
using raremut::quasispecies_rate;
using raremut::quasispecies_solution;
using raremut::threshold_fraction;
using raremut::threshold_residual;
using raremut::total_conversion_solution;

namespace {

// Independent oracle: integrate the averaged ODE with a small fixed step.
double ode_oracle(const TwoSpeciesParams& p, double x, double t) {
    return raremut::rk4_scalar(
        [&p](double y) { return quasispecies_rate(p, y); }, x, 0.0, t, 1e-4);
}

}  // namespace

TEST_CASE("TwoSpeciesParams validates its inputs and derives rates") {
    const TwoSpeciesParams p(2.0, 1.0, 0.5, 0.0, 0.5, 1.0);
    CHECK(p.s() == 1.0);
    CHECK(p.m0() == 0.25);
    CHECK(p.m1() == 0.0);
    CHECK(p.channels().size() == 1);

    CHECK(TwoSpeciesParams(2.0, 1.0).channels().empty());
    CHECK(TwoSpeciesParams(2.0, 1.0, 0.5, 0.5).channels().size() == 2);

    CHECK_THROWS_AS(TwoSpeciesParams(1.0, 1.0), std::invalid_argument);   // s = 0
    CHECK_THROWS_AS(TwoSpeciesParams(1.0, 2.0), std::invalid_argument);   // s < 0
    CHECK_THROWS_AS(TwoSpeciesParams(1.0, -0.5), std::invalid_argument);  // f1 < 0
    CHECK_THROWS_AS(TwoSpeciesParams(2.0, 1.0, -0.1), std::invalid_argument);
    CHECK_THROWS_AS(TwoSpeciesParams(2.0, 1.0, 0.5, 0.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(TwoSpeciesParams(2.0, 1.0, 0.5, 0.0, 1.5), std::invalid_argument);
}

TEST_CASE("quasispecies_equilibrium covers every mutation regime") {
    // No forward mutation: extinction of the less fit type.
    CHECK(quasispecies_equilibrium(TwoSpeciesParams(2.0, 1.0)) == 0.0);
    CHECK(quasispecies_equilibrium(TwoSpeciesParams(2.0, 1.0, 0.0, 0.5)) == 0.0);

    // Relaxation regime m0 f0 < s: rest point m0 f0 / s.
    CHECK_THAT(quasispecies_equilibrium(TwoSpeciesParams(2.0, 1.0, 0.5, 0.0, 0.5)),
               Catch::Matchers::WithinAbs(0.5, 1e-15));

    // Critical and fixation regimes m0 f0 >= s: the rest point reaches 1.
    CHECK_THAT(quasispecies_equilibrium(TwoSpeciesParams(2.0, 1.0, 1.0, 0.0, 0.5)),
               Catch::Matchers::WithinAbs(1.0, 1e-15));
    CHECK_THAT(quasispecies_equilibrium(TwoSpeciesParams(2.0, 1.0, 1.5, 0.0, 1.0)),
               Catch::Matchers::WithinAbs(1.0, 1e-15));

    // Two-sided mutation with round numbers: s=1, m0 f0 = 1, m1 f1 = 1/2
    // gives the quadratic x^2 - 2.5 x + 1 with stable root exactly 1/2.
    CHECK(quasispecies_equilibrium(TwoSpeciesParams(2.0, 1.0, 0.5, 0.5)) == 0.5);
}

TEST_CASE("the equilibrium is a root of the averaged rate", "[property]") {
    PathRng rng(424242, 0);
    for (int trial = 0; trial < 200; ++trial) {
        const double f1 = 2.0 * rng.uniform01();
        const double f0 = f1 + 0.1 + 2.0 * rng.uniform01();
        const double l0 = 2.0 * rng.uniform01();
        const double l1 = 2.0 * rng.uniform01();
        const double g0 = 0.05 + 0.95 * rng.uniform01();
        const double g1 = 0.05 + 0.95 * rng.uniform01();
        const TwoSpeciesParams p(f0, f1, l0, l1, g0, g1);

        const double xbar = quasispecies_equilibrium(p);
        REQUIRE(xbar >= 0.0);
        REQUIRE(xbar <= 1.0);
        if (xbar < 1.0) {
            const double scale = p.s() + p.m0() * p.f0 + p.m1() * p.f1;
            CHECK_THAT(quasispecies_rate(p, xbar),
                       Catch::Matchers::WithinAbs(0.0, 1e-12 * scale));
        }
    }
}

TEST_CASE("quasispecies_solution matches frozen values in every branch") {
    // Relaxation (m0 f0 = 1/2 < s = 1), from above the rest point.
    const TwoSpeciesParams relax(2.0, 1.0, 0.5, 0.0, 0.5);
    CHECK_THAT(quasispecies_solution(relax, 0.8, 5.0),
               Catch::Matchers::WithinAbs(0.55481456832022160, 1e-14));

    // Critical balance m0 f0 = s: algebraic 1/t relaxation, X(0.4, 3) = 11/14.
    const TwoSpeciesParams critical(2.0, 1.0, 1.0, 0.0, 0.5);
    CHECK_THAT(quasispecies_solution(critical, 0.4, 3.0),
               Catch::Matchers::WithinAbs(0.78571428571428571, 1e-14));

    // Fixation m0 f0 = 3 > s.
    const TwoSpeciesParams fixation(2.0, 1.0, 1.5, 0.0, 1.0);
    CHECK_THAT(quasispecies_solution(fixation, 0.2, 2.0),
               Catch::Matchers::WithinAbs(0.98947886310814902, 1e-14));

    // Pure back-mutation m0 = 0, m1 f1 = 1/2.
    const TwoSpeciesParams fair(2.0, 1.0, 0.0, 0.5);
    CHECK_THAT(quasispecies_solution(fair, 0.5, 1.0),
               Catch::Matchers::WithinAbs(0.15055134702517752, 1e-14));

    // No mutation at all: plain selection decay, X(1/2, 1) = sigmoid(-1).
    const TwoSpeciesParams none(2.0, 1.0);
    CHECK_THAT(quasispecies_solution(none, 0.5, 1.0),
               Catch::Matchers::WithinAbs(0.26894142136999512, 1e-15));
}

TEST_CASE("quasispecies_solution agrees with a fine RK4 integration") {
    const TwoSpeciesParams relax(2.0, 1.0, 0.5, 0.0, 0.5);
    const TwoSpeciesParams critical(2.0, 1.0, 1.0, 0.0, 0.5);
    const TwoSpeciesParams fixation(2.0, 1.0, 1.5, 0.0, 1.0);
    const TwoSpeciesParams fair(2.0, 1.0, 0.0, 0.5);
    const TwoSpeciesParams twosided(2.0, 1.0, 0.5, 0.5);

    for (const auto* p : {&relax, &critical, &fixation, &fair, &twosided}) {
        for (double x : {0.05, 0.4, 0.9}) {
            for (double t : {0.3, 1.5}) {
                CHECK_THAT(quasispecies_solution(*p, x, t),
                           Catch::Matchers::WithinAbs(ode_oracle(*p, x, t), 1e-8));
            }
        }
    }
}

TEST_CASE("quasispecies_solution relaxes onto the rest point") {
    const TwoSpeciesParams relax(2.0, 1.0, 0.5, 0.0, 0.5);
    CHECK_THAT(quasispecies_solution(relax, 0.9, 200.0),
               Catch::Matchers::WithinAbs(0.5, 1e-12));
    // Far beyond the exponential horizon the branch returns the rest point.
    CHECK(quasispecies_solution(relax, 0.9, 1e6) == 0.5);

    const TwoSpeciesParams twosided(2.0, 1.0, 0.5, 0.5);
    CHECK_THAT(quasispecies_solution(twosided, 0.1, 30.0),
               Catch::Matchers::WithinAbs(0.5, 1e-10));

    // Monotone decay from above the rest point.
    double prev = 1.0;
    for (double t : {0.5, 1.0, 2.0, 4.0, 8.0}) {
        const double v = quasispecies_solution(relax, 0.9, t);
        CHECK(v < prev);
        CHECK(v > 0.5);
        prev = v;
    }
}

TEST_CASE("quasispecies_solution validates its domain") {
    const TwoSpeciesParams p(2.0, 1.0, 0.5, 0.0, 0.5);
    CHECK_THROWS_AS(quasispecies_solution(p, -0.1, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(quasispecies_solution(p, 1.1, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(quasispecies_solution(p, 0.5, -1.0), std::invalid_argument);
    CHECK(quasispecies_solution(p, 1.0, 3.0) == 1.0);
    CHECK(quasispecies_solution(p, 0.5, 0.0) == 0.5);
}

TEST_CASE("threshold_fraction solves s g + m f log(1-g) = 0 accurately") {
    // Frozen high-precision roots.
    CHECK_THAT(threshold_fraction(1.0, 0.5),
               Catch::Matchers::WithinAbs(0.79681213002002005, 1e-12));
    CHECK_THAT(threshold_fraction(2.0, 1.0),
               Catch::Matchers::WithinAbs(0.79681213002002005, 1e-12));
    CHECK_THAT(threshold_fraction(5.0, 1.0),
               Catch::Matchers::WithinAbs(0.99302284634885526, 1e-12));
    CHECK_THAT(threshold_fraction(2.0, 1.5),
               Catch::Matchers::WithinAbs(0.45439498343925026, 1e-12));

    // The returned point is a root of the defining function.  The residual
    // check needs mf / s away from 0: the root approaches 1 so fast that a
    // half-ulp representation error is amplified by g'(gamma) ~ -mf/(1-gamma).
    for (auto [s, mf] : {std::pair{2.0, 1.0}, std::pair{5.0, 1.0},
                         std::pair{1.0, 0.9}, std::pair{3.0, 0.5}}) {
        const double g = threshold_fraction(s, mf);
        CHECK(g > 1.0 - mf / s);
        CHECK(g < 1.0);
        CHECK_THAT(threshold_residual(s, mf, g),
                   Catch::Matchers::WithinAbs(0.0, 1e-12 * s));
    }

    // For very small mf / s the exact root 1 - exp(-w*) with w* ~ s / mf is
    // within one ulp of 1, and the correctly rounded result is exactly 1.0.
    CHECK(threshold_fraction(3.0, 0.01) == 1.0);

    // Larger selection (or weaker mutation) pushes the threshold up.
    CHECK(threshold_fraction(3.0, 1.0) > threshold_fraction(2.0, 1.0));
    CHECK(threshold_fraction(2.0, 0.5) > threshold_fraction(2.0, 1.0));

    CHECK_THROWS_AS(threshold_fraction(0.0, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(threshold_fraction(1.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(threshold_fraction(1.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(threshold_fraction(1.0, 2.0), std::invalid_argument);
}

TEST_CASE("total_conversion_solution matches frozen values and edge cases") {
    // s = 1, m f = 1/2.
    CHECK_THAT(total_conversion_solution(1.0, 0.5, 0.0, 2.0),
               Catch::Matchers::WithinAbs(0.63212055882855768, 1e-15));
    CHECK_THAT(total_conversion_solution(1.0, 0.5, 0.3, 2.0),
               Catch::Matchers::WithinAbs(0.65228813743092182, 1e-15));

    // Initial datum and absorbing upper endpoint.
    for (double x : {0.0, 0.3, 0.7, 1.0}) {
        CHECK_THAT(total_conversion_solution(1.0, 0.5, x, 0.0),
                   Catch::Matchers::WithinAbs(x, 1e-15));
    }
    CHECK(total_conversion_solution(1.0, 0.5, 1.0, 3.0) == 1.0);

    // Saturation at enormous times, without overflow.
    CHECK_THAT(total_conversion_solution(1.0, 0.5, 0.3, 2000.0),
               Catch::Matchers::WithinAbs(1.0, 1e-15));

    // Monotone in t: more exposure to events can only raise the expectation.
    double prev = 0.0;
    for (double t : {0.2, 0.5, 1.0, 2.0, 5.0}) {
        const double v = total_conversion_solution(1.0, 0.5, 0.1, t);
        CHECK(v > prev);
        prev = v;
    }

    CHECK_THROWS_AS(total_conversion_solution(0.0, 0.5, 0.3, 1.0),
                    std::invalid_argument);
    CHECK_THROWS_AS(total_conversion_solution(1.0, 0.0, 0.3, 1.0),
                    std::invalid_argument);
    CHECK_THROWS_AS(total_conversion_solution(1.0, 0.5, -0.1, 1.0),
                    std::invalid_argument);
    CHECK_THROWS_AS(total_conversion_solution(1.0, 0.5, 0.3, -1.0),
                    std::invalid_argument);

    // Parameter overload requires a pure 0 -> 1 model.
    const TwoSpeciesParams p(2.0, 1.0, 0.5, 0.0, 1.0);
    CHECK_THAT(total_conversion_solution(p, 0.3, 2.0),
               Catch::Matchers::WithinAbs(
                   total_conversion_solution(1.0, 1.0, 0.3, 2.0), 1e-15));
    const TwoSpeciesParams back(2.0, 1.0, 0.5, 0.5);
    CHECK_THROWS_AS(total_conversion_solution(back, 0.3, 2.0),
                    std::invalid_argument);
}

TEST_CASE("closed-form derivatives agree with finite differences") {
    const raremut::TotalConversionClosedForm z{1.0, 0.5};
    const raremut::QuasispeciesClosedForm q{1.0, 0.5};
    const double h = 1e-6;
    for (double x : {0.1, 0.45, 0.8}) {
        for (double t : {0.2, 1.0, 1.8}) {
            const double zdx = (z.value(x + h, t) - z.value(x - h, t)) / (2 * h);
            const double zdt = (z.value(x, t + h) - z.value(x, t - h)) / (2 * h);
            CHECK_THAT(z.dx(x, t), Catch::Matchers::WithinAbs(zdx, 1e-6));
            CHECK_THAT(z.dt(x, t), Catch::Matchers::WithinAbs(zdt, 1e-6));

            const double qdx = (q.value(x + h, t) - q.value(x - h, t)) / (2 * h);
            const double qdt = (q.value(x, t + h) - q.value(x, t - h)) / (2 * h);
            CHECK_THAT(q.dx(x, t), Catch::Matchers::WithinAbs(qdx, 1e-6));
            CHECK_THAT(q.dt(x, t), Catch::Matchers::WithinAbs(qdt, 1e-6));
        }
    }
}

TEST_CASE("the fraction-one solution satisfies its evolution equation; the "
          "averaged solution does not") {
    const double s = 1.0, mf = 0.5;

    // Positive control: residual at round-off.
    const raremut::TotalConversionClosedForm z{s, mf};
    CHECK(raremut::total_conversion_pde_residual(s, mf, z) <= 1e-12);

    // Steady state u = 1 is also a solution.
    struct ConstOne {
        double value(double, double) const { return 1.0; }
        double dx(double, double) const { return 0.0; }
        double dt(double, double) const { return 0.0; }
    };
    CHECK(raremut::total_conversion_pde_residual(s, mf, ConstOne{}) == 0.0);

    // Negative control: the averaged-ODE solution transports locally and
    // misses the nonlocal event term by a visible margin.
    const raremut::QuasispeciesClosedForm q{s, mf};
    CHECK(raremut::total_conversion_pde_residual(s, mf, q) >= 0.01);

    raremut::ResidualGrid bad;
    bad.nx = 1;
    CHECK_THROWS_AS(raremut::total_conversion_pde_residual(s, mf, z, bad),
                    std::invalid_argument);
}
