#include <cmath>

#include "doctest.h"
#include "psys/interaction.hpp"

using namespace psys;

// Reference values frozen from 40-digit evaluations of the same relations.

TEST_CASE("crossing at zero strength is the identity") {
    const CrossingResult r = cross_shock_exact(1.0, 0.5, 0.0);
    CHECK(r.eta == 0.0);
    CHECK(r.shock_after.left == r.shock_before.left);
    CHECK(r.shock_after.right == r.shock_before.right);
}

TEST_CASE("crossing map frozen values and preserved shock strength") {
    const CrossingResult a = cross_shock_exact(1.0, 0.5, 0.01);
    CHECK(std::abs(a.eta - 0.010497059878944644) < 1e-15);
    const CrossingResult b = cross_shock_exact(1.0, 0.5, -0.01);
    CHECK(std::abs(b.eta + 0.010477375788935927) < 1e-15);
    CHECK(a.shock_after.kind == WaveKind::Shock);
    CHECK(a.shock_after.strength == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(rh_residual(a.shock_after) <= 1e-12);
    CHECK_THROWS_AS(cross_shock_exact(1.0, 0.5, 0.6), DomainError);
}

TEST_CASE("crossing agrees with the bookkeeping Riemann route") {
    for (double rm : {1e-3, 0.1, 1.0}) {
        for (double eps : {0.3 * rm, -0.2 * rm, 1e-4 * rm}) {
            const CrossingResult c = cross_shock_exact(1.0, rm, eps);
            const GasState Pp{-eps, rm - eps};
            const GasState Q = c.shock_before.right;
            const RiemannSolution sol = solve_riemann_curves(Pp, Q, true, false);
            CHECK(std::abs((Q.rho - sol.middle.rho) - c.eta) <= 1e-12 * (1 + Q.rho));
        }
    }
}

TEST_CASE("crossing maps are invertible") {
    // cross back with the outgoing wave: the shock (P', Q') and wave (Q', Q) return to (P, Q)
    for (double eps : {0.05, -0.05, 1e-6}) {
        const double rm = 0.5;
        const CrossingResult c = cross_shock_exact(1.0, rm, eps);
        const GasState Pp = c.shock_after.left;
        const GasState Qp = c.shock_after.right;
        const GasState Q = c.shock_before.right;
        // undo: the 2-wave Q' -> Q placed back on the left of the shock
        const RiemannSolution back = solve_riemann_curves(Pp, Q, true, false);
        CHECK(std::abs(back.middle.rho - Qp.rho) <= 1e-10);
        const GasState P = c.shock_before.left;
        CHECK(std::abs(to_invariants(P).w2 - to_invariants(Pp).w2 - 2 * eps) <= 1e-12);
        CHECK(std::abs(to_invariants(Q).w2 - to_invariants(Qp).w2 - 2 * c.eta) <= 1e-12);
    }
}

TEST_CASE("derivative: closed form versus finite differences") {
    for (double sig : {0.1, 0.5, 1.0, 2.0})
        for (double rm : {1e-3, 1e-2, 0.1, 1.0}) {
            const AmplificationEstimate e = eta_prime_exact(sig, rm);
            CHECK(e.relative_gap() <= 1e-6);
        }
    CHECK(std::abs(eta_prime_exact(1.0, 1e-3).closed_form - 40.17693107849561) < 1e-11);
    CHECK(std::abs(eta_prime_exact(1.0, 1e-2).closed_form - 7.427351613382638) < 1e-12);
    CHECK(std::abs(eta_prime_exact(1.0, 1e-4).closed_form - 204.5667246615696) < 1e-10);
    CHECK(std::abs(eta_prime_exact(1.0, 0.1).closed_form - 1.6375876967142876) < 1e-13);
    CHECK(std::abs(eta_prime_exact(1.0, 1.0).closed_form - 1.0105242193542516) < 1e-13);
    CHECK(eta_prime_exact(1e-6, 1.0).closed_form == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("amplification worsens toward vacuum") {
    double prev = 0;
    for (double rm = 1.0; rm > 1e-5; rm *= 0.7) {
        const double v = eta_prime_exact(1.0, rm).closed_form;
        CHECK(v > prev);
        prev = v;
    }
}

TEST_CASE("small-shock formula and its true remainder") {
    CHECK(eta_prime_small_shock(0.0, 1.0) == 1.0);
    CHECK(eta_prime_small_shock(0.2, 1.0) == doctest::Approx(1.0026666666666666));
    // the remainder against 1 + s^3/3 is third order: the true coefficient is 1/6
    double prev = 0;
    for (double s : {0.2, 0.1, 0.05, 0.025}) {
        const double ep = eta_prime_exact(shock_strength_from_drop(s, 1.0), 1.0).closed_form;
        const double d = std::abs(ep - eta_prime_small_shock(s, 1.0));
        if (prev > 0) {
            CHECK(prev / d >= 8.0);
            CHECK(prev / d <= 32.0);
        }
        prev = d;
        CHECK(std::abs((ep - 1.0) / (s * s * s) - 1.0 / 6.0) < 0.3 * s);
    }
    const double ep1 = eta_prime_exact(shock_strength_from_drop(0.1, 1.0), 1.0).closed_form;
    CHECK(std::abs(ep1 - 1.0001434722146690) < 1e-13);
}

TEST_CASE("near-vacuum formula") {
    CHECK(eta_prime_near_vacuum(1.0, 1e-4) == doctest::Approx(223.1).epsilon(1e-3));
    // ratio approaches 1 from below
    const double r2 = eta_prime_exact(1.0, 1e-2).closed_form / eta_prime_near_vacuum(1.0, 1e-2);
    const double r3 = eta_prime_exact(1.0, 1e-3).closed_form / eta_prime_near_vacuum(1.0, 1e-3);
    const double r4 = eta_prime_exact(1.0, 1e-4).closed_form / eta_prime_near_vacuum(1.0, 1e-4);
    CHECK(r2 < r3);
    CHECK(r3 < r4);
    CHECK(r4 < 1.0);
    CHECK(std::abs(r4 - 0.9167) < 1e-3);
}

TEST_CASE("slope, reflection and period gain") {
    const SlopeConstruction c = a1b2_slope(0.1);
    CHECK(std::abs(c.slope - 8.358099546087261e-05) < 1e-15);
    CHECK(std::abs(c.r - 0.1000334661226305) < 1e-15);
    for (double s : {0.2, 0.1, 0.05}) {
        const SlopeConstruction k = a1b2_slope(s);
        CHECK(std::abs(k.slope / (s * s * s / 12) - 1) < 1.5 * s);
        CHECK(std::abs((k.r - s) / std::pow(s, 4) - 1.0 / 3.0) < 2 * s);
        CHECK(std::abs((reflection_coefficient(s) - (1 - s * s * s / 6)) / (s * s * s)) < s);
    }
    CHECK(std::abs(reflection_coefficient(0.2) - 0.9986485116114906) < 1e-14);
    CHECK(std::abs(period_gain(0.2) - 1.0009688216213065) < 1e-13);
    for (double s = 0.01; s <= 0.5; s += 0.01) CHECK(period_gain(s) > 1.0);
}
