#include <cmath>
#include <random>

#include "doctest.h"
#include "psys/riemann.hpp"

using namespace psys;

namespace {

// Independent curve formulas written from the unfactored jump relation.
double oracle_gap(double ra, double rb) {
    return std::sqrt((1.0 / ra - 1.0 / rb) * (rb * rb * rb - ra * ra * ra) / 3.0);
}
double oracle_f1(const GasState& L, double rho) {
    return rho > L.rho ? L.u - oracle_gap(L.rho, rho) : L.u + L.rho - rho;
}
double oracle_f2(const GasState& R, double rho) {
    return rho > R.rho ? R.u + oracle_gap(R.rho, rho) : R.u - R.rho + rho;
}

// Two-parameter grid refinement: minimise the larger curve distance over a (u, rho) box.
GasState grid_oracle(const GasState& L, const GasState& R) {
    double u0 = -40, u1 = 40, r0 = 1e-3, r1 = 60;
    GasState best{};
    for (int level = 0; level < 60; ++level) {
        const int n = 40;
        double best_d = 1e300;
        for (int i = 0; i <= n; ++i)
            for (int j = 0; j <= n; ++j) {
                const double u = u0 + (u1 - u0) * i / n;
                const double r = r0 + (r1 - r0) * j / n;
                const double d = std::max(std::abs(u - oracle_f1(L, r)), std::abs(u - oracle_f2(R, r)));
                if (d < best_d) {
                    best_d = d;
                    best = {u, r};
                }
            }
        const double du = (u1 - u0) / n * 2, dr = (r1 - r0) / n * 2;
        u0 = best.u - du;
        u1 = best.u + du;
        r0 = std::max(1e-6, best.rho - dr);
        r1 = best.rho + dr;
    }
    return best;
}

}  // namespace

TEST_CASE("pressure and characteristic speeds") {
    CHECK(pressure(1.0) == doctest::Approx(1.0 / 3.0));
    CHECK(pressure(0.5) == doctest::Approx(1.0 / 24.0));
    CHECK(pressure(3.0) == doctest::Approx(9.0));
    CHECK_THROWS_AS(pressure(0.0), DomainError);
    CHECK(char_speed(1.0, WaveFamily::Family1) == -1.0);
    CHECK(char_speed(2.0, WaveFamily::Family2) == 4.0);
    CHECK(char_speed(0.1, WaveFamily::Family1) == doctest::Approx(-0.01));
    CHECK_THROWS_AS(char_speed(-1.0, WaveFamily::Family2), DomainError);
}

TEST_CASE("invariant round trip") {
    auto w = to_invariants({0.0, 1.0});
    CHECK(w.w1 == 1.0);
    CHECK(w.w2 == 1.0);
    w = to_invariants({1.0, 2.0});
    CHECK(w.w1 == 1.0);
    CHECK(w.w2 == 3.0);
    CHECK_THROWS_AS(from_invariants({-1.0, 0.5}), DomainError);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> U(-5, 5), P(0.01, 10);
    for (int i = 0; i < 1000; ++i) {
        const GasState s{U(rng), P(rng)};
        const GasState b = from_invariants(to_invariants(s));
        CHECK(std::abs(b.u - s.u) <= 4e-15 * (1 + std::abs(s.u) + s.rho));
        CHECK(std::abs(b.rho - s.rho) <= 4e-15 * (1 + std::abs(s.u) + s.rho));
    }
}

TEST_CASE("shock jump and speed") {
    CHECK(shock_delta_u(1.0, 2.0) == doctest::Approx(-std::sqrt(7.0 / 6.0)).epsilon(1e-14));
    CHECK(shock_speed(1.0, 2.0, WaveFamily::Family1) ==
          doctest::Approx(-std::sqrt(14.0 / 3.0)).epsilon(1e-14));
    for (double h : {1e-3, 1e-5, 1e-7}) {
        CHECK(shock_delta_u(1.0, 1.0 + h) / -h == doctest::Approx(1.0).epsilon(2 * h));
        CHECK(shock_speed(1.0, 1.0 + h, WaveFamily::Family2) == doctest::Approx(1.0).epsilon(3 * h));
    }
    const double s = 0.1;
    const double um = -shock_delta_u(1.0 - s, 1.0);
    CHECK(std::abs(um - s * (1 + s * s / 6 + s * s * s / 6)) < 5 * std::pow(s, 5));
    CHECK(shock_velocity_gap(2.0, 5.0) == doctest::Approx(oracle_gap(2.0, 5.0)).epsilon(1e-14));
    CHECK_THROWS_AS(shock_delta_u(0.0, 1.0), DomainError);
}

TEST_CASE("psi") {
    CHECK(psi(1.0) == 0.0);
    CHECK(psi(2.0) == doctest::Approx(7.0 / 6.0).epsilon(1e-15));
    CHECK_THROWS_AS(psi(0.0), DomainError);
    // s = rho- sqrt(psi(theta)) reproduces the velocity jump
    for (double th : {1.1, 2.0, 7.0}) {
        const double rm = 0.3;
        CHECK(rm * std::sqrt(psi(th)) == doctest::Approx(shock_velocity_gap(rm, th * rm)).epsilon(1e-13));
    }
}

TEST_CASE("shock curve admissibility and residuals") {
    const GasState a{0.0, 1.0};
    CHECK(shock_curve(a, WaveFamily::Family1, Anchor::LeftGiven, 1.0) == a);
    CHECK_THROWS_AS(shock_curve(a, WaveFamily::Family1, Anchor::LeftGiven, 0.5), InadmissibleOrientation);
    CHECK_THROWS_AS(shock_curve(a, WaveFamily::Family2, Anchor::LeftGiven, 1.5), InadmissibleOrientation);
    const double s = 0.1;
    const GasState C = shock_curve(a, WaveFamily::Family1, Anchor::RightGiven, 1 - s);
    CHECK(C.u == doctest::Approx(-shock_delta_u(1 - s, 1.0)));
    const GasState D = shock_curve(a, WaveFamily::Family2, Anchor::RightGiven, 1 + s);
    CHECK(D.u == doctest::Approx(s * (1 + s * s / 6 - s * s * s / 6)).epsilon(1e-4));

    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> U(-5, 5), P(0.1, 10);
    for (int i = 0; i < 200; ++i) {
        const GasState L{U(rng), P(rng)};
        const double r = P(rng);
        const WaveFamily fam = (i % 2) ? WaveFamily::Family1 : WaveFamily::Family2;
        const bool dens = fam == WaveFamily::Family1;
        if (r == L.rho || (r > L.rho) != dens) continue;
        const GasState R = shock_curve(L, fam, Anchor::LeftGiven, r);
        const WaveDescriptor w = make_wave(L, R, fam, true);
        REQUIRE(w.kind == WaveKind::Shock);
        CHECK(rh_residual(w) <= 1e-10);
        // Lax inequalities
        CHECK(char_speed(L.rho, fam) > w.speed_exact);
        CHECK(w.speed_exact > char_speed(R.rho, fam));
        CHECK(R.u < L.u);
    }
}

TEST_CASE("rarefaction curve") {
    const GasState a{0.0, 1.0};
    CHECK(rarefaction_curve(a, WaveFamily::Family1, 0.0) == a);
    const GasState b = rarefaction_curve(a, WaveFamily::Family2, 0.5);
    CHECK(b.u == doctest::Approx(0.25));
    CHECK(b.rho == doctest::Approx(1.25));
    const GasState c = rarefaction_curve(b, WaveFamily::Family2, -0.5);
    CHECK(c.u == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(c.rho == doctest::Approx(1.0).epsilon(1e-15));
    CHECK_THROWS_AS(rarefaction_curve(a, WaveFamily::Family1, -2.5), VacuumFormation);
}

TEST_CASE("solve_riemann basic cases") {
    const GasState a{0.3, 1.7};
    const RiemannSolution same = solve_riemann(a, a);
    CHECK(same.wave1.strength == 0.0);
    CHECK(same.wave2.strength == 0.0);
    CHECK(same.middle == a);

    const RiemannSolution sym = solve_riemann({0.8, 1.0}, {-0.8, 1.0});
    CHECK(std::abs(sym.middle.u) < 1e-14);
    CHECK(sym.wave1.kind == WaveKind::Shock);
    CHECK(sym.wave2.kind == WaveKind::Shock);
    CHECK(sym.wave1.strength == doctest::Approx(sym.wave2.strength).epsilon(1e-13));

    // frozen 40-digit values
    const RiemannSolution r1 = solve_riemann({0, 1}, {1, 1});
    CHECK(r1.middle.u == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(r1.middle.rho == doctest::Approx(0.5).epsilon(1e-15));
    const RiemannSolution r2 = solve_riemann({1, 2}, {-1, 0.5});
    CHECK(std::abs(r2.middle.u - 0.9941435044127113) < 1e-14);
    CHECK(std::abs(r2.middle.rho - 2.0058564872422147) < 1e-14);

    CHECK_THROWS_AS(solve_riemann({-3, 1}, {3, 1}), VacuumFormation);
}

TEST_CASE("solve_riemann mirror symmetry and oracle agreement") {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> U(-5, 5), P(0.1, 10);
    int checked = 0;
    for (int i = 0; i < 40; ++i) {
        const GasState L{U(rng), P(rng)}, R{U(rng), P(rng)};
        RiemannSolution sol;
        try {
            sol = solve_riemann(L, R);
        } catch (const VacuumFormation&) {
            continue;
        }
        const RiemannSolution m = solve_riemann(mirror(R), mirror(L));
        CHECK(std::abs(m.middle.u + sol.middle.u) <= 1e-10 * (1 + std::abs(sol.middle.u)));
        CHECK(std::abs(m.middle.rho - sol.middle.rho) <= 1e-10 * sol.middle.rho);
        const GasState g = grid_oracle(L, R);
        CHECK(std::abs(g.u - sol.middle.u) <= 1e-8);
        CHECK(std::abs(g.rho - sol.middle.rho) <= 1e-8);
        CHECK(rh_residual(sol.wave1) <= 1e-10);
        CHECK(rh_residual(sol.wave2) <= 1e-10);
        ++checked;
    }
    CHECK(checked > 10);
}

TEST_CASE("bookkeeping curves keep the carried invariant exactly") {
    const GasState L{0.2, 1.3}, R{-0.4, 2.0};
    const RiemannSolution s = solve_riemann_curves(L, R, false, false);
    CHECK(to_invariants(s.middle).w2 == to_invariants(L).w2);
    CHECK(to_invariants(s.middle).w1 == to_invariants(R).w1);
    CHECK(s.wave1.kind == WaveKind::Compression);
    const RiemannSolution t = solve_riemann_curves(L, R, true, false);
    CHECK(t.wave1.kind == WaveKind::Shock);
    CHECK(to_invariants(t.middle).w1 == to_invariants(R).w1);
}

TEST_CASE("left-state construction through B1 and A2") {
    const GasState B1{-0.5, 2.0}, A2{0.5, 1.2};
    const GasState E{0.1, 1.5};
    for (double r : {1e-3, 0.1, 1.0, 1.4}) CHECK(lemma1_G(r, E, E) == 0.0);
    double prev = 1e300;
    for (double r = 1e-8; r < 1.2; r *= 1.3) {
        const double g = lemma1_G(r, B1, A2);
        CHECK(g < prev);
        prev = g;
    }
    CHECK(lemma1_G(1e-12, B1, A2) > 100.0);
    CHECK_THROWS_AS(lemma1_G(1.5, B1, A2), DomainError);

    CHECK(lemma1_rho2_star(B1, A2) < A2.rho);
    const GasState Ul = lemma1_left_state(B1, A2);
    CHECK(std::abs(Ul.u - 0.9964794959571440) < 1e-12);
    CHECK(std::abs(Ul.rho - 0.7238083119972943) < 1e-12);
    CHECK(std::abs(B1.u - Ul.u + oracle_gap(Ul.rho, B1.rho)) <= 1e-10);
    CHECK(std::abs(A2.u - Ul.u + oracle_gap(Ul.rho, A2.rho)) <= 1e-10);

    CHECK_THROWS_AS(lemma1_left_state(B1, B1), HypothesisViolation);
    // (ii) fails when A2 sits too close in velocity to B1 at high density
    try {
        lemma1_left_state({-0.5, 2.0}, {-0.4, 1.9});
        FAIL("expected violation");
    } catch (const HypothesisViolation& e) {
        CHECK(e.margin() > 0.0);
    }
}
