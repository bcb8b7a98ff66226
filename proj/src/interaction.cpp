#include "psys/interaction.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace psys {

namespace {

void check_shock_args(double sigma1, double rho_minus, const RiemannConfig& cfg) {
    if (!(sigma1 > 0.0)) throw DomainError("shock strength must be positive");
    if (!(rho_minus > cfg.rho_floor)) {
        std::ostringstream os;
        os << "left density " << rho_minus << " at or below floor " << cfg.rho_floor;
        throw VacuumFormation(os.str(), rho_minus);
    }
}

double eta_at(double sigma1, double rho_minus, double eps, const RiemannConfig& cfg) {
    return cross_shock_exact(sigma1, rho_minus, eps, cfg).eta;
}

}  // namespace

double shock_theta(double sigma1, double rho_minus, const RiemannConfig& cfg) {
    check_shock_args(sigma1, rho_minus, cfg);
    auto g = [&](double th) { return rho_minus * ((th - 1.0) + std::sqrt(psi(th))) - sigma1; };
    double hi = 2.0;
    while (g(hi) < 0.0) hi *= 2.0;
    return find_root(g, 1.0, hi, cfg);
}

double shock_strength_from_drop(double s, double rho_minus, const RiemannConfig& cfg) {
    if (!(s > 0.0) || !(rho_minus > 0.0)) throw DomainError("shock_strength_from_drop: bad arguments");
    auto g = [&](double th) { return rho_minus * std::sqrt(psi(th)) - s; };
    double hi = 2.0;
    while (g(hi) < 0.0) hi *= 2.0;
    const double theta = find_root(g, 1.0, hi, cfg);
    return (theta - 1.0) * rho_minus + s;
}

double shock_velocity_drop(double sigma1, double rho_minus, const RiemannConfig& cfg) {
    return rho_minus * std::sqrt(psi(shock_theta(sigma1, rho_minus, cfg)));
}

CrossingResult cross_shock_exact(double sigma1, double rho_minus, double epsilon,
                                 const RiemannConfig& cfg) {
    check_shock_args(sigma1, rho_minus, cfg);
    if (!(std::abs(epsilon) < rho_minus)) throw DomainError("cross_shock_exact: |epsilon| >= rho-");
    const double theta = shock_theta(sigma1, rho_minus, cfg);
    const double s = rho_minus * std::sqrt(psi(theta));
    const GasState P{0.0, rho_minus};
    const GasState Q{-s, theta * rho_minus};

    CrossingResult res;
    res.shock_before = make_wave(P, Q, WaveFamily::Family1, true);
    if (epsilon == 0.0) {
        res.eta = 0.0;
        res.shock_after = res.shock_before;
        res.amplification = eta_prime_closed(theta, rho_minus);
        return res;
    }
    const double rl = rho_minus - epsilon;
    if (rl <= cfg.rho_floor)
        throw VacuumFormation("cross_shock_exact: shifted left density at floor", rl);

    // relation s(eps) = (rho- - eps) sqrt(psi(theta(eps))) written as F(eta) = 0, F increasing
    auto F = [&](double eta) {
        const double th = (theta * rho_minus - eta) / rl;
        return s - epsilon + eta - rl * std::sqrt(psi(th));
    };
    const double hi = theta * rho_minus - rl;  // theta(eps) -> 1, F = sigma1 > 0
    double step = std::max(std::abs(epsilon), 1e-3 * rho_minus);
    double lo = hi - step;
    while (F(lo) > 0.0) {
        step *= 2.0;
        lo = hi - step;
        if (step > 1e200) throw NonConvergence("cross_shock_exact: no lower bracket");
    }
    const double eta = find_root(F, lo, hi, cfg);
    const double rr = theta * rho_minus - eta;
    if (rr <= cfg.rho_floor)
        throw VacuumFormation("cross_shock_exact: shifted right density at floor", rr);
    const GasState Pp{-epsilon, rl};
    const GasState Qp{-s - eta, rr};
    res.eta = eta;
    res.shock_after = make_wave(Pp, Qp, WaveFamily::Family1, true);
    res.amplification = eta / epsilon;
    return res;
}

double eta_prime_closed(double theta, double rho_minus) {
    if (!(theta > 1.0)) return 1.0;
    const double s = rho_minus * std::sqrt(psi(theta));
    const double th2 = theta * theta;
    const double K = rho_minus * (3.0 * th2 * th2 - 2.0 * th2 * theta - 1.0) / (6.0 * s * th2);
    return (1.0 - s / rho_minus + K * theta) / (1.0 + K);
}

double AmplificationEstimate::relative_gap() const {
    return std::abs(closed_form - finite_difference) / std::abs(closed_form);
}

AmplificationEstimate eta_prime_exact(double sigma1, double rho_minus, const RiemannConfig& cfg) {
    AmplificationEstimate est;
    est.closed_form = eta_prime_closed(shock_theta(sigma1, rho_minus, cfg), rho_minus);
    // step scaled by rho- so the shifted states stay away from vacuum
    const double h = std::cbrt(std::numeric_limits<double>::epsilon()) * std::min(1.0, rho_minus);
    auto central = [&](double k) {
        return (eta_at(sigma1, rho_minus, k, cfg) - eta_at(sigma1, rho_minus, -k, cfg)) / (2.0 * k);
    };
    const double d1 = central(h);
    const double d2 = central(0.5 * h);
    est.finite_difference = (4.0 * d2 - d1) / 3.0;
    return est;
}

double eta_prime_small_shock(double s, double rho_minus) {
    if (!(rho_minus > 0.0) || s < 0.0) throw DomainError("eta_prime_small_shock: bad arguments");
    const double x = s / rho_minus;
    return 1.0 + x * x * x / 3.0;
}

double eta_prime_near_vacuum(double sigma1, double rho_minus) {
    if (!(rho_minus > 0.0) || !(sigma1 > 0.0))
        throw DomainError("eta_prime_near_vacuum: bad arguments");
    return std::pow(3.0, -2.0 / 3.0) * std::pow(sigma1 / rho_minus, 2.0 / 3.0);
}

SlopeConstruction a1b2_slope(double s, const RiemannConfig& cfg) {
    if (!(s > 0.0 && s < 1.0)) throw DomainError("a1b2_slope: s must lie in (0,1)");
    SlopeConstruction c;
    c.s = s;
    c.A1 = {0.0, 1.0};
    c.C = shock_curve(c.A1, WaveFamily::Family1, Anchor::RightGiven, 1.0 - s);
    const double um = c.C.u;
    auto g = [&](double r) { return shock_velocity_gap(1.0, 1.0 + r) - um; };
    double hi = 2.0 * s;
    while (g(hi) < 0.0) hi *= 2.0;
    c.r = find_root(g, 0.0, hi, cfg);
    c.D = {um, 1.0 + c.r};
    c.B2 = {um + 0.5 * (c.D.rho - c.C.rho), 0.5 * (c.D.rho + c.C.rho)};
    c.slope = (c.B2.rho - c.A1.rho) / (c.B2.u - c.A1.u);
    return c;
}

double reflection_coefficient(double s, const RiemannConfig& cfg) {
    return 1.0 - 2.0 * a1b2_slope(s, cfg).slope;
}

double period_gain(double s, const RiemannConfig& cfg) {
    if (!(s > 0.0 && s < 1.0)) throw DomainError("period_gain: s must lie in (0,1)");
    const double cross = eta_prime_closed(1.0 / (1.0 - s), 1.0 - s);
    const double refl = reflection_coefficient(s, cfg);
    return cross * cross * refl * refl;
}

}  // namespace psys
