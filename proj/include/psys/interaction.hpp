#pragma once

#include "psys/riemann.hpp"

namespace psys {

/// Outcome of a small 2-wave of density shift epsilon crossing a 1-shock from the left.
struct CrossingResult {
    double eta = 0.0;
    WaveDescriptor shock_before;
    WaveDescriptor shock_after;
    double amplification = 0.0;  // eta / epsilon, or the derivative when epsilon == 0
};

/// theta = rho+ / rho- of the 1-shock with own-invariant jump sigma1 and left density rho_minus.
double shock_theta(double sigma1, double rho_minus, const RiemannConfig& cfg = {});

/// sigma1 of the 1-shock with left density rho_minus and velocity drop s.
double shock_strength_from_drop(double s, double rho_minus, const RiemannConfig& cfg = {});

/// Velocity drop s = rho- sqrt(psi(theta)) of the same shock.
double shock_velocity_drop(double sigma1, double rho_minus, const RiemannConfig& cfg = {});

/// The shock runs from P = (0, rho-) to Q = (-s, theta rho-). The small wave moves P to
/// P' = (-eps, rho- - eps) along the 2-rarefaction line, so the incoming 2-wave P' -> P
/// carries dw2 = 2 eps (a rarefaction for eps > 0); afterwards Q' = (-s - eta, theta rho- - eta).
CrossingResult cross_shock_exact(double sigma1, double rho_minus, double epsilon,
                                 const RiemannConfig& cfg = {});

/// Linear relation for d(eta)/d(eps) at eps = 0 given theta and rho-.
double eta_prime_closed(double theta, double rho_minus);

struct AmplificationEstimate {
    double closed_form = 0.0;
    double finite_difference = 0.0;
    double relative_gap() const;
};

AmplificationEstimate eta_prime_exact(double sigma1, double rho_minus,
                                      const RiemannConfig& cfg = {});

double eta_prime_small_shock(double s, double rho_minus);
double eta_prime_near_vacuum(double sigma1, double rho_minus);

struct SlopeConstruction {
    double s = 0.0;
    double r = 0.0;
    GasState A1;
    GasState C;
    GasState D;
    GasState B2;
    double slope = 0.0;
};

SlopeConstruction a1b2_slope(double s, const RiemannConfig& cfg = {});

double reflection_coefficient(double s, const RiemannConfig& cfg = {});

/// Product of two middle-shock crossing factors and two reflection factors.
double period_gain(double s, const RiemannConfig& cfg = {});

}  // namespace psys
