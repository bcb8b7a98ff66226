#pragma once

#include <functional>
#include <string>

#include "psys/errors.hpp"

namespace psys {

/// A constant state (u, rho) of the p-system with p = rho^3 / 3.
struct GasState {
    double u = 0.0;
    double rho = 0.0;

    double v() const { return 1.0 / rho; }
    bool operator==(const GasState&) const = default;
};

struct RiemannInvariants {
    double w1 = 0.0;  // rho - u
    double w2 = 0.0;  // rho + u
};

enum class WaveFamily { Family1, Family2 };

enum class WaveKind { Shock, Rarefaction, Compression };

std::string to_string(WaveFamily f);
std::string to_string(WaveKind k);

/// A single elementary wave. `strength` is the jump of the family's own invariant
/// in absolute value, negated for compressions.
struct WaveDescriptor {
    WaveFamily family = WaveFamily::Family1;
    WaveKind kind = WaveKind::Rarefaction;
    GasState left;
    GasState right;
    double strength = 0.0;
    double speed_exact = 0.0;
};

struct RiemannConfig {
    double rho_floor = 1e-9;
    double residual_tol = 1e-12;
    int max_iter = 200;
};

double pressure(double rho);
double char_speed(double rho, WaveFamily family);

RiemannInvariants to_invariants(const GasState& s);
GasState from_invariants(const RiemannInvariants& w);

/// |u+ - u-| across a shock joining densities ra and rb (symmetric in its arguments).
double shock_velocity_gap(double ra, double rb);

/// u+ - u- across a shock with densities rho_minus (left) and rho_plus (right).
double shock_delta_u(double rho_minus, double rho_plus);

double shock_speed(double rho_minus, double rho_plus, WaveFamily family);

double psi(double theta);

enum class Anchor { LeftGiven, RightGiven };

GasState shock_curve(const GasState& anchor, WaveFamily family, Anchor side, double rho_other);

GasState rarefaction_curve(const GasState& anchor, WaveFamily family, double dw,
                           double rho_floor = 1e-9);

/// Own-family invariant jump across a family-k wave from left to right.
double own_jump(const GasState& left, const GasState& right, WaveFamily family);
double other_jump(const GasState& left, const GasState& right, WaveFamily family);

/// Classifies the jump left->right of the given family and fills speed and strength.
/// Expansive jumps are rarefactions; compressive ones are shocks unless `shock` is false.
WaveDescriptor make_wave(const GasState& left, const GasState& right, WaveFamily family,
                         bool shock);

/// Max of the two Rankine-Hugoniot residuals, scaled by the magnitude of the terms.
double rh_residual(const WaveDescriptor& w);

struct RiemannSolution {
    GasState middle;
    WaveDescriptor wave1;
    WaveDescriptor wave2;
};

RiemannSolution solve_riemann(const GasState& left, const GasState& right,
                              const RiemannConfig& cfg = {});

/// Riemann problem on a chosen pair of wave curves. A family that is not shock-capable
/// uses its rarefaction line on both sides, producing a compression when compressive.
RiemannSolution solve_riemann_curves(const GasState& left, const GasState& right,
                                     bool shock1, bool shock2, const RiemannConfig& cfg = {});

/// Root of a monotone function on a sign-changing bracket [a, b]; Illinois steps with
/// bisection safeguard, iterated until the bracket collapses.
double find_root(const std::function<double(double)>& f, double a, double b,
                 const RiemannConfig& cfg = {});

double lemma1_G(double rho_l, const GasState& B1, const GasState& A2);

/// Density rho2* of the left state on the 1-shock curve into B1 whose velocity equals A2.u.
double lemma1_rho2_star(const GasState& B1, const GasState& A2, const RiemannConfig& cfg = {});

GasState lemma1_left_state(const GasState& B1, const GasState& A2,
                           const RiemannConfig& cfg = {});

inline GasState mirror(const GasState& s) { return {-s.u, s.rho}; }

}  // namespace psys
