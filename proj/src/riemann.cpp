#include "psys/riemann.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace psys {

namespace {

void require_positive(double rho, const char* what) {
    if (!(rho > 0.0) || !std::isfinite(rho)) {
        std::ostringstream os;
        os << what << ": density must be positive, got " << rho;
        throw DomainError(os.str());
    }
}

double sign_of(WaveFamily f) { return f == WaveFamily::Family1 ? -1.0 : 1.0; }

}  // namespace

std::string to_string(WaveFamily f) { return f == WaveFamily::Family1 ? "1" : "2"; }

std::string to_string(WaveKind k) {
    switch (k) {
        case WaveKind::Shock: return "shock";
        case WaveKind::Rarefaction: return "rarefaction";
        case WaveKind::Compression: return "compression";
    }
    return "?";
}

double pressure(double rho) {
    require_positive(rho, "pressure");
    return rho * rho * rho / 3.0;
}

double char_speed(double rho, WaveFamily family) {
    require_positive(rho, "char_speed");
    return sign_of(family) * rho * rho;
}

RiemannInvariants to_invariants(const GasState& s) { return {s.rho - s.u, s.rho + s.u}; }

GasState from_invariants(const RiemannInvariants& w) {
    if (w.w1 + w.w2 < 0.0) {
        std::ostringstream os;
        os << "from_invariants: negative density (w1+w2 = " << w.w1 + w.w2 << ")";
        throw DomainError(os.str());
    }
    return {0.5 * (w.w2 - w.w1), 0.5 * (w.w1 + w.w2)};
}

double shock_velocity_gap(double ra, double rb) {
    require_positive(ra, "shock_velocity_gap");
    require_positive(rb, "shock_velocity_gap");
    // factored form of sqrt((1/ra - 1/rb)(rb^3 - ra^3)/3), stable near ra == rb
    return std::abs(rb - ra) * std::sqrt((ra * ra + ra * rb + rb * rb) / (3.0 * ra * rb));
}

double shock_delta_u(double rho_minus, double rho_plus) {
    if (rho_minus == rho_plus) {
        require_positive(rho_minus, "shock_delta_u");
        return 0.0;
    }
    return -shock_velocity_gap(rho_minus, rho_plus);
}

double shock_speed(double rho_minus, double rho_plus, WaveFamily family) {
    require_positive(rho_minus, "shock_speed");
    require_positive(rho_plus, "shock_speed");
    const double a = rho_minus, b = rho_plus;
    return sign_of(family) * std::sqrt(a * b * (a * a + a * b + b * b) / 3.0);
}

double psi(double theta) {
    if (!(theta > 0.0)) throw DomainError("psi: theta must be positive");
    const double d = 1.0 - theta;
    return d * d * (1.0 + theta + theta * theta) / (3.0 * theta);
}

GasState shock_curve(const GasState& anchor, WaveFamily family, Anchor side, double rho_other) {
    require_positive(anchor.rho, "shock_curve anchor");
    require_positive(rho_other, "shock_curve");
    if (rho_other == anchor.rho) return anchor;
    const bool denser = rho_other > anchor.rho;
    // Lax: 1-shocks compress left to right, 2-shocks right to left
    const bool ok = (family == WaveFamily::Family1) == (side == Anchor::LeftGiven) ? denser : !denser;
    if (!ok) {
        std::ostringstream os;
        os << "shock_curve: density " << rho_other << " inadmissible for family "
           << to_string(family) << " with anchor density " << anchor.rho;
        throw InadmissibleOrientation(os.str());
    }
    const double gap = shock_velocity_gap(anchor.rho, rho_other);
    if (side == Anchor::LeftGiven) return {anchor.u - gap, rho_other};
    return {anchor.u + gap, rho_other};
}

GasState rarefaction_curve(const GasState& anchor, WaveFamily family, double dw, double rho_floor) {
    require_positive(anchor.rho, "rarefaction_curve");
    RiemannInvariants w = to_invariants(anchor);
    if (family == WaveFamily::Family1)
        w.w1 += dw;
    else
        w.w2 += dw;
    const double rho = 0.5 * (w.w1 + w.w2);
    if (rho <= rho_floor) {
        std::ostringstream os;
        os << "rarefaction_curve: density " << rho << " at or below floor " << rho_floor;
        throw VacuumFormation(os.str(), rho);
    }
    return {0.5 * (w.w2 - w.w1), rho};
}

double own_jump(const GasState& l, const GasState& r, WaveFamily family) {
    const RiemannInvariants a = to_invariants(l), b = to_invariants(r);
    return family == WaveFamily::Family1 ? b.w1 - a.w1 : b.w2 - a.w2;
}

double other_jump(const GasState& l, const GasState& r, WaveFamily family) {
    return own_jump(l, r, family == WaveFamily::Family1 ? WaveFamily::Family2 : WaveFamily::Family1);
}

WaveDescriptor make_wave(const GasState& left, const GasState& right, WaveFamily family,
                         bool shock) {
    WaveDescriptor w;
    w.family = family;
    w.left = left;
    w.right = right;
    const double mag = std::abs(own_jump(left, right, family));
    const bool compressive = family == WaveFamily::Family1 ? right.rho > left.rho
                                                           : right.rho < left.rho;
    if (compressive && shock) {
        w.kind = WaveKind::Shock;
        w.strength = mag;
        w.speed_exact = shock_speed(left.rho, right.rho, family);
    } else {
        w.kind = compressive ? WaveKind::Compression : WaveKind::Rarefaction;
        w.strength = compressive ? -mag : mag;
        w.speed_exact = 0.5 * (char_speed(left.rho, family) + char_speed(right.rho, family));
    }
    return w;
}

double rh_residual(const WaveDescriptor& w) {
    const GasState& a = w.left;
    const GasState& b = w.right;
    if (w.kind != WaveKind::Shock) {
        const double scale = 1.0 + std::abs(a.rho) + std::abs(a.u);
        return std::abs(other_jump(a, b, w.family)) / scale;
    }
    const double s = w.speed_exact;
    const double t1 = s * (1.0 / b.rho - 1.0 / a.rho);
    const double t2 = b.u - a.u;
    const double t3 = s * (b.u - a.u);
    const double t4 = (b.rho * b.rho * b.rho - a.rho * a.rho * a.rho) / 3.0;
    const double r1 = std::abs(t1 + t2) / (1.0 + std::abs(t1) + std::abs(t2));
    const double r2 = std::abs(t3 - t4) / (1.0 + std::abs(t3) + std::abs(t4));
    return std::max(r1, r2);
}

double find_root(const std::function<double(double)>& f, double a, double b,
                 const RiemannConfig& cfg) {
    if (a > b) std::swap(a, b);
    double fa = f(a), fb = f(b);
    if (fa == 0.0) return a;
    if (fb == 0.0) return b;
    if ((fa > 0.0) == (fb > 0.0)) {
        std::ostringstream os;
        os << "find_root: bracket [" << a << ", " << b << "] does not change sign";
        throw DomainError(os.str());
    }
    int last_side = 0;
    int slow = 0;
    double prev_width = b - a;
    for (int it = 0; it < cfg.max_iter; ++it) {
        double c;
        if (slow >= 2) {
            // geometric midpoint keeps relative progress when the root is tiny
            c = (a > 0.0 && b > 4.0 * a) ? std::sqrt(a * b) : 0.5 * (a + b);
            slow = 0;
        } else {
            c = (a * fb - b * fa) / (fb - fa);
            if (!(c > a && c < b)) c = 0.5 * (a + b);
        }
        if (!(c > a && c < b)) return std::abs(fa) < std::abs(fb) ? a : b;
        const double fc = f(c);
        if (fc == 0.0) return c;
        if ((fc > 0.0) == (fa > 0.0)) {
            a = c;
            fa = fc;
            if (last_side == -1) fb *= 0.5;
            last_side = -1;
        } else {
            b = c;
            fb = fc;
            if (last_side == 1) fa *= 0.5;
            last_side = 1;
        }
        const double width = b - a;
        slow = width > 0.5 * prev_width ? slow + 1 : 0;
        prev_width = width;
        if (width <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(a), std::abs(b)))
            return std::abs(fa) < std::abs(fb) ? a : b;
    }
    const double m = 0.5 * (a + b);
    if (std::abs(f(m)) <= cfg.residual_tol) return m;
    std::ostringstream os;
    os << "find_root: no convergence in " << cfg.max_iter << " iterations, bracket [" << a << ", "
       << b << "]";
    throw NonConvergence(os.str());
}

RiemannSolution solve_riemann_curves(const GasState& L, const GasState& R, bool shock1,
                                     bool shock2, const RiemannConfig& cfg) {
    require_positive(L.rho, "solve_riemann left");
    require_positive(R.rho, "solve_riemann right");
    const RiemannInvariants wl = to_invariants(L), wr = to_invariants(R);

    auto on_line1 = [&](double rho) { return !shock1 || rho <= L.rho; };
    auto on_line2 = [&](double rho) { return !shock2 || rho <= R.rho; };

    GasState M;
    if (L == R) {
        RiemannSolution same{L, make_wave(L, L, WaveFamily::Family1, shock1),
                             make_wave(L, L, WaveFamily::Family2, shock2)};
        return same;
    }
    const double rho_lines = 0.5 * (wr.w1 + wl.w2);
    if (on_line1(rho_lines) && on_line2(rho_lines)) {
        if (rho_lines <= cfg.rho_floor) {
            std::ostringstream os;
            os << "solve_riemann: wave curves meet at rho = " << rho_lines << " (floor "
               << cfg.rho_floor << ")";
            throw VacuumFormation(os.str(), rho_lines);
        }
        M = {0.5 * (wl.w2 - wr.w1), rho_lines};
    } else {
        auto f1 = [&](double rho) {
            return on_line1(rho) ? wl.w2 - rho : L.u - shock_velocity_gap(L.rho, rho);
        };
        auto f2 = [&](double rho) {
            return on_line2(rho) ? rho - wr.w1 : R.u + shock_velocity_gap(R.rho, rho);
        };
        auto h = [&](double rho) { return f1(rho) - f2(rho); };
        const double lo = cfg.rho_floor;
        if (h(lo) <= 0.0) {
            std::ostringstream os;
            os << "solve_riemann: wave curves meet at rho <= " << lo;
            throw VacuumFormation(os.str(), rho_lines);
        }
        double hi = std::max(L.rho, R.rho);
        while (h(hi) > 0.0) {
            hi *= 2.0;
            if (hi > 1e200) throw NonConvergence("solve_riemann: no upper bracket");
        }
        const double rho = find_root(h, lo, hi, cfg);
        // keep the invariant carried by a rarefaction line exact
        if (on_line2(rho))
            M = {rho - wr.w1, rho};
        else if (on_line1(rho))
            M = {wl.w2 - rho, rho};
        else
            M = {f1(rho), rho};
    }
    RiemannSolution sol;
    sol.middle = M;
    sol.wave1 = make_wave(L, M, WaveFamily::Family1, shock1);
    sol.wave2 = make_wave(M, R, WaveFamily::Family2, shock2);
    return sol;
}

RiemannSolution solve_riemann(const GasState& left, const GasState& right,
                              const RiemannConfig& cfg) {
    return solve_riemann_curves(left, right, true, true, cfg);
}

double lemma1_G(double rho_l, const GasState& B1, const GasState& A2) {
    require_positive(rho_l, "lemma1_G");
    if (!(rho_l < std::min(B1.rho, A2.rho)))
        throw DomainError("lemma1_G: rho_l must lie below both densities");
    return shock_velocity_gap(rho_l, B1.rho) - shock_velocity_gap(rho_l, A2.rho);
}

double lemma1_rho2_star(const GasState& B1, const GasState& A2, const RiemannConfig& cfg) {
    require_positive(B1.rho, "lemma1_rho2_star");
    const double target = A2.u - B1.u;
    if (!(target > 0.0)) throw DomainError("lemma1_rho2_star: needs A2.u > B1.u");
    auto g = [&](double rho) { return shock_velocity_gap(rho, B1.rho) - target; };
    double lo = 0.5 * B1.rho;
    while (g(lo) <= 0.0) {
        lo *= 0.5;
        if (lo < 1e-300) throw NonConvergence("lemma1_rho2_star: no lower bracket");
    }
    return find_root(g, lo, B1.rho, cfg);
}

GasState lemma1_left_state(const GasState& B1, const GasState& A2, const RiemannConfig& cfg) {
    require_positive(B1.rho, "lemma1_left_state");
    require_positive(A2.rho, "lemma1_left_state");
    if (!(B1.u < A2.u && B1.rho > A2.rho))
        throw HypothesisViolation("lemma1_left_state: hypothesis (i) requires u1 < u2 and rho1 > rho2",
                                  std::numeric_limits<double>::quiet_NaN());
    const double rho2_star = lemma1_rho2_star(B1, A2, cfg);
    if (!(rho2_star < A2.rho)) {
        std::ostringstream os;
        os << "lemma1_left_state: hypothesis (ii) fails, rho2* = " << rho2_star << " >= rho2 = " << A2.rho;
        throw HypothesisViolation(os.str(), rho2_star - A2.rho);
    }
    const double target = A2.u - B1.u;
    auto g = [&](double rho) { return lemma1_G(rho, B1, A2) - target; };
    double hi = A2.rho * (1.0 - 1e-15);
    double lo = 0.5 * A2.rho;
    while (g(lo) <= 0.0) {
        hi = lo;
        lo *= 0.5;
        if (lo < 1e-300) throw NonConvergence("lemma1_left_state: no lower bracket");
    }
    const double rho_l = find_root(g, lo, hi, cfg);
    return {B1.u + shock_velocity_gap(rho_l, B1.rho), rho_l};
}

}  // namespace psys
