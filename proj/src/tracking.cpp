#include "psys/tracking.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <set>
#include <sstream>

namespace psys {

std::string to_string(EngineMode m) {
    return m == EngineMode::RiemannExact ? "exact" : "paper";
}

Front make_front(const GasState& left, const GasState& right, WaveFamily family, bool shock) {
    const WaveDescriptor w = make_wave(left, right, family, shock);
    Front f;
    f.family = family;
    f.kind = w.kind;
    f.left = left;
    f.right = right;
    f.strength = w.strength;
    return f;
}

double exact_speed(const Front& f) {
    if (f.kind == WaveKind::Shock) return shock_speed(f.left.rho, f.right.rho, f.family);
    return 0.5 * (char_speed(f.left.rho, f.family) + char_speed(f.right.rho, f.family));
}

// ---- speed policies ----

SpeedPolicy SpeedPolicy::exact() { return SpeedPolicy{}; }

SpeedPolicy SpeedPolicy::constant_pair(double c) {
    if (!(c > 0.0) || !std::isfinite(c)) throw DomainError("constant_pair: c must be positive");
    SpeedPolicy p;
    p.kind_ = Kind::ConstantPair;
    p.c_ = c;
    return p;
}

SpeedPolicy SpeedPolicy::scheduled(Rule rule) {
    if (!rule) throw DomainError("scheduled policy needs a rule");
    SpeedPolicy p;
    p.kind_ = Kind::Scheduled;
    p.rule_ = std::move(rule);
    return p;
}

SpeedPolicy SpeedPolicy::table(std::map<std::int64_t, double> speeds, SpeedPolicy fallback) {
    return scheduled([speeds = std::move(speeds), fallback = std::move(fallback)](
                         const Front& f, const SpeedContext& ctx) {
        auto it = speeds.find(f.id);
        return it != speeds.end() ? it->second : fallback.speed(f, ctx);
    });
}

double SpeedPolicy::speed(const Front& f, const SpeedContext& ctx) const {
    double s = 0.0;
    switch (kind_) {
        case Kind::Exact: s = exact_speed(f); break;
        case Kind::ConstantPair: s = f.family == WaveFamily::Family1 ? -c_ : c_; break;
        case Kind::Scheduled: s = rule_(f, ctx); break;
    }
    const bool ok = std::isfinite(s) && (f.family == WaveFamily::Family1 ? s < 0.0 : s > 0.0);
    if (!ok) {
        std::ostringstream os;
        os << "speed " << s << " violates the sign of " << to_string(f.family) << " (front "
           << f.id << ")";
        throw DomainError(os.str());
    }
    return s;
}

// ---- discretization ----

namespace {

double& own(RiemannInvariants& w, WaveFamily f) { return f == WaveFamily::Family1 ? w.w1 : w.w2; }

std::int64_t piece_count(double dw, double delta_r) {
    if (!(delta_r > 0.0)) throw DomainError("delta_r must be positive");
    if (!std::isfinite(delta_r)) return 1;
    const double q = std::abs(dw) / delta_r;
    return std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(q * (1.0 - 1e-12))));
}

void check_floor(const GasState& s, double floor, const char* where) {
    if (!(s.rho > floor)) {
        std::ostringstream os;
        os << where << ": density " << s.rho << " at or below floor " << floor;
        throw VacuumFormation(os.str(), s.rho);
    }
}

struct Crossing {
    double x;
    WaveFamily family;
    double dw;
};

// Level crossings of one invariant across a sampled segment, one per quantum of delta_r.
void quantize(const std::vector<double>& xs, const std::vector<double>& v, WaveFamily fam,
              double delta_r, std::vector<Crossing>& out) {
    const std::size_t n = v.size();
    std::size_t j0 = 0;
    while (j0 + 1 < n) {
        std::size_t j1 = j0 + 1;
        const double dir = v[j1] - v[j0];
        if (dir == 0.0) {
            j0 = j1;
            continue;
        }
        while (j1 + 1 < n && (v[j1 + 1] - v[j1]) * dir > 0.0) ++j1;
        const double A = v[j0], B = v[j1];
        const std::int64_t m = piece_count(B - A, delta_r);
        const double dw = (B - A) / static_cast<double>(m);
        std::size_t k = j0;
        for (std::int64_t i = 1; i <= m; ++i) {
            const double level = A + (B - A) * (static_cast<double>(i) - 0.5) / m;
            while (k + 1 < j1 && (v[k + 1] - level) * dir < 0.0) ++k;
            const double a = v[k], b = v[k + 1];
            const double frac = b == a ? 0.5 : std::clamp((level - a) / (b - a), 0.0, 1.0);
            out.push_back({xs[k] + frac * (xs[k + 1] - xs[k]), fam, dw});
        }
        j0 = j1;
    }
}

}  // namespace

std::vector<Front> split_line_jump(const GasState& left, const GasState& right,
                                   WaveFamily family, double delta_r) {
    const double oj = other_jump(left, right, family);
    const double scale = 1.0 + std::abs(left.u) + left.rho;
    if (std::abs(oj) > 1e-12 * scale)
        throw DomainError("split_line_jump: states are not on one rarefaction line");
    const double dw = own_jump(left, right, family);
    std::vector<Front> out;
    if (dw == 0.0 && left == right) return out;
    const std::int64_t n = piece_count(dw, delta_r);
    RiemannInvariants w = to_invariants(left);
    const double w0 = own(w, family);
    GasState cur = left;
    for (std::int64_t i = 1; i <= n; ++i) {
        GasState next;
        if (i == n) {
            next = right;
        } else {
            own(w, family) = w0 + dw * static_cast<double>(i) / static_cast<double>(n);
            next = from_invariants(w);
        }
        out.push_back(make_front(cur, next, family, false));
        cur = next;
    }
    return out;
}

void assign_speeds(SimState& sim) {
    const SpeedContext ctx{sim.t, 0.0, {}};
    for (Front& f : sim.fronts) {
        f.x = f.position(sim.t);
        f.t_ref = sim.t;
        f.speed = sim.policy.speed(f, SpeedContext{sim.t, f.x, ctx.incoming});
    }
}

SimState discretize_profile(const Profile& profile, const SimConfig& config,
                            const SpeedPolicy& policy, int smooth_tag) {
    SimState sim;
    sim.config = config;
    sim.policy = policy;
    sim.leftmost_state = profile.left_state;
    check_floor(profile.left_state, config.rho_floor, "discretize_profile");
    GasState cur = profile.left_state;

    auto place = [&](std::vector<Front> fs, double x, int tag) {
        for (Front& f : fs) {
            f.x = x;
            f.tag = tag;
            sim.fronts.push_back(f);
        }
    };

    for (const auto& [smooth, jump] : profile.items) {
        if (smooth) {
            const auto& xs = smooth->x;
            const auto& ws = smooth->w;
            if (xs.size() != ws.size() || xs.size() < 2)
                throw DomainError("discretize_profile: malformed smooth segment");
            const RiemannInvariants wc = to_invariants(cur);
            const double scale = 1.0 + std::abs(wc.w1) + std::abs(wc.w2);
            if (std::abs(ws.front().w1 - wc.w1) > 1e-12 * scale ||
                std::abs(ws.front().w2 - wc.w2) > 1e-12 * scale)
                throw DomainError("discretize_profile: smooth segment does not start at the current state");
            std::vector<double> v1(ws.size()), v2(ws.size());
            for (std::size_t j = 0; j < ws.size(); ++j) {
                v1[j] = ws[j].w1;
                v2[j] = ws[j].w2;
            }
            std::vector<Crossing> cr;
            quantize(xs, v1, WaveFamily::Family1, config.delta_r, cr);
            quantize(xs, v2, WaveFamily::Family2, config.delta_r, cr);
            std::stable_sort(cr.begin(), cr.end(), [](const Crossing& a, const Crossing& b) {
                if (a.x != b.x) return a.x < b.x;
                return a.family == WaveFamily::Family1 && b.family == WaveFamily::Family2;
            });
            RiemannInvariants w = wc;
            for (const Crossing& c : cr) {
                own(w, c.family) += c.dw;
                const GasState next = from_invariants(w);
                check_floor(next, config.rho_floor, "discretize_profile");
                Front f = make_front(cur, next, c.family, false);
                f.x = c.x;
                f.tag = smooth_tag;
                sim.fronts.push_back(f);
                cur = next;
            }
        } else {
            const JumpItem& j = *jump;
            check_floor(j.right, config.rho_floor, "discretize_profile");
            switch (j.kind) {
                case JumpItem::Kind::Shock: {
                    Front f = make_front(cur, j.right, j.family, true);
                    if (f.kind != WaveKind::Shock)
                        throw InadmissibleOrientation("discretize_profile: shock jump is expansive");
                    if (rh_residual(make_wave(cur, j.right, j.family, true)) > 1e-10)
                        throw DomainError("discretize_profile: shock states violate Rankine-Hugoniot");
                    place({f}, j.x, j.tag);
                    break;
                }
                case JumpItem::Kind::RarefactionLine:
                    place(split_line_jump(cur, j.right, j.family, config.delta_r), j.x, j.tag);
                    break;
                case JumpItem::Kind::Riemann: {
                    const RiemannSolution sol = solve_riemann(cur, j.right, config.riemann());
                    for (const WaveDescriptor* w : {&sol.wave1, &sol.wave2}) {
                        if (w->left == w->right) continue;
                        if (w->kind == WaveKind::Shock) {
                            place({make_front(w->left, w->right, w->family, true)}, j.x, j.tag);
                        } else {
                            place(split_line_jump(w->left, w->right, w->family, config.delta_r),
                                  j.x, j.tag);
                        }
                    }
                    break;
                }
            }
            cur = j.right;
        }
    }
    for (Front& f : sim.fronts) f.id = sim.next_id++;
    assign_speeds(sim);
    for (std::size_t i = 1; i < sim.fronts.size(); ++i)
        if (sim.fronts[i].x < sim.fronts[i - 1].x)
            throw DomainError("discretize_profile: items are not in increasing x");
    return sim;
}

// ---- interactions ----

namespace {

bool approaching(const Front& a, const Front& b) {
    if (a.family == WaveFamily::Family2 && b.family == WaveFamily::Family1) return true;
    if (a.family == b.family) return a.speed > b.speed;
    return false;
}

int inherit_tag(std::span<const Front> in, WaveFamily fam) {
    const Front* best = nullptr;
    for (const Front& f : in)
        if (f.family == fam && (!best || std::abs(f.strength) > std::abs(best->strength))) best = &f;
    if (best) return best->tag;
    for (const Front& f : in)
        if (!best || std::abs(f.strength) < std::abs(best->strength)) best = &f;
    return best ? best->tag : 0;
}

bool negligible(const Front& f, double tol) {
    const RiemannInvariants a = to_invariants(f.left), b = to_invariants(f.right);
    const double scale = std::max({std::abs(a.w1), std::abs(a.w2), std::abs(b.w1), std::abs(b.w2)});
    return std::abs(b.w1 - a.w1) + std::abs(b.w2 - a.w2) <= tol * scale;
}

// Drops vanishing fronts and re-chains the rest so the sequence still runs from L to R.
std::vector<Front> prune(std::vector<Front> fs, const GasState& L, const GasState& R, double tol) {
    std::vector<Front> kept;
    GasState cur = L;
    for (Front& f : fs) {
        if (negligible(f, tol)) continue;
        if (!(f.left == cur)) {
            const int tag = f.tag;
            f = make_front(cur, f.right, f.family, f.kind == WaveKind::Shock);
            f.tag = tag;
        }
        kept.push_back(f);
        cur = f.right;
    }
    if (!kept.empty() && !(kept.back().right == R)) {
        Front& b = kept.back();
        const int tag = b.tag;
        const double x = b.x;
        b = make_front(b.left, R, b.family, b.kind == WaveKind::Shock);
        b.tag = tag;
        b.x = x;
    }
    return kept;
}

void push_wave(std::vector<Front>& out, const WaveDescriptor& w, bool split, double delta_r,
               int tag) {
    if (w.left == w.right) return;
    if (split && w.kind == WaveKind::Rarefaction) {
        for (Front f : split_line_jump(w.left, w.right, w.family, delta_r)) {
            f.tag = tag;
            out.push_back(f);
        }
        return;
    }
    Front f = make_front(w.left, w.right, w.family, w.kind == WaveKind::Shock);
    f.tag = tag;
    out.push_back(f);
}

void finish(std::vector<Front>& fs, const SpeedPolicy& policy, double t, double x,
            std::span<const Front> incoming) {
    for (Front& f : fs) {
        f.x = x;
        f.t_ref = t;
        f.id = -1;
        f.speed = policy.speed(f, SpeedContext{t, x, incoming});
    }
}

std::vector<Front> binary_map(const Front& a, const Front& b, const SimConfig& cfg) {
    const GasState& L = a.left;
    const GasState& R = b.right;
    const RiemannConfig rc = cfg.riemann();
    std::vector<Front> out;
    if (a.family != b.family) {
        // head-on crossing: each family keeps its own curve type
        const bool s1 = b.kind == WaveKind::Shock, s2 = a.kind == WaveKind::Shock;
        const RiemannSolution sol = solve_riemann_curves(L, R, s1, s2, rc);
        push_wave(out, sol.wave1, false, cfg.delta_r, b.tag);
        push_wave(out, sol.wave2, false, cfg.delta_r, a.tag);
        return out;
    }
    const WaveFamily fam = a.family;
    const bool sa = a.kind == WaveKind::Shock, sb = b.kind == WaveKind::Shock;
    const int big = std::abs(a.strength) >= std::abs(b.strength) ? a.tag : b.tag;
    const int small = std::abs(a.strength) >= std::abs(b.strength) ? b.tag : a.tag;
    const bool collapse = cfg.collapse_compressions && a.kind == WaveKind::Compression &&
                          b.kind == WaveKind::Compression;
    if (!sa && !sb && !collapse) {
        // signed addition along the common rarefaction line
        Front f = make_front(L, R, fam, false);
        f.tag = big;
        out.push_back(f);
        return out;
    }
    RiemannSolution sol = (sa && sb) ? solve_riemann(L, R, rc)
                                     : solve_riemann_curves(L, R, fam == WaveFamily::Family1,
                                                            fam == WaveFamily::Family2, rc);
    // a reflected compression too large for a bookkeeping front steepens into a shock
    const WaveDescriptor& refl = fam == WaveFamily::Family1 ? sol.wave2 : sol.wave1;
    if (!(sa && sb) && !collapse && refl.kind == WaveKind::Compression &&
        std::abs(refl.strength) > cfg.delta_r)
        sol = solve_riemann(L, R, rc);
    push_wave(out, sol.wave1, false, cfg.delta_r, fam == WaveFamily::Family1 ? big : small);
    push_wave(out, sol.wave2, false, cfg.delta_r, fam == WaveFamily::Family2 ? big : small);
    return out;
}

}  // namespace

std::vector<Front> interact(std::span<const Front> incoming, const SimConfig& config,
                            const SpeedPolicy& policy, double t, double x) {
    if (incoming.size() < 2) throw DomainError("interact: needs at least two fronts");
    const GasState L = incoming.front().left;
    const GasState R = incoming.back().right;
    std::vector<Front> out;
    if (config.mode == EngineMode::RiemannExact) {
        const RiemannSolution sol = solve_riemann(L, R, config.riemann());
        push_wave(out, sol.wave1, true, config.delta_r, inherit_tag(incoming, WaveFamily::Family1));
        push_wave(out, sol.wave2, true, config.delta_r, inherit_tag(incoming, WaveFamily::Family2));
        out = prune(std::move(out), L, R, config.zero_tol);
        finish(out, policy, t, x, incoming);
        return out;
    }
    std::vector<Front> list(incoming.begin(), incoming.end());
    const std::size_t cap = 1000 * (incoming.size() + 4);
    for (std::size_t iter = 0;; ++iter) {
        if (iter > cap) throw NonConvergence("interact: binary resolution did not terminate");
        std::size_t i = 0;
        while (i + 1 < list.size() && !approaching(list[i], list[i + 1])) ++i;
        if (i + 1 >= list.size()) break;
        const GasState l = list[i].left, r = list[i + 1].right;
        std::vector<Front> rep = prune(binary_map(list[i], list[i + 1], config), l, r, config.zero_tol);
        finish(rep, policy, t, x, incoming);
        if (rep.empty() && i + 2 < list.size()) {
            Front& n = list[i + 2];
            if (!(n.left == l)) {
                Front m = make_front(l, n.right, n.family, n.kind == WaveKind::Shock);
                m.tag = n.tag;
                m.speed = n.speed;
                n = m;
            }
        }
        list.erase(list.begin() + static_cast<std::ptrdiff_t>(i),
                   list.begin() + static_cast<std::ptrdiff_t>(i + 2));
        list.insert(list.begin() + static_cast<std::ptrdiff_t>(i), rep.begin(), rep.end());
    }
    for (Front& f : list) {
        f.x = x;
        f.t_ref = t;
        f.id = -1;
    }
    return list;
}

// ---- state-level operations ----

namespace {

struct Hit {
    bool ok = false;
    double t = 0.0;
    double x = 0.0;
};

Hit collision(const Front& a, const Front& b, double now) {
    Hit h;
    if (!(a.speed > b.speed)) return h;
    const double ia = a.x - a.speed * a.t_ref;
    const double ib = b.x - b.speed * b.t_ref;
    double t = (ib - ia) / (a.speed - b.speed);
    if (!(t >= now)) t = now;
    h.ok = true;
    h.t = t;
    h.x = 0.5 * (a.position(t) + b.position(t));
    return h;
}

bool same_instant(const Hit& a, const Hit& b) {
    const double tt = 1e-12 * std::max(1.0, std::abs(a.t));
    const double tx = 1e-12 * std::max(1.0, std::abs(a.x));
    return std::abs(a.t - b.t) <= tt && std::abs(a.x - b.x) <= tx;
}

std::string where(double t, double x, const std::vector<std::int64_t>& ids) {
    std::ostringstream os;
    os.precision(17);
    os << "event at t=" << t << ", x=" << x << ", fronts [";
    for (std::size_t i = 0; i < ids.size(); ++i) os << (i ? "," : "") << ids[i];
    os << "]: ";
    return os.str();
}

// Runs interact() and rethrows failures with the event location attached.
std::vector<Front> located_interact(std::span<const Front> in, const SimConfig& cfg,
                                    const SpeedPolicy& pol, double t, double x) {
    std::vector<std::int64_t> ids;
    try {
        std::vector<Front> out = interact(in, cfg, pol, t, x);
        for (const Front& f : out) check_floor(f.right, cfg.rho_floor, "interaction");
        return out;
    } catch (const VacuumFormation& e) {
        for (const Front& f : in) ids.push_back(f.id);
        throw VacuumFormation(where(t, x, ids) + e.what(), e.rho_limit());
    } catch (const NonConvergence& e) {
        for (const Front& f : in) ids.push_back(f.id);
        throw NonConvergence(where(t, x, ids) + e.what());
    } catch (const DomainError& e) {
        for (const Front& f : in) ids.push_back(f.id);
        throw DomainError(where(t, x, ids) + e.what());
    }
}

void front_tv(const Front& f, double& tv1, double& tv2) {
    const RiemannInvariants a = to_invariants(f.left), b = to_invariants(f.right);
    tv1 += std::abs(b.w1 - a.w1);
    tv2 += std::abs(b.w2 - a.w2);
}

}  // namespace

std::optional<Event> next_event(const SimState& sim) {
    const auto& fs = sim.fronts;
    std::optional<std::size_t> best;
    Hit bh;
    for (std::size_t i = 0; i + 1 < fs.size(); ++i) {
        const Hit h = collision(fs[i], fs[i + 1], sim.t);
        if (!h.ok) continue;
        if (!best || h.t < bh.t || (h.t == bh.t && (h.x < bh.x || (h.x == bh.x && fs[i].id < fs[*best].id)))) {
            best = i;
            bh = h;
        }
    }
    if (!best || bh.t > sim.config.t_max) return std::nullopt;
    std::size_t lo = *best, hi = *best + 1;
    while (lo > 0) {
        const Hit h = collision(fs[lo - 1], fs[lo], sim.t);
        if (!h.ok || !same_instant(h, bh)) break;
        --lo;
    }
    while (hi + 1 < fs.size()) {
        const Hit h = collision(fs[hi], fs[hi + 1], sim.t);
        if (!h.ok || !same_instant(h, bh)) break;
        ++hi;
    }
    Event ev{bh.t, bh.x, {}};
    for (std::size_t i = lo; i <= hi; ++i) ev.ids.push_back(fs[i].id);
    return ev;
}

SimState resolve_event(SimState sim, const Event& event) {
    auto& fs = sim.fronts;
    if (event.ids.size() < 2) throw DomainError("resolve_event: event needs two fronts");
    auto it = std::find_if(fs.begin(), fs.end(), [&](const Front& f) { return f.id == event.ids[0]; });
    const std::size_t lo = static_cast<std::size_t>(it - fs.begin());
    const std::size_t n = event.ids.size();
    if (it == fs.end() || lo + n > fs.size())
        throw DomainError("resolve_event: event does not match the state");
    for (std::size_t k = 0; k < n; ++k)
        if (fs[lo + k].id != event.ids[k]) throw DomainError("resolve_event: fronts are not adjacent");
    if (event.t < sim.t) throw DomainError("resolve_event: event lies in the past");

    const std::vector<Front> in(fs.begin() + static_cast<std::ptrdiff_t>(lo),
                                fs.begin() + static_cast<std::ptrdiff_t>(lo + n));
    std::vector<Front> out = located_interact(in, sim.config, sim.policy, event.t, event.x);
    for (Front& f : out) f.id = sim.next_id++;
    const GasState L = in.front().left;
    fs.erase(fs.begin() + static_cast<std::ptrdiff_t>(lo), fs.begin() + static_cast<std::ptrdiff_t>(lo + n));
    fs.insert(fs.begin() + static_cast<std::ptrdiff_t>(lo), out.begin(), out.end());
    const std::size_t after = lo + out.size();
    if (out.empty() && after < fs.size() && !(fs[after].left == L)) {
        Front& r = fs[after];
        Front m = make_front(L, r.right, r.family, r.kind == WaveKind::Shock);
        m.id = r.id;
        m.x = r.x;
        m.t_ref = r.t_ref;
        m.speed = r.speed;
        m.tag = r.tag;
        r = m;
    }
    sim.t = event.t;
    return sim;
}

std::pair<double, double> total_variation(const SimState& sim) {
    double a = 0.0, b = 0.0;
    for (const Front& f : sim.fronts) front_tv(f, a, b);
    return {a, b};
}

double min_density(const SimState& sim) {
    double m = sim.leftmost_state.rho;
    for (const Front& f : sim.fronts) m = std::min(m, f.right.rho);
    return m;
}

std::vector<std::string> check_invariants(const SimState& sim, double chain_tol) {
    std::vector<std::string> bad;
    auto say = [&](std::size_t i, const std::string& what) {
        std::ostringstream os;
        os << "front " << i << " (id " << sim.fronts[i].id << "): " << what;
        bad.push_back(os.str());
    };
    GasState prev = sim.leftmost_state;
    if (!(prev.rho > sim.config.rho_floor)) bad.push_back("leftmost state below density floor");
    for (std::size_t i = 0; i < sim.fronts.size(); ++i) {
        const Front& f = sim.fronts[i];
        const double scale = 1.0 + std::abs(prev.u) + prev.rho;
        if (std::abs(f.left.u - prev.u) > chain_tol * scale ||
            std::abs(f.left.rho - prev.rho) > chain_tol * scale)
            say(i, "left state does not chain");
        if (!(f.right.rho > sim.config.rho_floor)) say(i, "right state below density floor");
        if (f.family == WaveFamily::Family1 ? !(f.speed < 0.0) : !(f.speed > 0.0))
            say(i, "speed sign violates family");
        if (i > 0 && f.position(sim.t) < sim.fronts[i - 1].position(sim.t) -
                                              1e-12 * std::max(1.0, std::abs(f.position(sim.t))))
            say(i, "fronts out of order");
        if (f.kind == WaveKind::Rarefaction && sim.config.mode == EngineMode::RiemannExact &&
            f.strength > sim.config.delta_r * (1.0 + 1e-9))
            say(i, "rarefaction front exceeds delta_r");
        if (f.kind == WaveKind::Compression && !(f.strength <= 0.0)) say(i, "compression with positive strength");
        prev = f.right;
    }
    return bad;
}

// ---- incremental engine ----

struct Engine::Impl {
    struct Node {
        Front f;
        int prev = -1, next = -1;
        bool alive = false;
    };
    struct Cand {
        double t, x;
        std::int64_t lid, rid;
        int ls, rs;
        bool operator>(const Cand& o) const {
            if (t != o.t) return t > o.t;
            if (x != o.x) return x > o.x;
            return lid > o.lid;
        }
    };

    std::vector<Node> nodes;
    std::vector<int> free_slots;
    int head = -1, tail = -1;
    std::size_t count = 0;
    GasState leftmost;
    SimConfig cfg;
    SpeedPolicy policy;
    double t = 0.0;
    std::int64_t next_id = 0;
    double tv1 = 0.0, tv2 = 0.0;
    std::multiset<double> rhos;
    std::priority_queue<Cand, std::vector<Cand>, std::greater<Cand>> heap;

    explicit Impl(SimState s)
        : leftmost(s.leftmost_state), cfg(s.config), policy(std::move(s.policy)), t(s.t),
          next_id(s.next_id) {
        rhos.insert(leftmost.rho);
        int last = -1;
        for (const Front& f : s.fronts) last = insert_after(last, f);
        for (int a = head; a != -1 && nodes[a].next != -1; a = nodes[a].next) schedule(a);
    }

    int alloc() {
        if (!free_slots.empty()) {
            const int k = free_slots.back();
            free_slots.pop_back();
            return k;
        }
        nodes.emplace_back();
        return static_cast<int>(nodes.size()) - 1;
    }

    int insert_after(int p, const Front& f) {
        const int k = alloc();
        Node& n = nodes[k];
        n.f = f;
        n.alive = true;
        n.prev = p;
        n.next = p == -1 ? head : nodes[p].next;
        if (n.next != -1) nodes[n.next].prev = k; else tail = k;
        if (p != -1) nodes[p].next = k; else head = k;
        ++count;
        front_tv(f, tv1, tv2);
        rhos.insert(f.right.rho);
        return k;
    }

    void remove(int k) {
        Node& n = nodes[k];
        if (n.prev != -1) nodes[n.prev].next = n.next; else head = n.next;
        if (n.next != -1) nodes[n.next].prev = n.prev; else tail = n.prev;
        n.alive = false;
        --count;
        double a = 0.0, b = 0.0;
        front_tv(n.f, a, b);
        tv1 -= a;
        tv2 -= b;
        rhos.erase(rhos.find(n.f.right.rho));
        free_slots.push_back(k);
    }

    void schedule(int a) {
        const int b = nodes[a].next;
        if (b == -1) return;
        const Hit h = collision(nodes[a].f, nodes[b].f, t);
        if (h.ok) heap.push({h.t, h.x, nodes[a].f.id, nodes[b].f.id, a, b});
    }

    bool valid(const Cand& c) const {
        const Node& l = nodes[c.ls];
        const Node& r = nodes[c.rs];
        return l.alive && r.alive && l.f.id == c.lid && r.f.id == c.rid && l.next == c.rs;
    }

    void recompute_tv() {
        tv1 = tv2 = 0.0;
        for (int k = head; k != -1; k = nodes[k].next) front_tv(nodes[k].f, tv1, tv2);
    }

    std::vector<Front> ordered(double at) const {
        std::vector<Front> out;
        out.reserve(count);
        for (int k = head; k != -1; k = nodes[k].next) {
            Front f = nodes[k].f;
            f.x = f.position(at);
            f.t_ref = at;
            out.push_back(f);
        }
        return out;
    }

    // Fronts keep their reference point so positions stay bit-reproducible.
    SimState state() const {
        SimState s;
        s.t = t;
        s.leftmost_state = leftmost;
        s.config = cfg;
        s.policy = policy;
        s.next_id = next_id;
        for (int k = head; k != -1; k = nodes[k].next) s.fronts.push_back(nodes[k].f);
        return s;
    }
};

Engine::Engine(SimState sim) : impl_(new Impl(std::move(sim))) {}
Engine::~Engine() { delete impl_; }
double Engine::time() const { return impl_->t; }
std::size_t Engine::front_count() const { return impl_->count; }
std::pair<double, double> Engine::tv() const { return {impl_->tv1, impl_->tv2}; }
std::vector<Front> Engine::fronts() const { return impl_->ordered(impl_->t); }
SimState Engine::state() const { return impl_->state(); }

RunResult run(SimState sim, const RunOptions& options) {
    RunResult res;
    {
        const auto bad = check_invariants(sim);
        if (!bad.empty()) throw DomainError("run: invalid initial state: " + bad.front());
    }
    const SimConfig cfg = sim.config;
    Engine engine(std::move(sim));
    Engine::Impl& E = *engine.impl_;

    std::vector<double> snaps = options.snapshot_times;
    std::sort(snaps.begin(), snaps.end());
    std::size_t next_snap = 0;
    auto take_snapshots_until = [&](double limit, bool inclusive) {
        while (next_snap < snaps.size() &&
               (inclusive ? snaps[next_snap] <= limit : snaps[next_snap] < limit)) {
            res.snapshots.push_back({snaps[next_snap], E.ordered(snaps[next_snap])});
            ++next_snap;
        }
    };
    std::vector<std::pair<double, double>> births;  // indexed by slot, for path records
    auto birth = [&](int slot) {
        if (!options.record_paths) return;
        if (births.size() <= static_cast<std::size_t>(slot)) births.resize(slot + 1);
        births[slot] = {E.t, E.nodes[slot].f.position(E.t)};
    };
    auto death = [&](int slot, double at) {
        if (!options.record_paths) return;
        const Front& f = E.nodes[slot].f;
        res.paths.push_back({f.id, f.family, f.kind, births[slot].first, births[slot].second, at,
                             f.position(at)});
    };
    if (options.record_paths)
        for (int k = E.head; k != -1; k = E.nodes[k].next) birth(k);

    auto record = [&](std::int64_t ev) {
        const double rmin = E.rhos.empty() ? E.leftmost.rho : *E.rhos.begin();
        res.series.push_back({E.t, E.tv1, E.tv2, static_cast<std::int64_t>(E.count), rmin, ev});
    };
    if (E.count > 0) record(0);

    std::int64_t events = 0;
    bool recorded_last = true;
    std::vector<int> group;
    std::vector<Front> in;
    res.termination = "no-events";
    while (true) {
        while (!E.heap.empty() && !E.valid(E.heap.top())) E.heap.pop();
        if (E.heap.empty()) break;
        const auto c = E.heap.top();
        if (c.t > cfg.t_max) {
            res.termination = "t_max";
            break;
        }
        if (events >= cfg.max_events) {
            res.termination = "max_events";
            break;
        }
        E.heap.pop();
        take_snapshots_until(c.t, false);

        // gather every adjacent front meeting at the same instant and point
        group.assign({c.ls, c.rs});
        const Hit ch{true, c.t, c.x};
        while (true) {
            const int p = E.nodes[group.front()].prev;
            if (p == -1) break;
            const Hit h = collision(E.nodes[p].f, E.nodes[group.front()].f, E.t);
            if (!h.ok || !same_instant(h, ch)) break;
            group.insert(group.begin(), p);
        }
        while (true) {
            const int q = E.nodes[group.back()].next;
            if (q == -1) break;
            const Hit h = collision(E.nodes[group.back()].f, E.nodes[q].f, E.t);
            if (!h.ok || !same_instant(h, ch)) break;
            group.push_back(q);
        }
        in.clear();
        for (int k : group) in.push_back(E.nodes[k].f);
        std::vector<Front> out = located_interact(in, cfg, E.policy, c.t, c.x);

        E.t = c.t;
        const int left_slot = E.nodes[group.front()].prev;
        const int right_slot = E.nodes[group.back()].next;
        for (int k : group) {
            death(k, c.t);
            E.remove(k);
        }
        int p = left_slot;
        for (Front& f : out) {
            f.id = E.next_id++;
            p = E.insert_after(p, f);
            birth(p);
        }
        if (out.empty() && right_slot != -1 && !(E.nodes[right_slot].f.left == in.front().left)) {
            Front& r = E.nodes[right_slot].f;
            double a = 0.0, b = 0.0;
            front_tv(r, a, b);
            Front m = make_front(in.front().left, r.right, r.family, r.kind == WaveKind::Shock);
            m.id = r.id;
            m.x = r.x;
            m.t_ref = r.t_ref;
            m.speed = r.speed;
            m.tag = r.tag;
            r = m;
            double a2 = 0.0, b2 = 0.0;
            front_tv(r, a2, b2);
            E.tv1 += a2 - a;
            E.tv2 += b2 - b;
        }
        if (cfg.audit) {
            GasState prev = left_slot != -1 ? E.nodes[left_slot].f.right : E.leftmost;
            double xprev = left_slot != -1 ? E.nodes[left_slot].f.position(E.t) : -std::numeric_limits<double>::infinity();
            const int stop = right_slot != -1 ? E.nodes[right_slot].next : -1;
            for (int k = left_slot != -1 ? E.nodes[left_slot].next : E.head; k != stop; k = E.nodes[k].next) {
                const Front& f = E.nodes[k].f;
                std::string what;
                if (!(f.left == prev)) what = "left state does not chain";
                else if (!(f.right.rho > cfg.rho_floor)) what = "density below floor";
                else if (f.family == WaveFamily::Family1 ? !(f.speed < 0.0) : !(f.speed > 0.0))
                    what = "speed sign violates family";
                else if (f.position(E.t) < xprev - 1e-12 * std::max(1.0, std::abs(xprev)))
                    what = "fronts out of order";
                if (!what.empty()) {
                    std::ostringstream os;
                    os << "audit: event " << events + 1 << " at t=" << E.t << ", front id " << f.id << ": " << what;
                    throw Error(os.str());
                }
                prev = f.right;
                xprev = f.position(E.t);
            }
        }
        // new adjacencies: left neighbour through the inserted run up to the right neighbour
        const int first = left_slot != -1 ? left_slot : E.head;
        for (int k = first; k != -1 && k != right_slot; k = E.nodes[k].next) E.schedule(k);
        ++events;
        if ((events & 4095) == 0) E.recompute_tv();
        recorded_last = false;
        if (events % std::max<std::int64_t>(1, cfg.record_stride) == 0) {
            record(events);
            recorded_last = true;
        }
        if (options.observer) {
            EventRecord rec{events, c.t, c.x, in, out};
            if (!options.observer(rec, engine)) {
                res.termination = "observer";
                break;
            }
        }
        if (E.tv1 + E.tv2 >= cfg.tv_max) {
            res.termination = "tv_max";
            break;
        }
    }
    if (!recorded_last) record(events);
    if (res.termination == "t_max") E.t = cfg.t_max;
    take_snapshots_until(res.termination == "no-events" ? cfg.t_max : E.t, true);
    if (options.record_paths)
        for (int k = E.head; k != -1; k = E.nodes[k].next) death(k, E.t);
    res.events = events;
    res.state = E.state();
    return res;
}

}  // namespace psys
