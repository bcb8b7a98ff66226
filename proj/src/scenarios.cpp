#include "psys/scenarios.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <set>
#include <fstream>
#include <numbers>
#include <sstream>

namespace psys {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double own_dw(const Front& f) { return f.family == WaveFamily::Family1 ? f.dw1() : f.dw2(); }

double state_scale(const GasState& s) { return std::max({1e-300, std::abs(s.u), s.rho}); }

double state_gap(const GasState& a, const GasState& ref) {
    return std::max(std::abs(a.u - ref.u), std::abs(a.rho - ref.rho)) / state_scale(ref);
}

}  // namespace

// ---- parameters ----

ParamMap ParamMap::parse(const std::string& text) {
    ParamMap p;
    std::istringstream in(text);
    std::string line;
    int n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (auto h = line.find('#'); h != std::string::npos) line.resize(h);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw DomainError("params line " + std::to_string(n) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        if (key.empty()) throw DomainError("params line " + std::to_string(n) + ": empty key");
        p.values_[key] = trim(line.substr(eq + 1));
    }
    return p;
}

ParamMap ParamMap::load(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw DomainError("cannot read params file " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse(ss.str());
}

double ParamMap::get(const std::string& key, double fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    const std::string& v = it->second;
    if (v == "inf") return std::numeric_limits<double>::infinity();
    try {
        std::size_t used = 0;
        const double d = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw DomainError("param " + key + ": not a number: " + v);
    }
}

std::int64_t ParamMap::get_int(const std::string& key, std::int64_t fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
        std::size_t used = 0;
        const long long d = std::stoll(it->second, &used);
        if (used != it->second.size()) throw std::invalid_argument(it->second);
        return d;
    } catch (const std::exception&) {
        throw DomainError("param " + key + ": not an integer: " + it->second);
    }
}

std::string ParamMap::get_str(const std::string& key, const std::string& fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
}

SimConfig config_from(const ParamMap& p, SimConfig c) {
    c.delta_r = p.get("delta_r", c.delta_r);
    c.rho_floor = p.get("rho_floor", c.rho_floor);
    c.t_max = p.get("t_max", c.t_max);
    c.tv_max = p.get("tv_max", c.tv_max);
    c.max_events = p.get_int("max_events", c.max_events);
    const std::string m = p.get_str("mode", to_string(c.mode));
    if (m == "exact") c.mode = EngineMode::RiemannExact;
    else if (m == "paper") c.mode = EngineMode::PaperBookkeeping;
    else throw DomainError("param mode: expected exact or paper, got " + m);
    if (!(c.delta_r > 0.0) || !(c.rho_floor > 0.0) || !(c.t_max > 0.0) || !(c.tv_max > 0.0) ||
        c.max_events <= 0)
        throw DomainError("engine settings must be positive");
    return c;
}

void Trace::append(const RunResult& r, double t_offset) {
    const std::int64_t base = events;
    for (TVRecord rec : r.series) {
        rec.t += t_offset;
        rec.event += base;
        series.push_back(rec);
    }
    for (Snapshot s : r.snapshots) {
        s.t += t_offset;
        for (Front& f : s.fronts) f.t_ref += t_offset;
        snapshots.push_back(std::move(s));
    }
    for (FrontPath p : r.paths) {
        p.t0 += t_offset;
        p.t1 += t_offset;
        paths.push_back(p);
    }
    events += r.events;
    termination = r.termination;
}

// ---- Example 1 ----

void Example1Params::validate() const {
    if (!(x_min > 0.0) || !(x0 > x_min)) throw DomainError("example1: need 0 < x_min < x0");
    if (!(shock_pos > x0)) throw DomainError("example1: the shock must lie right of the train");
    if (!(c > 0.0) || !(delta_r > 0.0)) throw DomainError("example1: c and delta_r must be positive");
    if (enforce_window && !(0.0 < alpha / 3.0 && alpha / 3.0 < beta && beta < alpha && alpha < 1.0)) {
        std::ostringstream os;
        os << "example1: exponents alpha=" << alpha << ", beta=" << beta
           << " violate 0 < alpha/3 < beta < alpha < 1";
        throw DomainError(os.str());
    }
    if (!(alpha > 0.0) || !(beta > 0.0)) throw DomainError("example1: exponents must be positive");
}

double example1_w2(double x, double alpha, double beta) {
    return std::pow(x, alpha) * (2.0 + std::sin(std::pow(x, -beta)));
}

namespace {

// Grid resolving both the scale of x and the phase x^-beta, with `per_turn` points per 2 pi.
std::vector<double> oscillation_grid(double beta, double a, double b, double per_turn) {
    std::vector<double> xs{a};
    double x = a;
    const double dphi = 2.0 * std::numbers::pi / per_turn;
    while (x < b) {
        const double rate = beta * std::pow(x, -beta - 1.0);
        x = std::min(b, x + std::min(0.01 * x, dphi / rate));
        xs.push_back(x);
    }
    return xs;
}

double example1_dw2(double x, double alpha, double beta) {
    const double ph = std::pow(x, -beta);
    return alpha * std::pow(x, alpha - 1.0) * (2.0 + std::sin(ph)) -
           beta * std::pow(x, alpha - beta - 1.0) * std::cos(ph);
}

}  // namespace

double example1_tv_quadrature(double alpha, double beta, double a, double b) {
    // composite Gauss-Legendre (3 nodes) of |w2'| between sign changes on a fine phase grid
    const std::vector<double> xs = oscillation_grid(beta, a, b, 256.0);
    static const double g[3] = {-std::sqrt(0.6), 0.0, std::sqrt(0.6)};
    static const double wg[3] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
        const double l = xs[i], r = xs[i + 1];
        const double fl = example1_dw2(l, alpha, beta), fr = example1_dw2(r, alpha, beta);
        if (fl * fr < 0.0) {
            // integral of |f| over a cell with one sign change equals |F(r)-F(m)| + |F(m)-F(l)|
            double lo = l, hi = r;
            for (int k = 0; k < 100; ++k) {
                const double m = 0.5 * (lo + hi);
                (example1_dw2(m, alpha, beta) * fl > 0.0 ? lo : hi) = m;
            }
            const double m = 0.5 * (lo + hi);
            total += std::abs(example1_w2(m, alpha, beta) - example1_w2(l, alpha, beta)) +
                     std::abs(example1_w2(r, alpha, beta) - example1_w2(m, alpha, beta));
            continue;
        }
        double s = 0.0;
        for (int k = 0; k < 3; ++k) {
            const double x = 0.5 * (l + r) + 0.5 * (r - l) * g[k];
            s += wg[k] * std::abs(example1_dw2(x, alpha, beta));
        }
        total += 0.5 * (r - l) * s;
    }
    return total;
}

namespace {

constexpr int kTagTrain = 5;
constexpr int kTagShock = 6;

// w1 = 0 train on [x_min, x0] followed by a 1-shock of unit w1 jump at shock_pos.
Profile example1_profile(double alpha, double beta, double x_min, double x0, double w1_level,
                         GasState* end_state) {
    Profile prof;
    prof.left_state = from_invariants({w1_level, example1_w2(x_min, alpha, beta)});
    SmoothSegment seg;
    for (double x : oscillation_grid(beta, x_min, x0, 64.0)) {
        seg.x.push_back(x);
        seg.w.push_back({w1_level, example1_w2(x, alpha, beta)});
    }
    prof.add_smooth(std::move(seg));
    if (end_state) *end_state = from_invariants({w1_level, example1_w2(x0, alpha, beta)});
    return prof;
}

// Right state of the 1-shock from P whose w1 jump equals sigma.
GasState unit_shock_right(const GasState& P, double sigma, const RiemannConfig& rc) {
    auto g = [&](double r) {
        const GasState Q = shock_curve(P, WaveFamily::Family1, Anchor::LeftGiven, r);
        return to_invariants(Q).w1 - to_invariants(P).w1 - sigma;
    };
    const double r = find_root(g, P.rho, P.rho + sigma, rc);
    return shock_curve(P, WaveFamily::Family1, Anchor::LeftGiven, r);
}

}  // namespace

SimState example1_build(const Example1Params& p, const SimConfig& base) {
    p.validate();
    SimConfig cfg = base;
    cfg.delta_r = p.delta_r;
    cfg.mode = EngineMode::PaperBookkeeping;
    GasState P;
    Profile prof = example1_profile(p.alpha, p.beta, p.x_min, p.x0, 0.0, &P);
    JumpItem shock;
    shock.kind = JumpItem::Kind::Shock;
    shock.x = p.shock_pos;
    shock.family = WaveFamily::Family1;
    shock.right = unit_shock_right(P, 1.0, cfg.riemann());
    shock.tag = kTagShock;
    prof.add_jump(shock);
    return discretize_profile(prof, cfg, SpeedPolicy::constant_pair(p.c), kTagTrain);
}

Example1Report example1_run(const Example1Params& p, const SimConfig& base,
                            const TraceOptions& topt) {
    const auto clock = std::chrono::steady_clock::now();
    Example1Report rep;
    rep.params = p;
    SimState sim = example1_build(p, base);
    rep.fronts_initial = static_cast<std::int64_t>(sim.fronts.size());
    rep.tv_w2_initial = total_variation(sim).second;

    const double k = std::pow(3.0, -2.0 / 3.0);
    double min_ratio = std::numeric_limits<double>::infinity();
    RunOptions opt;
    opt.record_paths = topt.record_paths;
    opt.snapshot_times = topt.snapshot_times;
    opt.observer = [&](const EventRecord& ev, const Engine&) {
        if (ev.incoming.size() != 2) return true;
        const Front& a = ev.incoming[0];
        const Front& b = ev.incoming[1];
        if (a.family != WaveFamily::Family2 || b.family != WaveFamily::Family1 ||
            b.kind != WaveKind::Shock)
            return true;
        CrossingSample cs;
        cs.t = ev.t;
        cs.x = ev.x;
        cs.rho_minus = a.right.rho;
        cs.eps_in = a.dw2();
        for (const Front& o : ev.outgoing)
            if (o.family == WaveFamily::Family2) cs.eps_out += o.dw2();
        cs.factor = cs.eps_in != 0.0 ? std::abs(cs.eps_out / cs.eps_in) : 0.0;
        cs.bound = std::pow(cs.rho_minus, -2.0 / 3.0);
        if (cs.rho_minus <= 1e-2) {
            ++rep.near_vacuum_crossings;
            if (cs.factor < cs.bound) ++rep.bound_violations;
            min_ratio = std::min(min_ratio, cs.factor / (k * cs.bound));
        }
        rep.crossings.push_back(cs);
        return true;
    };
    const RunResult r = run(std::move(sim), opt);
    rep.trace.append(r);
    rep.tv_w2_final = total_variation(r.state).second;
    rep.t_final = r.state.t;
    rep.min_asymptotic_ratio = rep.near_vacuum_crossings ? min_ratio : 0.0;
    rep.wall_seconds = seconds_since(clock);
    return rep;
}

// ---- Example 2 ----

namespace {

constexpr int kTagFanR2 = 7;
constexpr int kTagFanR1 = 8;
constexpr int kTagFanK = 9;

double rho_tv(const SimState& sim) {
    double t = 0.0;
    for (const Front& f : sim.fronts) t += std::abs(f.right.rho - f.left.rho);
    return t;
}

template <class W>
double weighted_tv(const SimState& sim, W weight) {
    double t = 0.0;
    for (const Front& f : sim.fronts)
        t += weight(0.5 * (f.left.rho + f.right.rho)) * (std::abs(f.dw1()) + std::abs(f.dw2()));
    return t;
}

// Left and right ends of the train fronts and the lowest density between them.
struct TrainSpan {
    double lo = 0.0, hi = 0.0, rho_min = 0.0;
    bool any = false;
};

TrainSpan train_span(const SimState& sim) {
    TrainSpan sp;
    std::size_t first = sim.fronts.size(), last = 0;
    for (std::size_t i = 0; i < sim.fronts.size(); ++i) {
        if (sim.fronts[i].tag != kTagTrain) continue;
        first = std::min(first, i);
        last = i;
    }
    if (first == sim.fronts.size()) return sp;
    sp.any = true;
    sp.lo = sim.fronts[first].position(sim.t);
    sp.hi = sim.fronts[last].position(sim.t);
    sp.rho_min = std::numeric_limits<double>::infinity();
    for (std::size_t i = first; i < last; ++i) sp.rho_min = std::min(sp.rho_min, sim.fronts[i].right.rho);
    return sp;
}

SimState example2_state(const Example2Params& p, double x_min, bool with_train, double b,
                        const SimConfig& base) {
    SimConfig cfg = base;
    cfg.delta_r = p.delta_r;
    cfg.mode = EngineMode::PaperBookkeeping;
    Profile prof;
    GasState E;
    if (with_train) {
        prof = example1_profile(p.alpha, p.beta, x_min, p.x0, p.a1, &E);
    } else {
        E = from_invariants({p.a1, example1_w2(p.x0, p.alpha, p.beta)});
        prof.left_state = E;
    }
    const double x0 = p.x0;
    auto line = [&](double x, WaveFamily fam, const GasState& right, int tag) {
        JumpItem j;
        j.kind = JumpItem::Kind::RarefactionLine;
        j.x = x;
        j.family = fam;
        j.right = right;
        j.tag = tag;
        prof.add_jump(j);
    };
    RiemannInvariants w = to_invariants(E);
    w.w2 += p.a2;
    line(x0 + 0.1, WaveFamily::Family2, from_invariants(w), kTagFanR2);
    w.w1 -= p.a1;
    const GasState P = from_invariants(w);
    line(x0 + 0.2, WaveFamily::Family1, P, kTagFanR1);
    JumpItem shock;
    shock.kind = JumpItem::Kind::Shock;
    shock.x = 1.0;
    shock.family = WaveFamily::Family1;
    shock.right = unit_shock_right(P, 1.0, cfg.riemann());
    shock.tag = kTagShock;
    prof.add_jump(shock);
    if (b > 0.0) {
        RiemannInvariants q = to_invariants(shock.right);
        q.w1 += b;
        line(1.2, WaveFamily::Family1, from_invariants(q), kTagFanK);
    }
    return discretize_profile(prof, cfg, SpeedPolicy::constant_pair(p.c), kTagTrain);
}

}  // namespace

Example2Build example2_build_at(const Example2Params& p, double x_min, const SimConfig& base) {
    if (!(p.a1 > 0.0) || !(p.a2 > 0.0)) throw DomainError("example2: fan strengths must be positive");
    if (!(x_min > 0.0) || !(x_min < p.x0)) throw DomainError("example2: need 0 < x_min < x0");
    const bool train = p.target_gain > 1.0;
    const RunResult dry = run(example2_state(p, x_min, train, 0.0, base));
    double rho_low = std::numeric_limits<double>::infinity();
    if (const TrainSpan sp = train_span(dry.state); sp.any) rho_low = sp.rho_min;
    else rho_low = min_density(dry.state);
    Example2Build out;
    out.x_min = x_min;
    out.b = std::max(0.0, 2.0 * (p.rho_target * p.rho_margin - rho_low));
    out.sim = example2_state(p, x_min, train, out.b, base);
    out.rho0 = min_density(out.sim);
    for (const Front& f : out.sim.fronts) out.train_fronts += f.tag == kTagTrain;
    return out;
}

Example2Report example2_evaluate(const Example2Params& p, const Example2Build& b,
                                 const TraceOptions& topt) {
    const auto clock = std::chrono::steady_clock::now();
    Example2Report rep;
    rep.params = p;
    rep.x_min = b.x_min;
    rep.b = b.b;
    rep.rho0 = b.rho0;
    const auto [a0, c0] = total_variation(b.sim);
    rep.tv_initial = a0 + c0;
    rep.tv_rho_initial = rho_tv(b.sim);
    RunOptions opt;
    opt.record_paths = topt.record_paths;
    opt.snapshot_times = topt.snapshot_times;
    const RunResult r = run(b.sim, opt);
    rep.trace.append(r);
    const auto [a1, c1] = total_variation(r.state);
    rep.tv_final = a1 + c1;
    rep.tv_rho_final = rho_tv(r.state);
    rep.gain = rep.tv_final / rep.tv_initial;
    rep.t3 = r.state.t;
    const TrainSpan sp = train_span(r.state);
    rep.interval_lo = sp.lo;
    rep.interval_hi = sp.hi;
    rep.rho_min_interval = sp.any ? sp.rho_min : min_density(r.state);
    rep.rho_max = std::max(b.sim.leftmost_state.rho, r.state.leftmost_state.rho);
    for (const SimState* s : {&b.sim, &r.state})
        for (const Front& f : s->fronts) rep.rho_max = std::max(rep.rho_max, f.right.rho);
    auto gain_of = [&](auto w) { return weighted_tv(r.state, w) / weighted_tv(b.sim, w); };
    rep.weighted_gains = {gain_of([](double) { return 1.0; }), gain_of([](double r) { return r; }),
                          gain_of([](double r) { return 1.0 / r; }),
                          gain_of([](double r) { return std::exp(-r); })};
    rep.wall_seconds = seconds_since(clock);
    return rep;
}

namespace {

// Decade search shared by example2_build and example2_run.
template <class Done>
Example2Build example2_search(const Example2Params& p, const SimConfig& base, Done done) {
    if (!(p.target_gain >= 1.0)) throw DomainError("example2: target_gain must be at least 1");
    if (p.target_gain <= 1.0) {
        Example2Build b = example2_build_at(p, p.x_min_start, base);
        done(b);
        return b;
    }
    double best = 0.0;
    for (double xm = p.x_min_start; xm >= p.x_min_guard * (1.0 - 1e-9); xm /= 10.0) {
        Example2Build b = example2_build_at(p, xm, base);
        const double g = done(b);
        best = std::max(best, g);
        if (g >= p.target_gain) return b;
    }
    std::ostringstream os;
    os << "target gain " << p.target_gain << " needs x_min below " << p.x_min_guard
       << " (best gain " << best << ")";
    throw InfeasibleTarget("x_min vacuum guard", os.str());
}

}  // namespace

Example2Build example2_build(const Example2Params& p, const SimConfig& base) {
    return example2_search(p, base, [&](const Example2Build& b) {
        return example2_evaluate(p, b).gain;
    });
}

Example2Report example2_run(const Example2Params& p, const SimConfig& base,
                            const TraceOptions& topt) {
    const auto clock = std::chrono::steady_clock::now();
    Example2Report rep;
    example2_search(p, base, [&](const Example2Build& b) {
        rep = example2_evaluate(p, b, topt);
        return rep.gain;
    });
    rep.wall_seconds = seconds_since(clock);
    return rep;
}

// ---- Example 3 ----

Pattern3States example3_states(double rho_C, double theta_mid, const RiemannConfig& cfg) {
    if (!(rho_C > cfg.rho_floor)) throw DomainError("example3: rho_C must exceed the density floor");
    if (!(theta_mid > 1.0)) throw DomainError("example3: theta_mid must exceed 1");
    Pattern3States st;
    st.C = {0.0, rho_C};
    st.A1 = shock_curve(st.C, WaveFamily::Family1, Anchor::LeftGiven, theta_mid * rho_C);
    st.A2 = mirror(st.A1);
    st.D = {0.0, solve_riemann(st.A2, st.A1, cfg).middle.rho};
    const double h = 0.5 * (st.D.rho - st.C.rho), m = 0.5 * (st.D.rho + st.C.rho);
    st.B1 = {-h, m};
    st.B2 = {h, m};
    st.Ul = lemma1_left_state(st.B1, st.A2, cfg);
    st.Ur = mirror(st.Ul);
    return st;
}

double pattern_s(const Pattern3States& st) { return 1.0 - st.C.rho / st.A1.rho; }

double pattern_defect(const Pattern3States& st) {
    const double sc = st.A1.rho;
    auto inv = [](const GasState& g) { return to_invariants(g); };
    double d = 0.0;
    auto put = [&](double v) { d = std::max(d, std::abs(v) / sc); };
    put(st.A2.u + st.A1.u);
    put(st.A2.rho - st.A1.rho);
    put(st.B1.u + st.B2.u);
    put(st.B1.rho - st.B2.rho);
    put(st.Ul.u + st.Ur.u);
    put(st.Ul.rho - st.Ur.rho);
    put(st.C.u);
    put(st.D.u);
    // square sides on rarefaction lines: C-B1 and D-B2 keep w2, C-B2 and D-B1 keep w1
    put(inv(st.B1).w2 - inv(st.C).w2);
    put(inv(st.B1).w1 - inv(st.D).w1);
    put(inv(st.B2).w1 - inv(st.C).w1);
    put(inv(st.B2).w2 - inv(st.D).w2);
    d = std::max(d, rh_residual(make_wave(st.Ul, st.B1, WaveFamily::Family1, true)));
    d = std::max(d, rh_residual(make_wave(st.Ul, st.A2, WaveFamily::Family1, true)));
    d = std::max(d, rh_residual(make_wave(st.A1, st.Ur, WaveFamily::Family2, true)));
    d = std::max(d, rh_residual(make_wave(st.B2, st.Ur, WaveFamily::Family2, true)));
    return d;
}

SpeedPolicy pattern_policy(const PatternLayout& lay) {
    const double big = lay.big_speed, small = lay.small_speed;
    return SpeedPolicy::scheduled([big, small](const Front& f, const SpeedContext&) {
        if (f.tag == kTagS1) return -big;
        if (f.tag == kTagS2) return big;
        return f.family == WaveFamily::Family1 ? -small : small;
    });
}

double pattern_site(const PatternLayout& lay) { return lay.x_s1 + 0.8 * lay.gap; }

namespace {

bool is_pattern_tag(int tag) { return tag == kTagS1 || tag == kTagS2 || tag == kTagMid; }

Front placed(const GasState& l, const GasState& r, WaveFamily fam, bool shock, double x, int tag) {
    Front f = make_front(l, r, fam, shock);
    f.x = x;
    f.tag = tag;
    return f;
}

void number_and_time(SimState& sim) {
    for (Front& f : sim.fronts) {
        if (f.id < 0) f.id = sim.next_id++;
        f.t_ref = sim.t;
    }
    assign_speeds(sim);
}

double small_tv(const SimState& sim, std::int64_t* count = nullptr) {
    double t = 0.0;
    std::int64_t n = 0;
    for (const Front& f : sim.fronts) {
        if (f.tag < kTagSmall) continue;
        t += std::abs(f.dw1()) + std::abs(f.dw2());
        ++n;
    }
    if (count) *count = n;
    return t;
}

using Watch = std::function<void(const EventRecord&, const Engine&, int pattern_events)>;

// Runs until the four large fronts have completed one period (six pattern-only events).
RunResult run_period(SimState sim, bool paths, const Watch& watch) {
    int count = 0;
    RunOptions opt;
    opt.record_paths = paths;
    opt.observer = [&](const EventRecord& ev, const Engine& eng) {
        bool pattern = true;
        for (const Front& f : ev.incoming) pattern = pattern && is_pattern_tag(f.tag);
        if (pattern) ++count;
        if (watch) watch(ev, eng, count);
        return count < 6;
    };
    RunResult r = run(std::move(sim), opt);
    if (r.termination != "observer")
        throw NonConvergence("pattern period did not close (" + r.termination + " after " +
                             std::to_string(count) + " pattern events)");
    return r;
}

Snapshot snapshot_of(const SimState& sim) {
    Snapshot s;
    s.t = sim.t;
    for (Front f : sim.fronts) {
        f.x = f.position(sim.t);
        f.t_ref = sim.t;
        s.fronts.push_back(f);
    }
    return s;
}

}  // namespace

SimState pattern_state(const Pattern3States& st, const PatternLayout& lay, const SimConfig& base) {
    if (!(lay.gap > 0.0) || !(lay.big_speed > 0.0) || !(lay.small_speed > lay.big_speed))
        throw DomainError("pattern layout: need gap > 0 and 0 < big_speed < small_speed");
    SimState sim;
    sim.config = base;
    sim.config.mode = EngineMode::PaperBookkeeping;
    sim.config.delta_r = 0.01 * (st.A1.rho - st.C.rho);
    sim.policy = pattern_policy(lay);
    sim.leftmost_state = st.Ul;
    const double x = lay.x_s1, g = lay.gap;
    sim.fronts = {placed(st.Ul, st.A2, WaveFamily::Family1, true, x, kTagS1),
                  placed(st.A2, st.C, WaveFamily::Family2, true, x + 0.05 * g, kTagMid),
                  placed(st.C, st.A1, WaveFamily::Family1, true, x + 0.95 * g, kTagMid),
                  placed(st.A1, st.Ur, WaveFamily::Family2, true, x + g, kTagS2)};
    for (const Front& f : sim.fronts)
        if (f.kind != WaveKind::Shock) throw DomainError("pattern_state: a pattern front is not a shock");
    for (Front& f : sim.fronts) f.id = -1;
    number_and_time(sim);
    return sim;
}

double pattern_residual(const SimState& sim, const Pattern3States& st) {
    std::vector<const Front*> big;
    for (const Front& f : sim.fronts)
        if (is_pattern_tag(f.tag)) big.push_back(&f);
    if (big.size() != 4) return std::numeric_limits<double>::infinity();
    const GasState chain[5] = {st.Ul, st.A2, st.C, st.A1, st.Ur};
    const WaveFamily fam[4] = {WaveFamily::Family1, WaveFamily::Family2, WaveFamily::Family1,
                               WaveFamily::Family2};
    double r = 0.0;
    for (int i = 0; i < 4; ++i) {
        const Front& f = *big[static_cast<std::size_t>(i)];
        if (f.family != fam[i] || f.kind != WaveKind::Shock) return std::numeric_limits<double>::infinity();
        const Front ref = make_front(chain[i], chain[i + 1], fam[i], true);
        r = std::max({r, state_gap(f.left, chain[i]), state_gap(f.right, chain[i + 1]),
                      std::abs(f.strength - ref.strength) / std::abs(ref.strength)});
    }
    return r;
}

PeriodicReport periodic_run(const Pattern3States& st, int n_periods, const PatternLayout& lay,
                            const SimConfig& base, const TraceOptions& topt) {
    if (n_periods < 0) throw DomainError("periodic_run: negative period count");
    const auto clock = std::chrono::steady_clock::now();
    PeriodicReport rep;
    rep.rho_C = st.C.rho;
    rep.theta_mid = st.A1.rho / st.C.rho;
    rep.s = pattern_s(st);
    rep.states = st;
    SimState sim = pattern_state(st, lay, base);
    rep.periods.push_back({0, sim.t, pattern_residual(sim, st), 0.0, 0, 0});
    rep.trace.snapshots.push_back(snapshot_of(sim));
    for (int k = 1; k <= n_periods; ++k) {
        Watch watch;
        if (k == 1) {
            watch = [&](const EventRecord&, const Engine& eng, int count) {
                if (count != 3 || !rep.t3_states.empty()) return;
                const std::vector<Front> fs = eng.fronts();
                for (const Front& f : fs) {
                    if (!is_pattern_tag(f.tag)) continue;
                    if (rep.t3_states.empty()) rep.t3_states.push_back(f.left);
                    rep.t3_states.push_back(f.right);
                    rep.t3_kinds.push_back(to_string(f.family) + " " + to_string(f.kind));
                }
            };
        }
        const RunResult r = run_period(std::move(sim), topt.record_paths, watch);
        rep.trace.append(r);
        sim = r.state;
        const double res = pattern_residual(sim, st);
        rep.periods.push_back({k, sim.t, res, 0.0, 0, 0});
        rep.max_residual = std::max(rep.max_residual, res);
        rep.trace.snapshots.push_back(snapshot_of(sim));
    }
    rep.wall_seconds = seconds_since(clock);
    return rep;
}

namespace {

std::string itinerary_step(const Front& small, const Front& other) {
    const std::string what = to_string(other.family) + " " + to_string(other.kind);
    if (other.tag == kTagS1) return "reflect at S1 (P1)";
    if (other.tag == kTagS2) return "reflect at S2 (P2)";
    if (other.tag == kTagMid) return "cross middle " + what;
    (void)small;
    return "cross small " + what;
}

}  // namespace

AmplifierReport amplifier_run(const Pattern3States& st, double eps0, int n_periods,
                              const PatternLayout& lay, const SimConfig& base,
                              const TraceOptions& topt) {
    if (n_periods < 0) throw DomainError("amplifier_run: negative period count");
    const auto clock = std::chrono::steady_clock::now();
    AmplifierReport rep;
    rep.s = pattern_s(st);
    rep.eps0 = eps0;
    rep.predicted = 1.0 + std::pow(rep.s, 3) / 3.0;
    rep.band_lo = 1.0 + std::pow(rep.s, 3) / 6.0;
    rep.band_hi = 1.0 + std::pow(rep.s, 3) / 2.0;
    SimState sim = pattern_state(st, lay, base);
    if (eps0 != 0.0) {
        if (!(std::abs(eps0) < 0.01 * (st.A1.rho - st.C.rho)))
            throw DomainError("amplifier_run: eps0 must be small against the middle shocks");
        // the small 1-front C -> C'' sits in region C; the middle 1-shock is re-solved from C''
        RiemannInvariants w = to_invariants(st.C);
        w.w1 -= eps0;
        const GasState Cpp = from_invariants(w);
        const RiemannSolution sol = solve_riemann(Cpp, st.A1, sim.config.riemann());
        std::vector<Front> fs;
        fs.push_back(sim.fronts[0]);
        fs.push_back(sim.fronts[1]);
        fs.push_back(placed(st.C, Cpp, WaveFamily::Family1, false, pattern_site(lay), kTagSmall));
        Front i1 = placed(Cpp, sol.middle, WaveFamily::Family1, true, sim.fronts[2].x, kTagMid);
        i1.id = -1;
        fs.push_back(i1);
        if (!(sol.middle == st.A1))
            fs.push_back(placed(sol.middle, st.A1, WaveFamily::Family2, false, sim.fronts[2].x,
                                kTagSmall + 1));
        fs.push_back(sim.fronts[3]);
        for (Front& f : fs)
            if (f.tag >= kTagSmall) f.id = -1;
        sim.fronts = fs;
        number_and_time(sim);
    }
    auto tracked = [](const SimState& s) {
        for (const Front& f : s.fronts)
            if (f.tag == kTagSmall) return std::abs(own_dw(f));
        return 0.0;
    };
    rep.strengths.push_back(tracked(sim));
    rep.trace.snapshots.push_back(snapshot_of(sim));
    for (int k = 1; k <= n_periods; ++k) {
        Watch watch = [&](const EventRecord& ev, const Engine&, int) {
            const Front* small = nullptr;
            const Front* other = nullptr;
            for (const Front& f : ev.incoming) (f.tag == kTagSmall ? small : other) = &f;
            if (!small || !other) return;
            ItineraryStep step;
            step.period = k;
            step.t = ev.t;
            step.step = itinerary_step(*small, *other);
            step.before = own_dw(*small);
            for (const Front& o : ev.outgoing)
                if (o.tag == kTagSmall) step.after = own_dw(o);
            rep.itinerary.push_back(step);
        };
        const RunResult r = run_period(std::move(sim), topt.record_paths, watch);
        rep.trace.append(r);
        sim = r.state;
        rep.strengths.push_back(tracked(sim));
        rep.trace.snapshots.push_back(snapshot_of(sim));
    }
    double logsum = 0.0;
    for (std::size_t i = 1; i < rep.strengths.size(); ++i) {
        if (rep.strengths[i - 1] == 0.0) continue;
        const double g = rep.strengths[i] / rep.strengths[i - 1];
        rep.gains.push_back(g);
        logsum += std::log(g);
    }
    rep.gain = rep.gains.empty() ? 1.0 : std::exp(logsum / static_cast<double>(rep.gains.size()));
    rep.wall_seconds = seconds_since(clock);
    return rep;
}

std::vector<double> default_pair_sizes(int n) {
    if (n < 0) throw DomainError("default_pair_sizes: negative count");
    std::vector<double> s;
    double sum = 0.0;
    for (int k = 1; k <= n; ++k) {
        s.push_back(std::ldexp(0.5, -k));
        sum += s.back();
    }
    for (double& v : s) v /= sum;
    return s;
}

void insert_pair_train(SimState& sim, const std::vector<double>& sizes, double x, double width,
                       int first_tag) {
    if (sizes.empty()) return;
    const double lo = x - 0.5 * width, hi = x + 0.5 * width;
    std::size_t i = 0;
    while (i < sim.fronts.size() && sim.fronts[i].position(sim.t) <= lo) ++i;
    if (i < sim.fronts.size() && sim.fronts[i].position(sim.t) <= hi)
        throw DomainError("insert_pair_train: the train interval is not free of fronts");
    const GasState base = i == 0 ? sim.leftmost_state : sim.fronts[i - 1].right;
    std::vector<Front> train;
    const double step = width / (2.0 * static_cast<double>(sizes.size()));
    for (std::size_t k = 0; k < sizes.size(); ++k) {
        if (!(sizes[k] > 0.0)) throw DomainError("insert_pair_train: sizes must be positive");
        RiemannInvariants w = to_invariants(base);
        w.w1 -= sizes[k];
        const GasState M = from_invariants(w);
        if (!(M.rho > sim.config.rho_floor)) throw VacuumFormation("insert_pair_train: pair reaches vacuum", M.rho);
        const int tag = first_tag + static_cast<int>(k);
        train.push_back(placed(base, M, WaveFamily::Family1, false, lo + (2.0 * k + 0.5) * step, tag));
        train.push_back(placed(M, base, WaveFamily::Family1, false, lo + (2.0 * k + 1.5) * step, tag));
    }
    for (Front& f : train) {
        f.id = sim.next_id++;
        f.t_ref = sim.t;
        f.speed = sim.policy.speed(f, SpeedContext{sim.t, f.x, {}});
    }
    sim.fronts.insert(sim.fronts.begin() + static_cast<std::ptrdiff_t>(i), train.begin(), train.end());
}

namespace {

// Partial cancellation: pairs grown past eps are scaled by a power of two into (eps/2, eps].
std::int64_t trim_pairs(SimState& sim, double eps) {
    std::int64_t trims = 0;
    for (std::size_t i = 0; i + 1 < sim.fronts.size(); ++i) {
        Front& a = sim.fronts[i];
        Front& b = sim.fronts[i + 1];
        if (a.tag < kTagSmall || a.tag != b.tag || a.family != b.family) continue;
        const double size = std::abs(own_dw(a));
        if (size > eps) {
            const double f = std::ldexp(1.0, -static_cast<int>(std::ceil(std::log2(size / eps))));
            const RiemannInvariants l = to_invariants(a.left), m = to_invariants(a.right);
            const GasState M = from_invariants({l.w1 + f * (m.w1 - l.w1), l.w2 + f * (m.w2 - l.w2)});
            auto remake = [](Front& old, const GasState& L, const GasState& R) {
                Front n = make_front(L, R, old.family, false);
                n.id = old.id;
                n.x = old.x;
                n.t_ref = old.t_ref;
                n.speed = old.speed;
                n.tag = old.tag;
                old = n;
            };
            const GasState L = a.left, R = b.right;
            remake(a, L, M);
            remake(b, M, R);
            ++trims;
        }
        ++i;
    }
    return trims;
}

std::vector<double> pair_sizes(const SimState& sim) {
    std::vector<double> out;
    for (std::size_t i = 0; i + 1 < sim.fronts.size(); ++i) {
        const Front& a = sim.fronts[i];
        const Front& b = sim.fronts[i + 1];
        if (a.tag < kTagSmall || a.tag != b.tag) continue;
        out.push_back(std::abs(own_dw(a)));
        ++i;
    }
    return out;
}

}  // namespace

PairTrainReport pair_train_run(const Pattern3States& st, const std::vector<double>& sizes,
                               double eps_cancel, int n_periods, double small_tv_max,
                               const PatternLayout& lay, const SimConfig& base,
                               const TraceOptions& topt) {
    if (n_periods < 0) throw DomainError("pair_train_run: negative period count");
    if (!(eps_cancel > 0.0)) throw DomainError("pair_train_run: eps_cancel must be positive");
    for (double v : sizes)
        if (v > eps_cancel) throw DomainError("pair_train_run: a pair exceeds eps_cancel");
    const auto clock = std::chrono::steady_clock::now();
    PairTrainReport rep;
    rep.s = pattern_s(st);
    rep.pairs = static_cast<std::int64_t>(sizes.size());
    rep.eps_cancel = eps_cancel;
    SimState sim = pattern_state(st, lay, base);
    insert_pair_train(sim, sizes, pattern_site(lay), 0.1 * lay.gap);
    std::int64_t cnt = 0;
    rep.tv_initial = small_tv(sim, &cnt);
    rep.periods.push_back({0, sim.t, pattern_residual(sim, st), rep.tv_initial, cnt, 0});
    for (int k = 1; k <= n_periods; ++k) {
        if (rep.periods.back().small_tv >= small_tv_max) break;
        const RunResult r = run_period(std::move(sim), topt.record_paths, nullptr);
        rep.trace.append(r);
        sim = r.state;
        const double res = pattern_residual(sim, st);
        const std::int64_t trims = trim_pairs(sim, eps_cancel);
        const double tv = small_tv(sim, &cnt);
        rep.periods.push_back({k, sim.t, res, tv, cnt, trims});
        rep.max_residual = std::max(rep.max_residual, res);
        rep.periods_run = k;
    }
    rep.tv_final = rep.periods.back().small_tv;
    rep.growth = rep.tv_initial > 0.0 ? rep.tv_final / rep.tv_initial : 0.0;
    rep.final_sizes = pair_sizes(sim);
    rep.trace.snapshots.push_back(snapshot_of(sim));
    rep.wall_seconds = seconds_since(clock);
    return rep;
}

// ---- finite-time schedule ----

std::string to_string(TransformMode m) {
    return m == TransformMode::SameCount ? "same-count" : "single-large-pair";
}

namespace {

constexpr double kFrozen = 1e-9;

RunResult run_to_rest(SimState sim, Trace* trace) {
    RunResult r = run(std::move(sim), {});
    if (r.termination != "no-events")
        throw NonConvergence("sub-run stopped early (" + r.termination + ")");
    if (trace) trace->append(r);
    return r;
}

SpeedPolicy frozen_except(std::map<std::int64_t, double> table, double v1, double v2) {
    return SpeedPolicy::table(std::move(table), SpeedPolicy::scheduled([v1, v2](const Front& f, const SpeedContext&) {
        return f.family == WaveFamily::Family1 ? v1 : v2;
    }));
}

}  // namespace

SimState pairs_transform(const SimState& sim, TransformMode mode) {
    SimState w = sim;
    if (w.fronts.empty()) return w;
    if (w.fronts.size() % 2 != 0) throw DomainError("pairs_transform: the state is not a train of pairs");
    // role tags survive crossings: pair k uses base + 3k (r), +1 (first half of c), +2 (second half)
    constexpr int base = 1000;
    auto pair_of = [](const Front& f) { return (f.tag - base) / 3; };
    std::vector<int> original;
    std::vector<Front> fs;
    for (std::size_t i = 0; i < w.fronts.size(); i += 2) {
        const Front& r = w.fronts[i];
        const Front& c = w.fronts[i + 1];
        if (r.family != WaveFamily::Family1 || c.family != WaveFamily::Family1 ||
            r.kind != WaveKind::Rarefaction || c.kind != WaveKind::Compression ||
            state_gap(c.right, r.left) > 1e-9)
            throw DomainError("pairs_transform: expected adjacent canceling 1-rarefaction/1-compression pairs");
        const int k = static_cast<int>(original.size());
        original.push_back(r.tag);
        const double xr = r.position(w.t), xc = c.position(w.t);
        const double next = i + 2 < w.fronts.size() ? w.fronts[i + 2].position(w.t) : xc + (xc - xr);
        // split the compression so that its halves can collapse into a shock
        RiemannInvariants m = to_invariants(c.left);
        m.w1 += 0.5 * c.dw1();
        const GasState half = from_invariants(m);
        fs.push_back(placed(r.left, r.right, WaveFamily::Family1, false, xr, base + 3 * k));
        fs.push_back(placed(c.left, half, WaveFamily::Family1, false, xc, base + 3 * k + 1));
        fs.push_back(placed(half, c.right, WaveFamily::Family1, false, xc + 0.25 * (next - xc), base + 3 * k + 2));
    }
    for (Front& f : fs) {
        f.id = w.next_id++;
        f.t_ref = w.t;
    }
    w.fronts = fs;
    w.config.mode = EngineMode::PaperBookkeeping;
    w.config.delta_r = std::numeric_limits<double>::infinity();
    w.config.collapse_compressions = true;
    w.config.t_max = std::numeric_limits<double>::infinity();
    const int n = static_cast<int>(original.size());

    // collapse left to right; each emitted 2-front runs off to the right of the train
    for (int k = 0; k < n; ++k) {
        w.policy = SpeedPolicy::scheduled([k](const Front& f, const SpeedContext&) {
            if (f.family == WaveFamily::Family2) return 1.0;
            return f.kind == WaveKind::Compression && f.tag == base + 3 * k + 2 ? -1.0 : -kFrozen;
        });
        assign_speeds(w);
        w = run_to_rest(std::move(w), nullptr).state;
        const bool collapsed = std::any_of(w.fronts.begin(), w.fronts.end(), [&](const Front& f) {
            return f.family == WaveFamily::Family1 && f.kind == WaveKind::Shock && pair_of(f) == k;
        });
        if (!collapsed) throw NonConvergence("pairs_transform: compression did not collapse");
    }
    std::set<std::int64_t> xs;
    for (const Front& f : w.fronts)
        if (f.family == WaveFamily::Family2) xs.insert(f.id);
    // cancel right to left: each shock overtakes its rarefaction
    for (int k = n - 1; k >= 0; --k) {
        w.policy = SpeedPolicy::scheduled([k, pair_of](const Front& f, const SpeedContext&) {
            if (f.family == WaveFamily::Family2) return kFrozen;
            return f.kind == WaveKind::Shock && pair_of(f) == k ? -1.0 : -kFrozen;
        });
        assign_speeds(w);
        w = run_to_rest(std::move(w), nullptr).state;
    }
    if (mode == TransformMode::SingleLargePair) {
        w.config.collapse_compressions = false;
        std::map<std::int64_t, double> movers;
        std::int64_t last_x = -1, last_y = -1;
        for (const Front& f : w.fronts) {
            if (f.family != WaveFamily::Family2) continue;
            (xs.count(f.id) ? last_x : last_y) = f.id;
        }
        for (const Front& f : w.fronts)
            if (f.family == WaveFamily::Family2 && f.id != last_x && f.id != last_y) movers[f.id] = 1.0;
        w.policy = frozen_except(movers, -kFrozen, kFrozen);
        assign_speeds(w);
        w = run_to_rest(std::move(w), nullptr).state;
    }
    for (Front& f : w.fronts) {
        const int k = pair_of(f);
        if (f.tag >= base && k >= 0 && k < n) f.tag = original[static_cast<std::size_t>(k)];
    }
    w.config = sim.config;
    w.policy = sim.policy;
    assign_speeds(w);
    return w;
}

namespace {

// Left states of the depleted shock: points on the backward 2-shock curve of Ur, from L down
// to Ur, spaced so that the transient state (w1 of one point, w2 of the next) keeps a density
// of at least a quarter of the next point's.
std::vector<GasState> depletion_states(const GasState& L, const GasState& Ur, int min_steps,
                                       const RiemannConfig& rc) {
    const double q = std::pow(Ur.rho / L.rho, 1.0 / min_steps);
    auto curve = [&](double rho) {
        return rho <= Ur.rho ? Ur : shock_curve(Ur, WaveFamily::Family2, Anchor::RightGiven, rho);
    };
    auto ok = [&](const GasState& cur, double rho) {
        const double transient = 0.5 * (to_invariants(cur).w1 + to_invariants(curve(rho)).w2);
        return transient >= 0.25 * rho && transient > rc.rho_floor;
    };
    std::vector<GasState> z{L};
    while (!(z.back() == Ur)) {
        if (z.size() > 400) throw VacuumFormation("relocate_shock: depletion needs too many steps", z.back().rho);
        const GasState cur = z.back();
        double bad = std::max(Ur.rho, cur.rho * q), good = cur.rho;
        if (!ok(cur, bad)) {
            for (int it = 0; it < 80; ++it) {
                const double mid = std::sqrt(bad * good);
                (ok(cur, mid) ? good : bad) = mid;
            }
            bad = good;
        }
        if (!(bad < cur.rho)) throw VacuumFormation("relocate_shock: depletion step stalls", cur.rho);
        z.push_back(curve(bad));
    }
    return z;
}

SpeedPolicy relocation_fallback(double v, bool all_slow) {
    return SpeedPolicy::scheduled([v, all_slow](const Front& f, const SpeedContext& ctx) {
        if (f.family == WaveFamily::Family2) return f.kind == WaveKind::Shock ? v : 1.0;
        if (all_slow) return -v;
        for (const Front& in : ctx.incoming)
            if (in.family == WaveFamily::Family1 && in.speed == -v) return -v;
        return -1.0;
    });
}

}  // namespace

RelocationReport relocate_shock(const GasState& L, const GasState& Ur, double x_old, double x_new,
                                double t0, int fan_fronts, const SimConfig& base, Trace* trace) {
    if (!(x_new < x_old)) throw DomainError("relocate_shock: the shock must move left");
    if (fan_fronts < 2) throw DomainError("relocate_shock: the compression fan needs at least two fronts");
    const Front s2 = make_front(L, Ur, WaveFamily::Family2, true);
    if (s2.kind != WaveKind::Shock) throw DomainError("relocate_shock: L -> Ur is not a 2-shock");
    constexpr int kQ = 21, kK = 22, kR = 23, kQp = 24, kS2 = 25;
    const double v = 1e-5;
    const double g = x_old - x_new;
    const RiemannInvariants wl = to_invariants(L), wr = to_invariants(Ur);
    const double A = wl.w2 - wr.w2;
    const double b = A;
    RelocationReport rep;
    rep.x_old = x_old;
    rep.x_new = x_new;
    rep.t_begin = t0;
    rep.strength_old = s2.strength;
    rep.aux_A = A;
    rep.aux_b = b;

    SimState sim;
    sim.t = t0;
    sim.config = base;
    sim.config.mode = EngineMode::PaperBookkeeping;
    sim.config.delta_r = std::numeric_limits<double>::infinity();
    sim.config.zero_tol = 1e-11;
    sim.config.collapse_compressions = true;
    sim.leftmost_state = L;
    const std::vector<GasState> z = depletion_states(L, Ur, fan_fronts, sim.config.riemann());
    const int n = fan_fronts, m = static_cast<int>(z.size()) - 1;
    auto at = [](double w1, double w2) { return from_invariants({w1, w2}); };
    std::vector<Front> fs;
    GasState cur = L;
    auto push = [&](const GasState& next, WaveFamily fam, bool shock, double x, int tag) {
        fs.push_back(placed(cur, next, fam, shock, x, tag));
        cur = next;
    };
    // Q raises w1 by b so that the region between the fans keeps the density of L
    push(at(wl.w1 + b, wl.w2), WaveFamily::Family1, false, x_new - 0.4 * g, kQ);
    for (int j = 1; j <= n; ++j)
        push(j == n ? at(wl.w1 + b, wr.w2) : at(wl.w1 + b, wl.w2 - A * j / n), WaveFamily::Family2,
             false, x_new - 0.3 * g * (n - j) / n, kK);
    // the rightmost R fires first and carries the first depletion step
    const double h = 0.3 * g / std::max(1, m - 1);
    for (int j = 1; j <= m; ++j) {
        const double w2 = j == m ? wl.w2 : to_invariants(z[static_cast<std::size_t>(m - j)]).w2;
        push(at(wl.w1 + b, w2), WaveFamily::Family2, false,
             x_new + 0.2 * g + (m == 1 ? 0.0 : h * (j - 1)), kR);
    }
    push(L, WaveFamily::Family1, false, x_old - 0.25 * std::min(h, 0.3 * g), kQp);
    fs.push_back(placed(L, Ur, WaveFamily::Family2, true, x_old, kS2));
    for (const Front& f : fs)
        if (!(f.right.rho > sim.config.rho_floor))
            throw VacuumFormation("relocate_shock: auxiliary state below floor", f.right.rho);
    sim.fronts = fs;
    for (Front& f : sim.fronts) f.id = sim.next_id++;

    double rho_min = std::min(L.rho, Ur.rho);
    auto stage = [&](SimState s, double t_max, const char* what) {
        s.config.t_max = t_max;
        assign_speeds(s);
        RunResult r = run(std::move(s), {});
        if (r.termination != "no-events" && r.termination != "t_max")
            throw NonConvergence(std::string("relocate_shock: ") + what + " stopped (" + r.termination + ")");
        if (trace) trace->append(r);
        rep.events += r.events;
        for (const TVRecord& rec : r.series) rho_min = std::min(rho_min, rec.rho_min);
        return r.state;
    };

    // phase 1: each rarefaction crosses Q', depletes the old shock and its reflection merges back
    std::map<std::int64_t, double> table;
    std::int64_t kn = -1;
    for (const Front& f : sim.fronts) {
        if (f.tag == kQ || f.tag == kQp) table[f.id] = -v;
        else if (f.tag == kK || f.tag == kS2) table[f.id] = v;
        else table[f.id] = 1.0;
        if (f.tag == kK) kn = f.id;
    }
    sim.policy = SpeedPolicy::table(table, relocation_fallback(v, false));
    sim = stage(std::move(sim), t0 + 1.3 * g, "depletion");

    // phase 2: the compression fan steepens into the new shock
    table.clear();
    for (const Front& f : sim.fronts) {
        if (f.family == WaveFamily::Family1) table[f.id] = -v;
        else if (f.id == kn) table[f.id] = v;
        else if (f.tag == kK) table[f.id] = 1.0;
    }
    sim.policy = SpeedPolicy::table(table, relocation_fallback(v, true));
    sim = stage(std::move(sim), sim.t + 0.5 * g, "steepening");

    // phase 3: all 1-fronts run into Q and cancel it
    sim.config.collapse_compressions = false;
    table.clear();
    for (const Front& f : sim.fronts)
        if (f.family == WaveFamily::Family1) table[f.id] = f.tag == kQ ? -v : -1.0;
    sim.policy = SpeedPolicy::table(table, relocation_fallback(v, false));
    sim = stage(std::move(sim), std::numeric_limits<double>::infinity(), "cancellation");
    rep.rho_min = rho_min;

    rep.t_end = sim.t;
    const Front* shock = nullptr;
    for (const Front& f : sim.fronts)
        if (f.family == WaveFamily::Family2 && f.kind == WaveKind::Shock &&
            (!shock || std::abs(f.strength) > std::abs(shock->strength)))
            shock = &f;
    if (!shock) throw NonConvergence("relocate_shock: no 2-shock was rebuilt");
    rep.leftover_fronts = static_cast<std::int64_t>(sim.fronts.size()) - 1;
    rep.x_final = shock->position(sim.t);
    rep.strength_new = shock->strength;
    rep.strength_error = std::abs(shock->strength - s2.strength) / std::abs(s2.strength);
    rep.state_error = std::max(state_gap(shock->left, L), state_gap(shock->right, Ur));
    return rep;
}

void StageSchedule::validate() const {
    auto need = [](bool ok, const char* constraint, const std::string& detail) {
        if (!ok) throw ScheduleInfeasible(constraint, detail);
    };
    need(!stages.empty(), "stages >= 1", "the schedule has no stages");
    need(gain_target > 1.0, "gain_target > 1", "got " + std::to_string(gain_target));
    need(horizon > 0.0, "horizon > 0", "got " + std::to_string(horizon));
    need(!sizes.empty(), "pairs >= 1", "no pair sizes");
    for (double v : sizes) need(v > 0.0, "pair sizes > 0", "got " + std::to_string(v));
    double prev_len = std::numeric_limits<double>::infinity(), prev_end = 0.0;
    for (std::size_t i = 0; i < stages.size(); ++i) {
        const StageSpec& st = stages[i];
        const std::string at = "stage " + std::to_string(i + 1);
        const double len = st.t_end - st.t_begin;
        need(len > 0.0 && len < prev_len, "stage lengths strictly decreasing", at);
        need(st.t_begin >= prev_end - 1e-12 * horizon, "stages disjoint", at);
        need(st.gap > 0.0, "gap > 0", at);
        need(st.periods >= 1, "periods >= 1", at);
        need(st.fan_fronts >= 2, "fan_fronts >= 2", at);
        prev_len = len;
        prev_end = st.t_end;
    }
    need(prev_end <= horizon * (1.0 + 1e-12), "sum of stage lengths <= horizon",
         "stages end at " + std::to_string(prev_end));
}

StageSchedule make_schedule(int stages, double gain_target, double horizon, double rho_C,
                            double theta_mid, int pairs) {
    if (stages < 1) throw ScheduleInfeasible("stages >= 1", "got " + std::to_string(stages));
    if (pairs < 1) throw ScheduleInfeasible("pairs >= 1", "got " + std::to_string(pairs));
    StageSchedule sch;
    sch.gain_target = gain_target;
    sch.horizon = horizon;
    sch.rho_C = rho_C;
    sch.theta_mid = theta_mid;
    const Pattern3States st = example3_states(rho_C, theta_mid);
    const double g = amplifier_run(st, 1e-6 * rho_C, 2).gain;
    if (!(g > 1.0)) throw InfeasibleTarget("period gain > 1", "measured " + std::to_string(g));
    const int n = std::max(1, static_cast<int>(std::ceil(std::log(gain_target) / std::log(g))));
    double t = 0.0;
    for (int i = 1; i <= stages; ++i) {
        const double len = std::ldexp(horizon, -i);
        StageSpec s;
        s.t_begin = t;
        s.t_end = t + len;
        s.gap = len / (2.0 * n + 3.0);
        s.periods = n;
        sch.stages.push_back(s);
        t += len;
    }
    sch.sizes = default_pair_sizes(pairs);
    for (double& v : sch.sizes) v *= 1e-3 * rho_C;
    sch.validate();
    return sch;
}

namespace {

SimState train_only(const SimState& sim) {
    SimState t;
    t.t = sim.t;
    t.config = sim.config;
    t.policy = SpeedPolicy::constant_pair(1.0);
    t.next_id = sim.next_id;
    for (const Front& f : sim.fronts)
        if (f.tag >= kTagSmall) t.fronts.push_back(f);
    if (!t.fronts.empty()) t.leftmost_state = t.fronts.front().left;
    return t;
}

TransformSummary summarize_transform(const SimState& in, const SimState& out) {
    TransformSummary s;
    s.pairs_in = static_cast<std::int64_t>(in.fronts.size() / 2);
    s.fronts_out = static_cast<std::int64_t>(out.fronts.size());
    std::set<std::string> fams;
    for (const Front& f : in.fronts) s.signed_in += own_dw(f);
    for (const Front& f : out.fronts) {
        fams.insert(to_string(f.family));
        s.signed_out += own_dw(f);
        s.size_out += std::max(0.0, own_dw(f));
    }
    for (const std::string& f : fams) s.family_out += (s.family_out.empty() ? "" : ",") + f;
    return s;
}

}  // namespace

FiniteTimeReport finite_time_run(const StageSchedule& schedule, const SimConfig& base,
                                 const TraceOptions& topt) {
    schedule.validate();
    const auto clock = std::chrono::steady_clock::now();
    FiniteTimeReport rep;
    rep.schedule = schedule;
    rep.note = "each stage restarts from the period-start pattern at the new gap; the pair "
               "transform is applied to a copy of the train";
    const Pattern3States st = example3_states(schedule.rho_C, schedule.theta_mid);
    std::vector<double> sizes = schedule.sizes;
    rep.rho_min = std::numeric_limits<double>::infinity();
    double elapsed = 0.0;
    for (std::size_t i = 0; i < schedule.stages.size(); ++i) {
        const StageSpec& spec = schedule.stages[i];
        StageReport sr;
        sr.stage = static_cast<int>(i) + 1;
        sr.t_begin = elapsed;
        sr.j_length = spec.t_end - spec.t_begin;
        sr.gap = spec.gap;
        PatternLayout lay;
        lay.gap = spec.gap;
        SimState sim = pattern_state(st, lay, base);
        insert_pair_train(sim, sizes, pattern_site(lay), 0.1 * lay.gap);
        sr.tv_before = small_tv(sim);
        if (i == 0) rep.tv_initial = sr.tv_before;
        for (int k = 0; k < spec.periods; ++k) {
            const RunResult r = run_period(std::move(sim), topt.record_paths, nullptr);
            rep.trace.append(r, elapsed);
            for (const TVRecord& rec : r.series) rep.rho_min = std::min(rep.rho_min, rec.rho_min);
            sim = r.state;
        }
        sr.tv_after = small_tv(sim);
        sr.gain = sr.tv_after / sr.tv_before;
        sr.residual = pattern_residual(sim, st);
        sizes = pair_sizes(sim);

        const SimState train = train_only(sim);
        const TransformMode mode = i + 1 == schedule.stages.size() ? TransformMode::SingleLargePair
                                                                     : TransformMode::SameCount;
        sr.transform = summarize_transform(train, pairs_transform(train, mode));

        double x_old = 0.0;
        for (const Front& f : sim.fronts)
            if (f.tag == kTagS2) x_old = f.position(sim.t);
        Trace reloc;
        sr.relocation = relocate_shock(st.A1, st.Ur, x_old, 0.5 * spec.gap, sim.t, spec.fan_fronts,
                                       base, &reloc);
        rep.trace.append(RunResult{{}, reloc.series, {}, reloc.paths, reloc.events, "relocation"}, elapsed);
        rep.rho_min = std::min(rep.rho_min, sr.relocation.rho_min);
        rep.max_strength_error = std::max(rep.max_strength_error, sr.relocation.strength_error);
        elapsed += sr.relocation.t_end;
        sr.t_end = elapsed;
        rep.stages.push_back(sr);
    }
    rep.tv_final = rep.stages.back().tv_after;
    rep.growth = rep.tv_final / rep.tv_initial;
    rep.elapsed = elapsed;
    rep.trace.termination = "stages";
    rep.wall_seconds = seconds_since(clock);
    return rep;
}

// ---- exponent arithmetic ----

ExponentConditions exponent_check(double alpha, double beta) {
    ExponentConditions c;
    c.r1 = 2.0 * alpha / 3.0 < 1.0;
    c.r2 = 2.0 * alpha - beta - 1.0 > 0.0;
    c.r3 = 0.0 < alpha / 3.0 && alpha / 3.0 < beta && beta < alpha && alpha < 1.0;
    c.r4 = beta <= 0.0;
    return c;
}

ExponentGridReport exponent_grid(double step) {
    if (!(step > 0.0) || !(step < 0.5)) throw DomainError("exponent_grid: step must lie in (0, 0.5)");
    const std::int64_t n = std::llround(1.0 / step);
    if (std::abs(n * step - 1.0) > 1e-12) throw DomainError("exponent_grid: step must be 1/n");
    ExponentGridReport rep;
    rep.step = step;
    // alpha = i/n, beta = j/n; each condition is evaluated exactly on the lattice
    for (std::int64_t i = 1; i < n; ++i) {
        for (std::int64_t j = 1; j < n; ++j) {
            ExponentConditions c;
            c.r1 = 2 * i < 3 * n;
            c.r2 = 2 * i - j - n > 0;
            c.r3 = 0 < i && i < 3 * j && j < i && i < n;
            c.r4 = j <= 0;
            ++rep.points;
            rep.count_r1 += c.r1;
            rep.count_r2 += c.r2;
            rep.count_r3 += c.r3;
            rep.count_r4 += c.r4;
            rep.all_true += c.all();
            rep.r1_r2_r3 += c.r1 && c.r2 && c.r3;
        }
    }
    return rep;
}

}  // namespace psys
