#include "psys/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace psys {

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

json number(double v) {
    if (std::isfinite(v)) return v;
    return format_double(v);
}

void to_json(json& j, const GasState& s) { j = json{{"u", number(s.u)}, {"rho", number(s.rho)}}; }

void to_json(json& j, const WaveDescriptor& w) {
    j = json{{"family", to_string(w.family)},
             {"kind", to_string(w.kind)},
             {"left", w.left},
             {"right", w.right},
             {"strength", number(w.strength)},
             {"speed", number(w.speed_exact)}};
}

void to_json(json& j, const RiemannSolution& r) {
    j = json{{"middle", r.middle}, {"wave1", r.wave1}, {"wave2", r.wave2}};
}

void to_json(json& j, const Front& f) {
    j = json{{"id", f.id},
             {"family", f.family == WaveFamily::Family1 ? 1 : 2},
             {"kind", to_string(f.kind)},
             {"x", number(f.x)},
             {"speed", number(f.speed)},
             {"strength", number(f.strength)},
             {"left", f.left},
             {"right", f.right}};
}

void to_json(json& j, const Snapshot& s) {
    j = json{{"t", number(s.t)}, {"fronts", s.fronts}};
}

void to_json(json& j, const SimConfig& c) {
    j = json{{"delta_r", number(c.delta_r)},
             {"rho_floor", number(c.rho_floor)},
             {"t_max", number(c.t_max)},
             {"tv_max", number(c.tv_max)},
             {"max_events", c.max_events},
             {"eps_cancel", number(c.eps_cancel)},
             {"mode", c.mode == EngineMode::RiemannExact ? "exact" : "paper"},
             {"zero_tol", number(c.zero_tol)},
             {"record_stride", c.record_stride},
             {"collapse_compressions", c.collapse_compressions},
             {"audit", c.audit}};
}

void to_json(json& j, const Pattern3States& st) {
    j = json{{"Ul", st.Ul}, {"A2", st.A2}, {"C", st.C}, {"A1", st.A1},
             {"Ur", st.Ur}, {"B1", st.B1}, {"B2", st.B2}, {"D", st.D}};
}

void to_json(json& j, const PeriodRecord& r) {
    j = json{{"period", r.period},         {"t", number(r.t)},
             {"residual", number(r.residual)}, {"small_tv", number(r.small_tv)},
             {"small_fronts", r.small_fronts}, {"trims", r.trims}};
}

void to_json(json& j, const RelocationReport& r) {
    j = json{{"x_old", number(r.x_old)},
             {"x_new", number(r.x_new)},
             {"x_final", number(r.x_final)},
             {"t_begin", number(r.t_begin)},
             {"t_end", number(r.t_end)},
             {"strength_old", number(r.strength_old)},
             {"strength_new", number(r.strength_new)},
             {"strength_error", number(r.strength_error)},
             {"state_error", number(r.state_error)},
             {"rho_min", number(r.rho_min)},
             {"aux_b", number(r.aux_b)},
             {"aux_A", number(r.aux_A)},
             {"leftover_fronts", r.leftover_fronts},
             {"events", r.events}};
}

void to_json(json& j, const TransformSummary& t) {
    j = json{{"pairs_in", t.pairs_in},       {"fronts_out", t.fronts_out},
             {"family_out", t.family_out},   {"signed_in", number(t.signed_in)},
             {"signed_out", number(t.signed_out)}, {"size_out", number(t.size_out)}};
}

void to_json(json& j, const StageReport& s) {
    j = json{{"stage", s.stage},
             {"t_begin", number(s.t_begin)},
             {"t_end", number(s.t_end)},
             {"j_length", number(s.j_length)},
             {"gap", number(s.gap)},
             {"tv_before", number(s.tv_before)},
             {"tv_after", number(s.tv_after)},
             {"gain", number(s.gain)},
             {"residual", number(s.residual)},
             {"transform", s.transform},
             {"relocation", s.relocation}};
}

void to_json(json& j, const StageSchedule& s) {
    json stages = json::array();
    for (const StageSpec& st : s.stages)
        stages.push_back({{"t_begin", number(st.t_begin)},
                          {"t_end", number(st.t_end)},
                          {"gap", number(st.gap)},
                          {"periods", st.periods},
                          {"fan_fronts", st.fan_fronts}});
    json sizes = json::array();
    for (double v : s.sizes) sizes.push_back(number(v));
    j = json{{"gain_target", number(s.gain_target)},
             {"horizon", number(s.horizon)},
             {"rho_C", number(s.rho_C)},
             {"theta_mid", number(s.theta_mid)},
             {"stages", stages},
             {"sizes", sizes}};
}

void to_json(json& j, const ExponentConditions& c) {
    j = json{{"r1", c.r1}, {"r2", c.r2}, {"r3", c.r3}, {"r4", c.r4}, {"all", c.all()}};
}

void to_json(json& j, const ExponentGridReport& g) {
    j = json{{"step", number(g.step)},       {"points", g.points},
             {"count_r1", g.count_r1},       {"count_r2", g.count_r2},
             {"count_r3", g.count_r3},       {"count_r4", g.count_r4},
             {"r1_r2_r3", g.r1_r2_r3},       {"all_true", g.all_true}};
}

namespace {

json numbers(const std::vector<double>& v) {
    json a = json::array();
    for (double x : v) a.push_back(number(x));
    return a;
}

json trace_summary(const Trace& t) {
    return json{{"events", t.events},
                {"termination", t.termination},
                {"tv_records", t.series.size()},
                {"snapshots", t.snapshots.size()}};
}

}  // namespace

json report_json(const Example1Report& r) {
    const Example1Params& p = r.params;
    json cr = json::array();
    for (const CrossingSample& c : r.crossings)
        cr.push_back({{"t", number(c.t)},
                      {"x", number(c.x)},
                      {"rho_minus", number(c.rho_minus)},
                      {"eps_in", number(c.eps_in)},
                      {"eps_out", number(c.eps_out)},
                      {"factor", number(c.factor)},
                      {"bound", number(c.bound)}});
    return json{{"params",
                 {{"alpha", number(p.alpha)},
                  {"beta", number(p.beta)},
                  {"x_min", number(p.x_min)},
                  {"x0", number(p.x0)},
                  {"delta_r", number(p.delta_r)},
                  {"c", number(p.c)},
                  {"shock_pos", number(p.shock_pos)},
                  {"enforce_window", p.enforce_window}}},
                {"tv_w2_initial", number(r.tv_w2_initial)},
                {"tv_w2_final", number(r.tv_w2_final)},
                {"t_final", number(r.t_final)},
                {"fronts_initial", r.fronts_initial},
                {"near_vacuum_crossings", r.near_vacuum_crossings},
                {"bound_violations", r.bound_violations},
                {"min_asymptotic_ratio", number(r.min_asymptotic_ratio)},
                {"trace", trace_summary(r.trace)},
                {"crossings", cr}};
}

json report_json(const Example2Report& r) {
    const Example2Params& p = r.params;
    return json{{"params",
                 {{"target_gain", number(p.target_gain)},
                  {"alpha", number(p.alpha)},
                  {"beta", number(p.beta)},
                  {"x0", number(p.x0)},
                  {"a1", number(p.a1)},
                  {"a2", number(p.a2)},
                  {"delta_r", number(p.delta_r)},
                  {"c", number(p.c)},
                  {"rho_target", number(p.rho_target)},
                  {"rho_margin", number(p.rho_margin)},
                  {"x_min_start", number(p.x_min_start)},
                  {"x_min_guard", number(p.x_min_guard)}}},
                {"x_min", number(r.x_min)},
                {"b", number(r.b)},
                {"rho0", number(r.rho0)},
                {"tv_initial", number(r.tv_initial)},
                {"tv_final", number(r.tv_final)},
                {"gain", number(r.gain)},
                {"tv_rho_initial", number(r.tv_rho_initial)},
                {"tv_rho_final", number(r.tv_rho_final)},
                {"t3", number(r.t3)},
                {"interval", {number(r.interval_lo), number(r.interval_hi)}},
                {"rho_min_interval", number(r.rho_min_interval)},
                {"rho_max", number(r.rho_max)},
                {"weighted_gains", numbers(r.weighted_gains)},
                {"trace", trace_summary(r.trace)}};
}

json report_json(const PeriodicReport& r) {
    return json{{"rho_C", number(r.rho_C)},
                {"theta_mid", number(r.theta_mid)},
                {"s", number(r.s)},
                {"states", r.states},
                {"max_residual", number(r.max_residual)},
                {"t3_states", r.t3_states},
                {"t3_kinds", r.t3_kinds},
                {"periods", r.periods},
                {"trace", trace_summary(r.trace)}};
}

json report_json(const AmplifierReport& r) {
    json it = json::array();
    for (const ItineraryStep& s : r.itinerary)
        it.push_back({{"period", s.period},
                      {"t", number(s.t)},
                      {"step", s.step},
                      {"before", number(s.before)},
                      {"after", number(s.after)}});
    return json{{"s", number(r.s)},
                {"eps0", number(r.eps0)},
                {"gain", number(r.gain)},
                {"predicted", number(r.predicted)},
                {"band", {number(r.band_lo), number(r.band_hi)}},
                {"strengths", numbers(r.strengths)},
                {"gains", numbers(r.gains)},
                {"itinerary", it},
                {"trace", trace_summary(r.trace)}};
}

json report_json(const PairTrainReport& r) {
    return json{{"s", number(r.s)},
                {"pairs", r.pairs},
                {"eps_cancel", number(r.eps_cancel)},
                {"tv_initial", number(r.tv_initial)},
                {"tv_final", number(r.tv_final)},
                {"growth", number(r.growth)},
                {"periods_run", r.periods_run},
                {"max_residual", number(r.max_residual)},
                {"final_sizes", numbers(r.final_sizes)},
                {"periods", r.periods},
                {"trace", trace_summary(r.trace)}};
}

json report_json(const FiniteTimeReport& r) {
    return json{{"schedule", r.schedule},
                {"tv_initial", number(r.tv_initial)},
                {"tv_final", number(r.tv_final)},
                {"growth", number(r.growth)},
                {"elapsed", number(r.elapsed)},
                {"rho_min", number(r.rho_min)},
                {"max_strength_error", number(r.max_strength_error)},
                {"spliced", r.spliced},
                {"note", r.note},
                {"stages", r.stages},
                {"trace", trace_summary(r.trace)}};
}

std::string tv_csv(const TVSeries& series) {
    std::string out = "t,tv_w1,tv_w2,fronts,rho_min,event\n";
    for (const TVRecord& r : series) {
        out += format_double(r.t);
        out += ',';
        out += format_double(r.tv_w1);
        out += ',';
        out += format_double(r.tv_w2);
        out += ',';
        out += std::to_string(r.fronts);
        out += ',';
        out += format_double(r.rho_min);
        out += ',';
        out += std::to_string(r.event);
        out += '\n';
    }
    return out;
}

json snapshots_json(const std::vector<Snapshot>& snaps) { return json(snaps); }

std::string svg_diagram(const std::vector<FrontPath>& paths, const SvgOptions& opt) {
    double xlo = std::numeric_limits<double>::infinity(), xhi = -xlo;
    double tlo = xlo, thi = -xlo;
    for (const FrontPath& p : paths) {
        xlo = std::min({xlo, p.x0, p.x1});
        xhi = std::max({xhi, p.x0, p.x1});
        tlo = std::min({tlo, p.t0, p.t1});
        thi = std::max({thi, p.t0, p.t1});
    }
    if (paths.empty()) xlo = tlo = 0.0, xhi = thi = 1.0;
    if (!(xhi > xlo)) xhi = xlo + 1.0;
    if (!(thi > tlo)) thi = tlo + 1.0;
    const double margin = 40.0;
    const double W = opt.width, H = opt.height;
    auto px = [&](double x) { return margin + (x - xlo) / (xhi - xlo) * (W - 2 * margin); };
    auto py = [&](double t) { return H - margin - (t - tlo) / (thi - tlo) * (H - 2 * margin); };

    std::ostringstream s;
    s.precision(6);
    s << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    if (!opt.timestamp.empty()) s << "<!-- generated " << opt.timestamp << " -->\n";
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << opt.width << "\" height=\""
      << opt.height << "\" viewBox=\"0 0 " << opt.width << ' ' << opt.height << "\">\n";
    s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    if (!opt.title.empty())
        s << "<text x=\"" << margin << "\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\">"
          << opt.title << "</text>\n";
    s << "<line x1=\"" << margin << "\" y1=\"" << H - margin << "\" x2=\"" << W - margin
      << "\" y2=\"" << H - margin << "\" stroke=\"black\"/>\n";
    s << "<line x1=\"" << margin << "\" y1=\"" << H - margin << "\" x2=\"" << margin
      << "\" y2=\"" << margin << "\" stroke=\"black\"/>\n";
    s << "<text x=\"" << W - margin << "\" y=\"" << H - 12 << "\" font-size=\"12\">x</text>\n";
    s << "<text x=\"12\" y=\"" << margin << "\" font-size=\"12\">t</text>\n";
    for (const FrontPath& p : paths) {
        const char* color = p.family == WaveFamily::Family1 ? "#1f5fbf" : "#c0392b";
        const char* dash = p.kind == WaveKind::Shock         ? ""
                           : p.kind == WaveKind::Rarefaction ? " stroke-dasharray=\"6 3\""
                                                             : " stroke-dasharray=\"1 3\"";
        const double width = p.kind == WaveKind::Shock ? 1.5 : 0.8;
        s << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"" << width << '"'
          << dash << " points=\"" << px(p.x0) << ',' << py(p.t0) << ' ' << px(p.x1) << ','
          << py(p.t1) << "\"/>\n";
    }
    s << "</svg>\n";
    return s.str();
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DomainError("cannot write " + path);
    f << text;
    if (!f) throw DomainError("write failed: " + path);
}

}  // namespace psys
