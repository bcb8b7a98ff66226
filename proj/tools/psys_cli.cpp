// psys: Riemann queries, interaction estimates and scenario runs with data-file output.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "psys/interaction.hpp"
#include "psys/report.hpp"
#include "psys/scenarios.hpp"

namespace fs = std::filesystem;
using namespace psys;

namespace {

enum Exit : int { kOk = 0, kUsage = 1, kDomain = 2, kVacuum = 3, kNonConvergence = 4, kInfeasible = 5 };

const std::vector<std::string> kScenarios = {"example1",        "example2",   "example3-periodic",
                                             "example3-amplify", "pair-train", "blowup",
                                             "exponent-check"};

/// Parameter lookups that remember every resolved value, defaults included.
class Params {
public:
    explicit Params(ParamMap in) : in_(std::move(in)) {}

    double num(const std::string& k, double d) {
        const double v = in_.get(k, d);
        used_[k] = format_double(v);
        return v;
    }
    int integer(const std::string& k, std::int64_t d) {
        const std::int64_t v = in_.get_int(k, d);
        if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max())
            throw DomainError("param " + k + ": out of range");
        used_[k] = std::to_string(v);
        return static_cast<int>(v);
    }
    std::int64_t big(const std::string& k, std::int64_t d) {
        const std::int64_t v = in_.get_int(k, d);
        used_[k] = std::to_string(v);
        return v;
    }
    bool flag(const std::string& k, bool d) {
        const std::string s = in_.get_str(k, d ? "1" : "0");
        bool v;
        if (s == "1" || s == "true") v = true;
        else if (s == "0" || s == "false") v = false;
        else throw DomainError("param " + k + ": expected 0/1/true/false, got " + s);
        used_[k] = v ? "1" : "0";
        return v;
    }
    std::string str(const std::string& k, const std::string& d) {
        const std::string v = in_.get_str(k, d);
        used_[k] = v;
        return v;
    }
    std::vector<double> list(const std::string& k, const std::string& d) {
        const std::string s = in_.get_str(k, d);
        std::vector<double> out;
        std::stringstream ss(s);
        std::string item;
        ParamMap one;
        while (std::getline(ss, item, ',')) {
            one.set("v", item.find_first_not_of(' ') == std::string::npos ? item : item.substr(item.find_first_not_of(' ')));
            out.push_back(one.get("v", 0.0));
        }
        used_[k] = s;
        return out;
    }

    /// Engine keys shared by every scenario; delta_r is read by the scenario itself.
    SimConfig engine() {
        SimConfig c;
        c.rho_floor = num("rho_floor", c.rho_floor);
        c.t_max = num("t_max", c.t_max);
        c.tv_max = num("tv_max", c.tv_max);
        c.max_events = big("max_events", c.max_events);
        c.audit = flag("audit", c.audit);
        const std::string m = str("mode", "paper");
        if (m == "exact") c.mode = EngineMode::RiemannExact;
        else if (m == "paper") c.mode = EngineMode::PaperBookkeeping;
        else throw DomainError("param mode: expected exact or paper, got " + m);
        if (!(c.rho_floor > 0.0) || !(c.t_max > 0.0) || !(c.tv_max > 0.0) || c.max_events <= 0)
            throw DomainError("engine settings must be positive");
        return c;
    }

    const std::map<std::string, std::string>& used() const { return used_; }
    std::vector<std::string> unused() const {
        std::vector<std::string> out;
        for (const auto& [k, v] : in_.values())
            if (!used_.count(k)) out.push_back(k);
        return out;
    }

private:
    ParamMap in_;
    std::map<std::string, std::string> used_;
};

struct Outcome {
    json report;
    json summary;
    Trace trace;
    double wall = 0.0;
};

Outcome run_example1(Params& P, const SimConfig& base, const TraceOptions& topt) {
    Example1Params p;
    p.alpha = P.num("alpha", p.alpha);
    p.beta = P.num("beta", p.beta);
    p.x_min = P.num("x_min", p.x_min);
    p.x0 = P.num("x0", p.x0);
    p.delta_r = P.num("delta_r", p.delta_r);
    p.c = P.num("c", p.c);
    p.shock_pos = P.num("shock_pos", p.shock_pos);
    p.enforce_window = P.flag("enforce_window", p.enforce_window);
    Example1Report r = example1_run(p, base, topt);
    Outcome o;
    o.report = report_json(r);
    o.summary = {{"tv_w2_initial", number(r.tv_w2_initial)},
                 {"tv_w2_final", number(r.tv_w2_final)},
                 {"crossings", r.crossings.size()},
                 {"near_vacuum_crossings", r.near_vacuum_crossings},
                 {"bound_violations", r.bound_violations},
                 {"min_asymptotic_ratio", number(r.min_asymptotic_ratio)}};
    o.wall = r.wall_seconds;
    o.trace = std::move(r.trace);
    return o;
}

Outcome run_example2(Params& P, const SimConfig& base, const TraceOptions& topt) {
    Example2Params p;
    p.target_gain = P.num("target_gain", p.target_gain);
    p.alpha = P.num("alpha", p.alpha);
    p.beta = P.num("beta", p.beta);
    p.x0 = P.num("x0", p.x0);
    p.a1 = P.num("a1", p.a1);
    p.a2 = P.num("a2", p.a2);
    p.delta_r = P.num("delta_r", p.delta_r);
    p.c = P.num("c", p.c);
    p.rho_target = P.num("rho_target", p.rho_target);
    p.rho_margin = P.num("rho_margin", p.rho_margin);
    p.x_min_start = P.num("x_min_start", p.x_min_start);
    p.x_min_guard = P.num("x_min_guard", p.x_min_guard);
    Example2Report r = example2_run(p, base, topt);
    Outcome o;
    o.report = report_json(r);
    o.summary = {{"x_min", number(r.x_min)},       {"rho0", number(r.rho0)},
                 {"tv_initial", number(r.tv_initial)}, {"tv_final", number(r.tv_final)},
                 {"gain", number(r.gain)},         {"rho_min_interval", number(r.rho_min_interval)}};
    o.wall = r.wall_seconds;
    o.trace = std::move(r.trace);
    return o;
}

Pattern3States pattern_from(Params& P, double rho_C, double theta) {
    return example3_states(P.num("rho_C", rho_C), P.num("theta_mid", theta));
}

Outcome run_periodic(Params& P, const SimConfig& base, const TraceOptions& topt) {
    const Pattern3States st = pattern_from(P, 1.0, 1.3);
    PatternLayout lay;
    lay.gap = P.num("gap", lay.gap);
    PeriodicReport r = periodic_run(st, P.integer("periods", 5), lay, base, topt);
    Outcome o;
    o.report = report_json(r);
    o.summary = {{"s", number(r.s)},
                 {"periods", static_cast<int>(r.periods.size()) - 1},
                 {"max_residual", number(r.max_residual)},
                 {"defect", number(pattern_defect(st))}};
    o.wall = r.wall_seconds;
    o.trace = std::move(r.trace);
    return o;
}

Outcome run_amplify(Params& P, const SimConfig& base, const TraceOptions& topt) {
    const Pattern3States st = pattern_from(P, 1.0, 1.25);
    PatternLayout lay;
    lay.gap = P.num("gap", lay.gap);
    const double eps0 = P.num("eps0", 1e-6) * st.C.rho;
    AmplifierReport r = amplifier_run(st, eps0, P.integer("periods", 3), lay, base, topt);
    Outcome o;
    o.report = report_json(r);
    o.summary = {{"s", number(r.s)},
                 {"gain", number(r.gain)},
                 {"predicted", number(r.predicted)},
                 {"band_lo", number(r.band_lo)},
                 {"band_hi", number(r.band_hi)},
                 {"exact_factor_product", number(period_gain(r.s))}};
    o.wall = r.wall_seconds;
    o.trace = std::move(r.trace);
    return o;
}

Outcome run_pair_train(Params& P, const SimConfig& base, const TraceOptions& topt) {
    const Pattern3States st = pattern_from(P, 1e6, 1.0 / 0.7);
    PatternLayout lay;
    lay.gap = P.num("gap", lay.gap);
    const double rc = st.C.rho;
    std::vector<double> sizes = default_pair_sizes(P.integer("pairs", 16));
    const double total = P.num("size_total", 1e-6) * rc;
    for (double& v : sizes) v *= total;
    const double eps_cancel = P.num("eps_cancel", 1e-4) * rc;
    const double target = P.num("growth_target", 10.0);
    const AmplifierReport amp = amplifier_run(st, 1e-6 * rc, 2, lay, base);
    if (!(amp.gain > 1.0))
        throw InfeasibleTarget("per-period gain > 1", "measured gain " + format_double(amp.gain));
    const int predicted = static_cast<int>(std::ceil(std::log(target) / std::log(amp.gain)));
    int periods = P.integer("periods", 0);
    if (periods <= 0) periods = predicted;
    const double base_res = periodic_run(st, P.integer("free_periods", 5), lay, base).max_residual;
    PairTrainReport r = pair_train_run(st, sizes, eps_cancel, periods, kNoLimit, lay, base, topt);
    Outcome o;
    o.report = report_json(r);
    o.report["lambda"] = number(amp.gain);
    o.report["predicted_periods"] = predicted;
    o.report["free_residual"] = number(base_res);
    o.summary = {{"s", number(r.s)},
                 {"lambda", number(amp.gain)},
                 {"predicted_periods", predicted},
                 {"periods_run", r.periods_run},
                 {"growth", number(r.growth)},
                 {"max_residual", number(r.max_residual)},
                 {"free_residual", number(base_res)}};
    o.wall = r.wall_seconds;
    o.trace = std::move(r.trace);
    return o;
}

Outcome run_blowup(Params& P, const SimConfig& base, const TraceOptions& topt) {
    StageSchedule sch = make_schedule(P.integer("stages", 3), P.num("gain_target", 2.0),
                                      P.num("horizon", 1.0), P.num("rho_C", 1e4),
                                      P.num("theta_mid", 10.0), P.integer("pairs", 16));
    const int fan = P.integer("fan_fronts", 8);
    for (StageSpec& s : sch.stages) s.fan_fronts = fan;
    FiniteTimeReport r = finite_time_run(sch, base, topt);
    Outcome o;
    o.report = report_json(r);
    o.summary = {{"stages", r.stages.size()},
                 {"growth", number(r.growth)},
                 {"elapsed", number(r.elapsed)},
                 {"horizon", number(sch.horizon)},
                 {"rho_min", number(r.rho_min)},
                 {"max_strength_error", number(r.max_strength_error)}};
    o.wall = r.wall_seconds;
    o.trace = std::move(r.trace);
    return o;
}

Outcome run_exponents(Params& P, const SimConfig&, const TraceOptions&) {
    const auto t0 = std::chrono::steady_clock::now();
    const ExponentGridReport g = exponent_grid(P.num("step", 0.01));
    const double a = P.num("alpha", 0.9), b = P.num("beta", 0.8);
    Outcome o;
    o.report = {{"grid", g}, {"point", {{"alpha", number(a)}, {"beta", number(b)}}},
                {"conditions", exponent_check(a, b)}};
    o.summary = {{"points", g.points},     {"r1", g.count_r1}, {"r2", g.count_r2},
                 {"r3", g.count_r3},       {"r4", g.count_r4}, {"r1_r2_r3", g.r1_r2_r3},
                 {"all_true", g.all_true}};
    o.trace.termination = "grid";
    o.wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return o;
}

Outcome dispatch(const std::string& name, Params& P, const SimConfig& base, const TraceOptions& t) {
    if (name == "example1") return run_example1(P, base, t);
    if (name == "example2") return run_example2(P, base, t);
    if (name == "example3-periodic") return run_periodic(P, base, t);
    if (name == "example3-amplify") return run_amplify(P, base, t);
    if (name == "pair-train") return run_pair_train(P, base, t);
    if (name == "blowup") return run_blowup(P, base, t);
    if (name == "exponent-check") return run_exponents(P, base, t);
    throw CLI::ValidationError("scenario", "unknown scenario " + name);
}

std::string utc_now() {
    const std::time_t now = std::time(nullptr);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    return buf;
}

std::string params_text(const std::map<std::string, std::string>& used) {
    std::string s;
    for (const auto& [k, v] : used) s += k + " = " + v + "\n";
    return s;
}

void print_table(std::ostream& os, const std::string& title, const json& summary) {
    os << title << "\n";
    for (const auto& [k, v] : summary.items()) {
        std::string val = v.is_string() ? v.get<std::string>() : v.dump();
        if (v.is_number_float()) val = format_double(v.get<double>());
        os << "  " << std::left << std::setw(24) << k << val << "\n";
    }
}

struct ScenarioRequest {
    std::string name;
    ParamMap params;
    std::string out = "";
    bool timestamp = true;
    bool paths = true;
};

std::mutex print_mutex;

void run_scenario(const ScenarioRequest& req) {
    Params P(req.params);
    const SimConfig base = P.engine();
    TraceOptions topt;
    topt.record_paths = P.flag("paths", req.paths);
    if (req.name == "example1") {
        const double T = P.num("shock_pos", 1.0) / (2.0 * P.num("c", 1.0));
        const int n = P.integer("snapshots", 5);
        for (int k = 0; k < n; ++k) topt.snapshot_times.push_back(n == 1 ? 0.0 : T * k / (n - 1));
    } else if (req.name == "example2") {
        topt.snapshot_times = P.list("snapshot_times", "0,0.25,0.5,1,2");
    }
    Outcome o = dispatch(req.name, P, base, topt);

    const std::string out = req.out.empty() ? "out/" + req.name : req.out;
    fs::create_directories(out);
    const json files = {{"params", "params.txt"},
                        {"report", "report.json"},
                        {"tv", "tv.csv"},
                        {"snapshots", "snapshots.json"},
                        {"diagram", "diagram.svg"}};
    write_text(out + "/params.txt", params_text(P.used()));
    write_text(out + "/report.json", o.report.dump(1) + "\n");
    write_text(out + "/tv.csv", tv_csv(o.trace.series));
    write_text(out + "/snapshots.json", snapshots_json(o.trace.snapshots).dump() + "\n");
    SvgOptions so;
    so.title = req.name + " (t-x)";
    if (req.timestamp) so.timestamp = utc_now();
    write_text(out + "/diagram.svg", svg_diagram(o.trace.paths, so));

    json params = json::object();
    for (const auto& [k, v] : P.used()) params[k] = v;
    SimConfig effective = base;
    if (req.name != "exponent-check") effective.mode = EngineMode::PaperBookkeeping;
    const json manifest = {{"tool", "psys"},
                           {"scenario", req.name},
                           {"params", params},
                           {"config", effective},
                           {"engine_mode", effective.mode == EngineMode::RiemannExact ? "exact" : "paper"},
                           {"outputs", files},
                           {"rerun", "psys scenario " + req.name + " --params " + out +
                                         "/params.txt --out <dir>"},
                           {"summary", o.summary},
                           {"events", o.trace.events},
                           {"termination", o.trace.termination},
                           {"wall_seconds", o.wall}};
    write_text(out + "/manifest.json", manifest.dump(1) + "\n");

    std::lock_guard lock(print_mutex);
    for (const std::string& k : P.unused()) std::cerr << "warning: unused parameter " << k << "\n";
    print_table(std::cout, req.name + " -> " + out + "/manifest.json", o.summary);
}

int report_error(const std::exception& e) {
    std::lock_guard lock(print_mutex);
    if (auto* v = dynamic_cast<const VacuumFormation*>(&e)) {
        std::cerr << "vacuum: " << v->what() << "\nrho_limit = " << format_double(v->rho_limit()) << "\n";
        return kVacuum;
    }
    if (auto* s = dynamic_cast<const ScheduleInfeasible*>(&e)) {
        std::cerr << "infeasible: violated constraint '" << s->constraint() << "': " << s->what() << "\n";
        return kInfeasible;
    }
    if (dynamic_cast<const NonConvergence*>(&e)) {
        std::cerr << "non-convergence: " << e.what() << "\n";
        return kNonConvergence;
    }
    if (auto* h = dynamic_cast<const HypothesisViolation*>(&e)) {
        std::cerr << "hypothesis violated: " << h->what() << " (margin " << format_double(h->margin()) << ")\n";
        return kDomain;
    }
    std::cerr << "error: " << e.what() << "\n";
    return kDomain;
}

ParamMap manifest_params(const std::string& path, std::string* scenario) {
    std::ifstream f(path);
    if (!f) throw DomainError("cannot read manifest " + path);
    const json m = json::parse(f);
    *scenario = m.at("scenario").get<std::string>();
    ParamMap p;
    for (const auto& [k, v] : m.at("params").items()) p.set(k, v.get<std::string>());
    return p;
}

void print_riemann(const RiemannSolution& s) {
    auto wave = [](const char* name, const WaveDescriptor& w) {
        std::cout << name << ": " << to_string(w.kind) << "  strength " << format_double(w.strength)
                  << "  speed " << format_double(w.speed_exact) << "\n";
    };
    std::cout << "middle: u " << format_double(s.middle.u) << "  rho " << format_double(s.middle.rho) << "\n";
    wave("wave1", s.wave1);
    wave("wave2", s.wave2);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"p-system front tracking: Riemann queries, interaction estimates, scenarios"};
    app.require_subcommand(1);

    double rho_floor = 1e-9;
    auto* riem = app.add_subcommand("riemann", "solve a Riemann problem for p = rho^3/3");
    double ul = 0, rl = 1, ur = 0, rr = 1;
    riem->add_option("--ul", ul, "left velocity")->required();
    riem->add_option("--rhol", rl, "left density")->required();
    riem->add_option("--ur", ur, "right velocity")->required();
    riem->add_option("--rhor", rr, "right density")->required();
    riem->add_option("--rho-floor", rho_floor, "vacuum guard");
    bool riem_json = false;
    riem->add_flag("--json", riem_json, "print the solution as JSON");

    auto* inter = app.add_subcommand("interact", "small 2-wave crossing a 1-shock");
    double sigma1 = 0, s_drop = 0, rho_minus = 1, epsilon = 0;
    auto* o_sig = inter->add_option("--sigma1", sigma1, "1-shock strength (own-invariant jump)");
    auto* o_s = inter->add_option("--s", s_drop, "1-shock velocity drop (alternative to --sigma1)");
    o_sig->excludes(o_s);
    inter->add_option("--rho-minus", rho_minus, "density left of the shock")->required();
    inter->add_option("--epsilon", epsilon, "density shift of the small wave");

    auto* scen = app.add_subcommand("scenario", "run a named scenario and write data files");
    std::string name, params_file, out_dir, manifest_file, mode;
    double delta_r = 0, t_max = 0, tv_max = 0, sc_floor = 0;
    std::int64_t max_events = 0;
    bool no_ts = false;
    int jobs = 1;
    std::vector<std::string> sets;
    std::string sweep;
    scen->add_option("name", name, "scenario")->check(CLI::IsMember(kScenarios));
    scen->add_option("--params", params_file, "flat key = value parameter file");
    scen->add_option("--manifest", manifest_file, "rerun the scenario and parameters of a manifest");
    scen->add_option("--out", out_dir, "output directory (default out/<scenario>)");
    scen->add_option("--mode", mode, "engine mode")->check(CLI::IsMember({"exact", "paper"}));
    scen->add_option("--delta-r", delta_r, "rarefaction splitting size");
    scen->add_option("--rho-floor", sc_floor, "vacuum guard");
    scen->add_option("--t-max", t_max, "time limit");
    scen->add_option("--tv-max", tv_max, "total-variation limit");
    scen->add_option("--max-events", max_events, "event limit");
    scen->add_option("--set", sets, "extra key=value parameter (repeatable)");
    scen->add_option("--sweep", sweep, "KEY=V1,V2,... runs one job per value into <out>/KEY-V");
    scen->add_option("--jobs", jobs, "parallel workers for --sweep")->check(CLI::PositiveNumber);
    scen->add_flag("--no-timestamp", no_ts, "omit the timestamp comment from the SVG");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kUsage;
    }

    try {
        if (riem->parsed()) {
            RiemannConfig cfg;
            cfg.rho_floor = rho_floor;
            const RiemannSolution s = solve_riemann({ul, rl}, {ur, rr}, cfg);
            if (riem_json) std::cout << json(s).dump(1) << "\n";
            else print_riemann(s);
            return kOk;
        }
        if (inter->parsed()) {
            if (o_s->count() > 0) sigma1 = shock_strength_from_drop(s_drop, rho_minus);
            if (!(sigma1 > 0.0)) throw DomainError("interact: give --sigma1 > 0 or --s > 0");
            const double s = shock_velocity_drop(sigma1, rho_minus);
            const CrossingResult c = cross_shock_exact(sigma1, rho_minus, epsilon);
            const AmplificationEstimate d = eta_prime_exact(sigma1, rho_minus);
            json j = {{"sigma1", number(sigma1)},
                      {"rho_minus", number(rho_minus)},
                      {"s", number(s)},
                      {"theta", number(shock_theta(sigma1, rho_minus))},
                      {"epsilon", number(epsilon)},
                      {"eta", number(c.eta)},
                      {"eta_over_eps", number(c.amplification)},
                      {"eta_prime_exact", number(d.closed_form)},
                      {"eta_prime_fd", number(d.finite_difference)},
                      {"predict_small_shock", number(eta_prime_small_shock(s, rho_minus))},
                      {"predict_near_vacuum", number(eta_prime_near_vacuum(sigma1, rho_minus))},
                      {"bound_rho_minus_pow", number(std::pow(rho_minus, -2.0 / 3.0))}};
            print_table(std::cout, "crossing", j);
            return kOk;
        }

        ScenarioRequest req;
        ParamMap pm;
        if (!manifest_file.empty()) {
            std::string from;
            pm = manifest_params(manifest_file, &from);
            if (!name.empty() && name != from)
                throw CLI::ValidationError("--manifest", "manifest is for " + from + ", not " + name);
            name = from;
        }
        if (name.empty()) {
            std::cerr << "scenario: a name or --manifest is required\n" << scen->help();
            return kUsage;
        }
        if (!params_file.empty())
            for (const auto& [k, v] : ParamMap::load(params_file).values()) pm.set(k, v);
        for (const std::string& kv : sets) {
            const auto eq = kv.find('=');
            if (eq == std::string::npos) throw CLI::ValidationError("--set", "expected key=value: " + kv);
            pm.set(kv.substr(0, eq), kv.substr(eq + 1));
        }
        auto flag = [&](const char* opt, const char* key, const std::string& v) {
            if (scen->count(opt) > 0) pm.set(key, v);
        };
        flag("--mode", "mode", mode);
        flag("--delta-r", "delta_r", format_double(delta_r));
        flag("--rho-floor", "rho_floor", format_double(sc_floor));
        flag("--t-max", "t_max", format_double(t_max));
        flag("--tv-max", "tv_max", format_double(tv_max));
        flag("--max-events", "max_events", std::to_string(max_events));
        req.name = name;
        req.params = pm;
        req.out = out_dir;
        req.timestamp = !no_ts;

        if (sweep.empty()) {
            run_scenario(req);
            return kOk;
        }
        const auto eq = sweep.find('=');
        if (eq == std::string::npos) throw CLI::ValidationError("--sweep", "expected KEY=V1,V2,...");
        const std::string key = sweep.substr(0, eq);
        std::vector<std::string> values;
        std::stringstream ss(sweep.substr(eq + 1));
        for (std::string v; std::getline(ss, v, ',');) values.push_back(v);
        const std::string root = out_dir.empty() ? "out/" + name : out_dir;
        std::vector<int> codes(values.size(), kOk);
        std::atomic<std::size_t> next{0};
        auto worker = [&] {
            for (std::size_t i; (i = next++) < values.size();) {
                ScenarioRequest r = req;
                r.params.set(key, values[i]);
                r.out = root + "/" + key + "-" + values[i];
                try {
                    run_scenario(r);
                } catch (const std::exception& e) {
                    codes[i] = report_error(e);
                }
            }
        };
        std::vector<std::thread> pool;
        for (int k = 0; k < std::min<int>(jobs, static_cast<int>(values.size())); ++k) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
        return *std::max_element(codes.begin(), codes.end());
    } catch (const CLI::Error& e) {
        std::cerr << e.what() << "\n";
        return kUsage;
    } catch (const std::exception& e) {
        return report_error(e);
    }
}
