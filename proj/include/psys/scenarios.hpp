#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "psys/tracking.hpp"

namespace psys {

inline constexpr double kNoLimit = std::numeric_limits<double>::infinity();

// ---- flat key=value parameters ----

/// Parameter set read from "key = value" lines; '#' starts a comment.
class ParamMap {
public:
    static ParamMap parse(const std::string& text);
    static ParamMap load(const std::string& path);

    void set(const std::string& key, const std::string& value) { values_[key] = value; }
    bool has(const std::string& key) const { return values_.count(key) != 0; }
    double get(const std::string& key, double fallback) const;
    std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
    std::string get_str(const std::string& key, const std::string& fallback) const;
    const std::map<std::string, std::string>& values() const { return values_; }

private:
    std::map<std::string, std::string> values_;
};

/// Engine settings from the keys delta_r, rho_floor, t_max, tv_max, max_events, mode.
SimConfig config_from(const ParamMap& p, SimConfig defaults);

/// Series, snapshots and paths gathered over one or more engine runs.
struct Trace {
    TVSeries series;
    std::vector<Snapshot> snapshots;
    std::vector<FrontPath> paths;
    std::int64_t events = 0;
    std::string termination;

    /// Appends a run's records, shifting its times by `t_offset`.
    void append(const RunResult& r, double t_offset = 0.0);
};

struct TraceOptions {
    bool record_paths = false;
    std::vector<double> snapshot_times;
};

// ---- Example 1: a unit 1-shock crossing an oscillating 2-train near vacuum ----

struct Example1Params {
    double alpha = 0.9;
    double beta = 0.8;
    double x_min = 1e-3;
    double x0 = 0.1;
    double delta_r = 1e-3;
    double c = 1.0;
    double shock_pos = 1.0;
    /// Reject exponents outside 0 < alpha/3 < beta < alpha < 1.
    bool enforce_window = true;

    void validate() const;
};

double example1_w2(double x, double alpha, double beta);

/// Total variation of w2 on [a, b] by adaptive sampling of the oscillations.
double example1_tv_quadrature(double alpha, double beta, double a, double b);

SimState example1_build(const Example1Params& p, const SimConfig& base = {});

struct CrossingSample {
    double t = 0.0;
    double x = 0.0;
    double rho_minus = 0.0;  // left density of the shock before the crossing
    double eps_in = 0.0;     // dw2 of the incoming 2-front
    double eps_out = 0.0;    // dw2 of the transmitted 2-front
    double factor = 0.0;     // |eps_out / eps_in|
    double bound = 0.0;      // rho_minus^(-2/3)
};

struct Example1Report {
    Example1Params params;
    std::vector<CrossingSample> crossings;
    double tv_w2_initial = 0.0;
    double tv_w2_final = 0.0;
    double t_final = 0.0;
    std::int64_t fronts_initial = 0;
    /// Crossings with rho_minus <= 1e-2 whose factor is below rho_minus^(-2/3).
    std::int64_t bound_violations = 0;
    std::int64_t near_vacuum_crossings = 0;
    /// Smallest factor / (3^(-2/3) rho_minus^(-2/3)) over near-vacuum crossings.
    double min_asymptotic_ratio = 0.0;
    double wall_seconds = 0.0;
    Trace trace;
};

Example1Report example1_run(const Example1Params& p, const SimConfig& base = {},
                            const TraceOptions& topt = {});

// ---- Example 2: the same amplification at uniformly positive density ----

struct Example2Params {
    double target_gain = 10.0;
    double alpha = 0.9;
    double beta = 0.8;
    double x0 = 0.1;
    double a1 = 0.2;  // 1-rarefaction fan that empties w1 in the train region
    double a2 = 0.2;  // 2-rarefaction fan that keeps the gap ahead of the shock away from vacuum
    double delta_r = 5e-3;
    double c = 1.0;
    double rho_target = 1.0;
    double rho_margin = 1.025;
    double x_min_start = 1e-2;
    double x_min_guard = 1e-8;
};

struct Example2Build {
    SimState sim;
    double x_min = 0.0;
    double b = 0.0;      // strength of the trailing 1-compression fan
    double rho0 = 0.0;   // minimum initial density
    std::int64_t train_fronts = 0;
};

/// Builds the data for a given cutoff; b is found from a dry run without the compression.
Example2Build example2_build_at(const Example2Params& p, double x_min, const SimConfig& base = {});

/// Lowers x_min by decades until the run reaches target_gain; InfeasibleTarget below the guard.
Example2Build example2_build(const Example2Params& p, const SimConfig& base = {});

struct Example2Report {
    Example2Params params;
    double x_min = 0.0;
    double b = 0.0;
    double rho0 = 0.0;
    double tv_initial = 0.0;
    double tv_final = 0.0;
    double tv_rho_initial = 0.0;
    double tv_rho_final = 0.0;
    double gain = 0.0;
    double t3 = 0.0;
    double interval_lo = 0.0, interval_hi = 0.0;  // designated interval at t3
    double rho_min_interval = 0.0;
    double rho_max = 0.0;
    /// Weighted-TV gains for the weights 1, rho, 1/rho and exp(-rho), in that order.
    std::vector<double> weighted_gains;
    double wall_seconds = 0.0;
    Trace trace;
};

/// Runs a build to completion and evaluates the positive-density claims.
Example2Report example2_evaluate(const Example2Params& p, const Example2Build& b,
                                 const TraceOptions& topt = {});

Example2Report example2_run(const Example2Params& p, const SimConfig& base = {},
                            const TraceOptions& topt = {});

// ---- Example 3: the periodic four-front pattern ----

struct Pattern3States {
    GasState Ul, A2, C, A1, Ur, B1, B2, D;
};

Pattern3States example3_states(double rho_C, double theta_mid, const RiemannConfig& cfg = {});

/// Density drop across the middle shocks relative to the density of A1.
double pattern_s(const Pattern3States& st);

/// Deviation of a state set from the mirror, square and left-state relations.
double pattern_defect(const Pattern3States& st);

enum PatternTag : int { kTagS1 = 1, kTagS2 = 2, kTagMid = 3, kTagSmall = 10 };

struct PatternLayout {
    double x_s1 = 0.0;
    double gap = 2.0;
    double big_speed = 1e-5;   // |speed| of the large shocks
    double small_speed = 1.0;  // |speed| of every other front
};

/// The t1 configuration: S1, the approaching middle shocks and S2.
SimState pattern_state(const Pattern3States& st, const PatternLayout& lay, const SimConfig& cfg);

/// Scheduled policy: large shocks crawl, all other fronts move at the small speed.
SpeedPolicy pattern_policy(const PatternLayout& lay);

/// Position where small fronts are injected (inside region C at the start of a period).
double pattern_site(const PatternLayout& lay);

struct PeriodRecord {
    int period = 0;
    double t = 0.0;
    double residual = 0.0;
    double small_tv = 0.0;
    std::int64_t small_fronts = 0;
    std::int64_t trims = 0;
};

/// Relative mismatch of the four pattern fronts against the t1 configuration.
double pattern_residual(const SimState& sim, const Pattern3States& st);

struct PeriodicReport {
    double rho_C = 0.0, theta_mid = 0.0, s = 0.0;
    Pattern3States states;
    std::vector<PeriodRecord> periods;
    double max_residual = 0.0;
    /// States between the four fronts midway through the first period (t3), left to right.
    std::vector<GasState> t3_states;
    std::vector<std::string> t3_kinds;
    double wall_seconds = 0.0;
    Trace trace;
};

PeriodicReport periodic_run(const Pattern3States& st, int n_periods, const PatternLayout& lay = {},
                            const SimConfig& base = {}, const TraceOptions& topt = {});

struct ItineraryStep {
    int period = 0;
    double t = 0.0;
    std::string step;
    double before = 0.0;  // signed own-invariant jump of the small front
    double after = 0.0;
};

struct AmplifierReport {
    double s = 0.0;
    double eps0 = 0.0;
    std::vector<double> strengths;  // |strength| of the small front at each period start
    std::vector<double> gains;
    double gain = 0.0;              // geometric mean over periods
    double predicted = 0.0;         // 1 + s^3/3
    double band_lo = 0.0, band_hi = 0.0;
    std::vector<ItineraryStep> itinerary;
    double wall_seconds = 0.0;
    Trace trace;
};

AmplifierReport amplifier_run(const Pattern3States& st, double eps0, int n_periods,
                              const PatternLayout& lay = {}, const SimConfig& base = {},
                              const TraceOptions& topt = {});

/// Sizes 2^-k / 2 for k = 1..n, normalized to sum to one.
std::vector<double> default_pair_sizes(int n);

/// Adds 1-rarefaction + 1-compression pairs of the given sizes around x inside region C.
void insert_pair_train(SimState& sim, const std::vector<double>& sizes, double x, double width,
                       int first_tag = kTagSmall);

struct PairTrainReport {
    double s = 0.0;
    std::int64_t pairs = 0;
    double eps_cancel = 0.0;
    double tv_initial = 0.0;
    double tv_final = 0.0;
    double growth = 0.0;
    int periods_run = 0;
    std::vector<PeriodRecord> periods;
    double max_residual = 0.0;
    std::vector<double> final_sizes;
    double wall_seconds = 0.0;
    Trace trace;
};

PairTrainReport pair_train_run(const Pattern3States& st, const std::vector<double>& sizes,
                               double eps_cancel, int n_periods, double small_tv_max = kNoLimit,
                               const PatternLayout& lay = {}, const SimConfig& base = {},
                               const TraceOptions& topt = {});

// ---- finite-time schedule ----

enum class TransformMode { SameCount, SingleLargePair };

std::string to_string(TransformMode m);

/// Converts a train of compression+rarefaction pairs into opposite-family fronts by letting
/// each compression collapse to a shock that then cancels its rarefaction.
SimState pairs_transform(const SimState& sim, TransformMode mode);

struct StageSpec {
    double t_begin = 0.0, t_end = 0.0;  // the interval J_i
    double gap = 0.0;                   // distance between the large shocks
    int periods = 1;                    // pair-train periods in the stage
    int fan_fronts = 8;                 // fronts per fan in the shock relocation
};

struct StageSchedule {
    std::vector<StageSpec> stages;
    double gain_target = 2.0;
    double horizon = 1.0;
    double rho_C = 1e4;
    double theta_mid = 10.0;
    std::vector<double> sizes;

    void validate() const;
};

/// Geometric schedule: J_i halves from stage to stage and the stages fill at most the horizon.
StageSchedule make_schedule(int stages, double gain_target, double horizon, double rho_C = 1e4,
                            double theta_mid = 10.0, int pairs = 16);

struct RelocationReport {
    double x_old = 0.0, x_new = 0.0, x_final = 0.0;
    double t_begin = 0.0, t_end = 0.0;
    double strength_old = 0.0, strength_new = 0.0;
    double strength_error = 0.0;  // relative
    double state_error = 0.0;     // relative mismatch of (U_l, U_r) across the new shock
    double rho_min = 0.0;
    double aux_b = 0.0, aux_A = 0.0;
    std::int64_t leftover_fronts = 0;
    std::int64_t events = 0;
};

/// Depletes a 2-shock L -> U_r at x_old with impinging 2-rarefactions and rebuilds it at x_new
/// from a 2-compression fan; auxiliary 1-fronts keep the density positive and cancel out.
RelocationReport relocate_shock(const GasState& L, const GasState& Ur, double x_old, double x_new,
                                double t0, int fan_fronts, const SimConfig& base,
                                Trace* trace = nullptr);

struct TransformSummary {
    std::int64_t pairs_in = 0;
    std::int64_t fronts_out = 0;
    std::string family_out;
    double signed_in = 0.0, signed_out = 0.0;
    double size_out = 0.0;
};

struct StageReport {
    int stage = 0;
    double t_begin = 0.0, t_end = 0.0, j_length = 0.0;
    double gap = 0.0;
    double tv_before = 0.0, tv_after = 0.0, gain = 0.0;
    double residual = 0.0;
    TransformSummary transform;
    RelocationReport relocation;
};

struct FiniteTimeReport {
    StageSchedule schedule;
    std::vector<StageReport> stages;
    double tv_initial = 0.0, tv_final = 0.0, growth = 0.0;
    double elapsed = 0.0;
    double rho_min = 0.0;
    double max_strength_error = 0.0;
    bool spliced = true;
    std::string note;
    double wall_seconds = 0.0;
    Trace trace;
};

FiniteTimeReport finite_time_run(const StageSchedule& schedule, const SimConfig& base = {},
                                 const TraceOptions& topt = {});

// ---- exponent arithmetic ----

struct ExponentConditions {
    bool r1 = false;  // 2 alpha / 3 < 1
    bool r2 = false;  // 2 alpha - beta - 1 > 0
    bool r3 = false;  // 0 < alpha/3 < beta < alpha < 1
    bool r4 = false;  // beta <= 0
    bool all() const { return r1 && r2 && r3 && r4; }
};

ExponentConditions exponent_check(double alpha, double beta);

struct ExponentGridReport {
    double step = 0.01;
    std::int64_t points = 0;
    std::int64_t count_r1 = 0, count_r2 = 0, count_r3 = 0, count_r4 = 0;
    std::int64_t all_true = 0;
    std::int64_t r1_r2_r3 = 0;
};

/// Scans alpha, beta over the open unit square on the lattice of multiples of step = 1/n.
ExponentGridReport exponent_grid(double step = 0.01);

}  // namespace psys
