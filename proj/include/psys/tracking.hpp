#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "psys/riemann.hpp"

namespace psys {

enum class EngineMode { RiemannExact, PaperBookkeeping };

std::string to_string(EngineMode m);

/// A moving jump. Position is x + speed * (t - t_ref).
struct Front {
    std::int64_t id = 0;
    WaveFamily family = WaveFamily::Family1;
    WaveKind kind = WaveKind::Rarefaction;
    double x = 0.0;
    double t_ref = 0.0;
    double speed = 0.0;
    GasState left;
    GasState right;
    double strength = 0.0;  // own-invariant jump magnitude; negative for compressions
    int tag = 0;            // scenario label, inherited by same-family outgoing fronts

    double position(double t) const { return x + speed * (t - t_ref); }
    double dw1() const { return to_invariants(right).w1 - to_invariants(left).w1; }
    double dw2() const { return to_invariants(right).w2 - to_invariants(left).w2; }
};

/// Builds a front of the given family between two states; kind and signed strength follow
/// the orientation, with compressive jumps classified as shocks when `shock` is true.
Front make_front(const GasState& left, const GasState& right, WaveFamily family, bool shock);

struct SimState;

struct SpeedContext {
    double t = 0.0;
    double x = 0.0;
    std::span<const Front> incoming;
};

class SpeedPolicy {
public:
    enum class Kind { Exact, ConstantPair, Scheduled };
    using Rule = std::function<double(const Front&, const SpeedContext&)>;

    static SpeedPolicy exact();
    static SpeedPolicy constant_pair(double c);
    static SpeedPolicy scheduled(Rule rule);
    /// Scheduled policy from an id -> speed table, falling back to `fallback` for new fronts.
    static SpeedPolicy table(std::map<std::int64_t, double> speeds, SpeedPolicy fallback);

    Kind kind() const { return kind_; }
    double c() const { return c_; }
    /// Speed for a front; throws DomainError when the family sign is violated.
    double speed(const Front& f, const SpeedContext& ctx) const;

private:
    Kind kind_ = Kind::Exact;
    double c_ = 1.0;
    Rule rule_;
};

double exact_speed(const Front& f);

struct SimConfig {
    double delta_r = 1e-2;
    double rho_floor = 1e-9;
    double t_max = std::numeric_limits<double>::infinity();
    double tv_max = std::numeric_limits<double>::infinity();
    std::int64_t max_events = 50'000'000;
    double eps_cancel = 1e-2;
    EngineMode mode = EngineMode::RiemannExact;
    /// Outgoing fronts whose invariant jumps are below this (relative to the local states) vanish.
    double zero_tol = 1e-14;
    /// Record every n-th event in the TV series (the last event is always recorded).
    std::int64_t record_stride = 1;
    /// In PaperBookkeeping mode two colliding compressions of one family collapse into a shock;
    /// when false they add like rarefaction fronts.
    bool collapse_compressions = true;
    /// Check chaining, order, density and speed signs around every resolved event; a
    /// violation throws Error.
    bool audit = false;

    RiemannConfig riemann() const { return {rho_floor, 1e-12, 200}; }
};

struct SimState {
    double t = 0.0;
    std::vector<Front> fronts;
    GasState leftmost_state;
    SimConfig config;
    SpeedPolicy policy;
    std::int64_t next_id = 0;

    GasState rightmost_state() const { return fronts.empty() ? leftmost_state : fronts.back().right; }
};

struct Event {
    double t = 0.0;
    double x = 0.0;
    std::vector<std::int64_t> ids;  // participating fronts, left to right
};

struct TVRecord {
    double t = 0.0;
    double tv_w1 = 0.0;
    double tv_w2 = 0.0;
    std::int64_t fronts = 0;
    double rho_min = 0.0;
    std::int64_t event = 0;
};

using TVSeries = std::vector<TVRecord>;

struct Snapshot {
    double t = 0.0;
    std::vector<Front> fronts;  // positions evaluated at t
};

/// Information handed to run observers after each resolved event.
struct EventRecord {
    std::int64_t index = 0;
    double t = 0.0;
    double x = 0.0;
    std::vector<Front> incoming;
    std::vector<Front> outgoing;
};

class Engine;

struct RunOptions {
    std::vector<double> snapshot_times;
    /// Called after each event; returning false stops the run.
    std::function<bool(const EventRecord&, const Engine&)> observer;
    /// Track front paths for t-x diagrams (each front's birth and death points).
    bool record_paths = false;
};

struct FrontPath {
    std::int64_t id = 0;
    WaveFamily family = WaveFamily::Family1;
    WaveKind kind = WaveKind::Rarefaction;
    double t0 = 0.0, x0 = 0.0, t1 = 0.0, x1 = 0.0;
};

struct RunResult {
    SimState state;
    TVSeries series;
    std::vector<Snapshot> snapshots;
    std::vector<FrontPath> paths;
    std::int64_t events = 0;
    std::string termination;  // "no-events", "t_max", "tv_max", "max_events", "observer"
};

// ---- profile discretization ----

struct SmoothSegment {
    std::vector<double> x;
    std::vector<RiemannInvariants> w;
};

struct JumpItem {
    enum class Kind { Shock, RarefactionLine, Riemann };
    Kind kind = Kind::Shock;
    double x = 0.0;
    WaveFamily family = WaveFamily::Family1;
    GasState right;
    int tag = 0;
};

struct Profile {
    GasState left_state;
    /// Items in increasing x; a smooth segment starts from the current state's value.
    std::vector<std::pair<std::optional<SmoothSegment>, std::optional<JumpItem>>> items;

    void add_smooth(SmoothSegment s) { items.push_back({std::move(s), std::nullopt}); }
    void add_jump(JumpItem j) { items.push_back({std::nullopt, j}); }
};

SimState discretize_profile(const Profile& profile, const SimConfig& config,
                            const SpeedPolicy& policy, int smooth_tag = 0);

/// Appends fronts that split a jump along a rarefaction line into ceil(|dw|/delta_r) pieces.
std::vector<Front> split_line_jump(const GasState& left, const GasState& right,
                                   WaveFamily family, double delta_r);

// ---- engine operations ----

/// Re-assigns every front's speed from the state's policy at time sim.t.
void assign_speeds(SimState& sim);

std::optional<Event> next_event(const SimState& sim);

/// Outgoing fronts (speeds assigned, ids unset) for fronts meeting at one point.
std::vector<Front> interact(std::span<const Front> incoming, const SimConfig& config,
                            const SpeedPolicy& policy, double t, double x);

SimState resolve_event(SimState sim, const Event& event);

std::pair<double, double> total_variation(const SimState& sim);
double min_density(const SimState& sim);

/// Violations of the ordering, chaining, density and speed-sign invariants (empty if valid).
std::vector<std::string> check_invariants(const SimState& sim, double chain_tol = 0.0);

RunResult run(SimState sim, const RunOptions& options = {});

/// Incremental event loop used by run(); exposed read-only to observers.
class Engine {
public:
    explicit Engine(SimState sim);
    ~Engine();
    Engine(const Engine&) = delete;
    Engine& operator=(const Engine&) = delete;

    double time() const;
    std::size_t front_count() const;
    std::pair<double, double> tv() const;
    /// Fronts in order with positions at the current time.
    std::vector<Front> fronts() const;
    SimState state() const;

private:
    friend RunResult run(SimState sim, const RunOptions& options);
    struct Impl;
    Impl* impl_;
};

}  // namespace psys
