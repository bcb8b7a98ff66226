#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "psys/interaction.hpp"
#include "psys/scenarios.hpp"

namespace psys {

using json = nlohmann::ordered_json;

/// Shortest decimal text that reads back to the same double ("inf", "-inf", "nan" otherwise).
std::string format_double(double v);

void to_json(json& j, const GasState& s);
void to_json(json& j, const WaveDescriptor& w);
void to_json(json& j, const RiemannSolution& r);
void to_json(json& j, const Front& f);
void to_json(json& j, const Snapshot& s);
void to_json(json& j, const SimConfig& c);
void to_json(json& j, const Pattern3States& st);
void to_json(json& j, const PeriodRecord& r);
void to_json(json& j, const RelocationReport& r);
void to_json(json& j, const TransformSummary& t);
void to_json(json& j, const StageReport& s);
void to_json(json& j, const StageSchedule& s);
void to_json(json& j, const ExponentConditions& c);
void to_json(json& j, const ExponentGridReport& g);

// Report bodies leave out wall time and the trace so reruns serialize identically.
json report_json(const Example1Report& r);
json report_json(const Example2Report& r);
json report_json(const PeriodicReport& r);
json report_json(const AmplifierReport& r);
json report_json(const PairTrainReport& r);
json report_json(const FiniteTimeReport& r);

/// Non-finite doubles become the strings "inf", "-inf" or "nan".
json number(double v);

std::string tv_csv(const TVSeries& series);
json snapshots_json(const std::vector<Snapshot>& snaps);

struct SvgOptions {
    int width = 900;
    int height = 600;
    std::string title;
    /// Written as a comment when non-empty.
    std::string timestamp;
};

/// t-x diagram: x horizontal, t upward; one polyline per front path.
std::string svg_diagram(const std::vector<FrontPath>& paths, const SvgOptions& opt);

void write_text(const std::string& path, const std::string& text);

}  // namespace psys
