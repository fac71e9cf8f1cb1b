#pragma once

#include "rse/analysis.hpp"
#include "rse/controller.hpp"
#include "rse/network.hpp"
#include "rse/sim.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace rse::io {

using json = nlohmann::json;

/// Row-major nested arrays. An empty array (or rows of empty arrays) gives a
/// matrix with `rows_hint` rows and no columns; a bare number c gives c * I
/// of size `rows_hint`.
Mat matrix_from_json(const json& j, const std::string& field, Eigen::Index rows_hint = -1);
Vec vector_from_json(const json& j, const std::string& field);
json to_json(const Mat& m);
json to_json(const Vec& v);

json read_json_file(const std::filesystem::path& path);

/// Unified signal id from "a2" / "s1" (one-based) or a zero-based integer.
int parse_signal(const json& j, int t_a, int signal_count, const std::string& field);

PlantTopology topology_from_json(const json& j);
json topology_to_json(const PlantTopology& t);

/// Modes from the topology document's "attack" block: either {"p", optional
/// limits} for enumeration or {"supports": [...]} for an explicit list.
ModeSet modes_from_json(const json& j, const PlantTopology& t, std::vector<std::string>* warnings);

/// Mode references in documents are one-based numbers or labels.
int parse_mode_ref(const json& j, const ModeSet& modes, const std::string& field);

Scenario scenario_from_json(const json& j, const ModeSet& modes, int t_a, const Scenario* defaults = nullptr);
SignalProfile profile_from_json(const json& j, const std::string& field);

/// CSV with columns from,to,susceptance (one-based bus numbers). A header row
/// and lines starting with '#' are skipped.
std::vector<Line> read_edge_list(std::istream& in);
std::vector<Line> read_edge_list(const std::filesystem::path& path);

PowerNetwork network_from_json(const json& j, const std::filesystem::path& base_dir);
std::vector<PowerAttackMode> power_attacks_from_json(const json& j, const PowerNetwork& net);

EstimatorConfig estimator_from_json(const json& j, const ModeSet& modes);

struct ControllerSettings {
    ControllerDesign design;
    Vec x_ref;
};
ControllerSettings controller_from_json(const json& j, int n, int m);

inline constexpr const char* kTraceSchema = "# rse-trace v1";

/// Header row of the trace CSV for the given dimensions.
std::vector<std::string> trace_columns(int n, int m, int l, int signal_count, int modes);

/// Mode indices are written one-based.
void write_trace_csv(std::ostream& out, const Trace& trace, const ModeSet& modes);

json verdict_to_json(const DetectabilityVerdict& v);
json bound_to_json(const BoundReport& r);
json resilience_to_json(const ResilienceReport& r, const ModeSet& modes);
json report_to_json(const DetectionReport& r, const ModeSet& modes);
json gains_to_json(const ControllerGains& g);
json plan_to_json(const UnidentifiablePlan& p, const ModeSet& modes);

/// Final probabilities, detection report and error statistics.
json summary_json(const Trace& trace, const ModeSet& modes, int settle_steps = 0);

}  // namespace rse::io
