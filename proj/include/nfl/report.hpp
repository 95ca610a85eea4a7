#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "nfl/backreach.hpp"
#include "nfl/oracle.hpp"

namespace nfl {

// Everything a run writes: the analysis result, verdict, sampled truth and
// per-step conservativeness errors, plus enough configuration to replay or
// audit the run later. Reports are self-describing (config, seeds, version).
struct RunReport {
    nlohmann::json config;
    std::string version;
    std::string algorithm;  // breach | rebreach | forward
    double wall_clock_s = 0.0;
    long lp_solves = 0;
    long backreach_lp_solves = 0;
    HyperRectangle target;
    HyperRectangle init;
    std::optional<BackreachResult> backward;
    std::optional<ForwardReachResult> forward;
    std::optional<TrueBpEstimate> truth;
    std::vector<std::optional<double>> errors;  // per step, when defined
    SafetyVerdict verdict;
};

nlohmann::json report_to_json(const RunReport& report);
void write_report(const RunReport& report, const std::string& path);

// Flat set dump for external plotting:
// step, kind in {target, bp, bp-refined, forward, truth-hull, init}, rect
// index, then lo and hi per dimension.
void write_csv(const RunReport& report, const std::string& path);

// Minimal view needed to re-audit a stored report.
struct LoadedReport {
    nlohmann::json config;
    std::string algorithm;
    HyperRectangle target;
    BackreachResult backward;  // bp_sets only (hulls reconstructed)
};
LoadedReport load_report(const std::string& path);

}  // namespace nfl
