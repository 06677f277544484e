#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include <json.hpp>

#include "stakemkt/dynamics.hpp"
#include "stakemkt/equilibrium.hpp"
#include "stakemkt/intermediary.hpp"
#include "stakemkt/regression.hpp"
#include "stakemkt/sweep.hpp"

namespace stakemkt {

// Recorded verbatim into every output for reproducibility.
struct RunManifest {
    std::string command;
    std::string config_path;  // "builtin" when no file was given
    std::string schedule_a, schedule_b;
    std::uint64_t seed = 0;
    std::string out_path;  // "-" for stdout
    std::string version;

    nlohmann::json to_json() const;
    // "# key: value" comment block for CSV and table outputs.
    void write_comment_block(std::ostream& os) const;
};

// %.*g formatting helpers; all human-readable numbers go through these so
// output is byte-stable across runs and platforms.
std::string fmt_full(double v);  // 12 significant digits (CSV)
std::string fmt_table(double v);  // 6 significant digits (tables)
std::string fmt_pct(double v);    // "12.3%" with one decimal

nlohmann::json to_json(const ClassOutcome& out);
nlohmann::json to_json(const Equilibrium& eq);
nlohmann::json to_json(const ComparisonReport& report);
nlohmann::json to_json(const RegressionResult& result);
nlohmann::json to_json(const EstimationReport& report);
nlohmann::json to_json(const FeeSearchResult& result);
nlohmann::json to_json(const IntermediaryReport& report);
nlohmann::json to_json(const Trajectory& traj);

// CSV row format shared by single-schedule and comparison reports:
// type,num,deps,ratio,profit[,deps_b,ratio_b,profit_b,delta_deps,delta_profit]
void write_equilibrium_csv(std::ostream& os, const Equilibrium& eq, const MarketConfig& config);
void write_comparison_csv(std::ostream& os, const ComparisonReport& report,
                          const MarketConfig& config);
void write_trajectory_csv(std::ostream& os, const Trajectory& traj);
void write_surface_csv(std::ostream& os, const CalibrationSurface& surf);
void write_trend_csv(std::ostream& os, const BinnedTrend& trend);

// Fixed-width text tables (the human-facing --format table output).
std::string render_table(const Equilibrium& eq, const MarketConfig& config);
std::string render_table(const ComparisonReport& report, const MarketConfig& config);
std::string render_table(const EstimationReport& report);

}  // namespace stakemkt
