#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "stakemkt/intermediary.hpp"
#include "stakemkt/market.hpp"
#include "stakemkt/panel.hpp"

namespace stakemkt {

inline constexpr const char* kVersion = "0.1.0";

// Built-in market profiles. The baseline profile carries the calibrated
// parameter set the comparisons in the docs are run with.
MarketConfig baseline_market();
// Baseline with the solo class pricing MEV variance into its decision.
MarketConfig mev_variance_market();
// MEV-variance profile with the retail class split into fee-sensitive
// institutions and a fixed inattentive block.
MarketConfig inattentive_market();
IntermediaryConfig default_intermediary();

// Observed staking distribution used as the calibration target
// (solo / liquid-staking / centralized shares; renormalized downstream).
std::vector<std::pair<std::string, double>> reference_shares();

struct SweepSettings {
    std::uint64_t draws = 10000;
    std::uint64_t seed = 1;
    int bins = 20;
    int threads = 0;  // 0 = OpenMP default
};

struct DynamicsSettings {
    double initial_supply = 120e6;
    int horizon = 20;
};

struct CalibrateSettings {
    int cells = 20;
    int draws_per_cell = 33;  // 1 = single-solve cells, >1 = median distance
    std::uint64_t seed = 1;
    double lo_scale = 0.5, hi_scale = 2.0;  // around the configured coefficients
    std::string class_a = "techie", class_b = "retailer";
    std::vector<std::pair<std::string, double>> reference = reference_shares();
};

struct RunConfig {
    MarketConfig market = baseline_market();
    IntermediaryConfig intermediary = default_intermediary();
    SweepSettings sweep;
    DynamicsSettings dynamics;
    CalibrateSettings calibrate;
    std::optional<ModelSpec> model;  // [regress] section
};

// Key-value config file: [section] headers, key = value pairs, '#' comments.
// Validation failures name section.key and the offending line.
RunConfig load_run_config(std::istream& in, const std::string& origin = "<stream>");
RunConfig load_run_config_file(const std::string& path);

}  // namespace stakemkt
