#pragma once

#include <string>
#include <vector>

#include "stakemkt/equilibrium.hpp"
#include "stakemkt/market.hpp"

namespace stakemkt {

struct TrajectoryPoint {
    int year = 0;
    std::vector<double> levels;     // per class, ETH
    double total_level = 0.0;
    double supply = 0.0;            // circulating ETH
    std::vector<double> ratios;     // level / supply
    std::vector<double> level_pct;  // cumulative change vs year 0, NaN when level_0 == 0
    std::vector<double> ratio_pct;
};

struct Trajectory {
    std::vector<std::string> labels;
    double initial_supply = 0.0;
    std::vector<TrajectoryPoint> points;  // year 0 .. horizon
};

// Reinvestment projection: every class rolls its annual cash profit
// (revenues minus fees and costs) back into its stake without re-optimizing,
// supply grows by consensus issuance y(D)*D only (MEV and DeFi yields are
// transfers, not new ETH), and negative profits draw the stake down, floored
// at zero.
Trajectory project(const Equilibrium& eq, const MarketConfig& config, double initial_supply,
                   int horizon_years);

}  // namespace stakemkt
