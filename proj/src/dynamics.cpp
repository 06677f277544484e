#include "stakemkt/dynamics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace stakemkt {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

TrajectoryPoint snapshot(int year, const std::vector<double>& levels, double supply,
                         const TrajectoryPoint* origin) {
    TrajectoryPoint pt;
    pt.year = year;
    pt.levels = levels;
    pt.supply = supply;
    pt.ratios.resize(levels.size());
    pt.level_pct.resize(levels.size());
    pt.ratio_pct.resize(levels.size());
    for (std::size_t i = 0; i < levels.size(); ++i) {
        pt.total_level += levels[i];
        pt.ratios[i] = levels[i] / supply;
        if (origin) {
            pt.level_pct[i] = (origin->levels[i] > 0.0)
                                  ? (levels[i] - origin->levels[i]) / origin->levels[i]
                                  : kNaN;
            pt.ratio_pct[i] = (origin->ratios[i] > 0.0)
                                  ? (pt.ratios[i] - origin->ratios[i]) / origin->ratios[i]
                                  : kNaN;
        }
    }
    return pt;
}

}  // namespace

Trajectory project(const Equilibrium& eq, const MarketConfig& config, double initial_supply,
                   int horizon_years) {
    if (horizon_years < 1) {
        throw std::invalid_argument("project: horizon must be at least one year");
    }
    if (!(initial_supply >= eq.total_stake)) {
        throw std::domain_error("project: initial_supply must cover the staked total");
    }
    if (eq.classes.size() != config.classes.size()) {
        throw std::invalid_argument("project: equilibrium does not match the config");
    }

    Trajectory traj;
    traj.initial_supply = initial_supply;
    std::vector<double> levels(eq.classes.size());
    for (std::size_t i = 0; i < eq.classes.size(); ++i) {
        traj.labels.push_back(eq.classes[i].label);
        levels[i] = eq.classes[i].total;
    }

    double supply = initial_supply;
    traj.points.reserve(static_cast<std::size_t>(horizon_years) + 1);
    traj.points.push_back(snapshot(0, levels, supply, nullptr));
    const TrajectoryPoint origin = traj.points.front();

    for (int year = 1; year <= horizon_years; ++year) {
        double total = 0.0;
        for (double level : levels) total += level;

        std::vector<double> next = levels;
        if (total > 0.0) {
            for (std::size_t i = 0; i < levels.size(); ++i) {
                const AgentClass& cls = config.classes[i];
                if (!(levels[i] > 0.0) || !(cls.population > 0.0)) continue;
                const double member_deposit = levels[i] / cls.population;
                const double gain =
                    cls.population * cash_profit(cls, member_deposit, total, config);
                next[i] = std::max(0.0, levels[i] + gain);
            }
            supply += config.schedule.yield(total) * total;
        }
        levels = std::move(next);
        traj.points.push_back(snapshot(year, levels, supply, &origin));
    }
    return traj;
}

}  // namespace stakemkt
