#include <doctest.h>

#include <cmath>

#include "stakemkt/config.hpp"
#include "stakemkt/dynamics.hpp"

using namespace stakemkt;

TEST_CASE("first-year increments are the reinvested cash profits") {
    const MarketConfig config = baseline_market();
    const Equilibrium eq = solve(config);
    const Trajectory traj = project(eq, config, 120e6, 3);

    REQUIRE(traj.points.size() == 4);
    const TrajectoryPoint& y0 = traj.points[0];
    const TrajectoryPoint& y1 = traj.points[1];
    for (std::size_t i = 0; i < config.classes.size(); ++i) {
        const AgentClass& cls = config.classes[i];
        const double expected =
            cls.population * cash_profit(cls, y0.levels[i] / cls.population, y0.total_level, config);
        CHECK(y1.levels[i] - y0.levels[i] == doctest::Approx(expected).epsilon(1e-12));
    }
    // solo stake grows by its stake times its per-ETH margin, a bit under 1%
    const double solo_gain = y1.levels[0] - y0.levels[0];
    CHECK(solo_gain > 5500.0);
    CHECK(solo_gain < 8500.0);
}

TEST_CASE("supply grows by exactly the issuance paid") {
    const MarketConfig config = baseline_market();
    const Equilibrium eq = solve(config);
    const Trajectory traj = project(eq, config, 120e6, 10);
    for (std::size_t t = 0; t + 1 < traj.points.size(); ++t) {
        const TrajectoryPoint& now = traj.points[t];
        const TrajectoryPoint& next = traj.points[t + 1];
        const double issued = config.schedule.yield(now.total_level) * now.total_level;
        CHECK(next.supply == now.supply + issued);
    }
}

TEST_CASE("equal profit rates keep class shares frozen") {
    MarketConfig config = baseline_market();
    // three clones of the same class earn identical per-ETH profits
    config.classes[1] = config.classes[0];
    config.classes[2] = config.classes[0];
    config.classes[1].label = "twin";
    config.classes[2].label = "triplet";
    const Equilibrium eq = solve(config);
    const Trajectory traj = project(eq, config, 120e6, 8);
    for (const TrajectoryPoint& pt : traj.points) {
        for (std::size_t i = 1; i < pt.levels.size(); ++i) {
            CHECK(pt.levels[i] / pt.total_level ==
                  doctest::Approx(pt.levels[0] / pt.total_level).epsilon(1e-9));
        }
    }
}

TEST_CASE("a profitless class is diluted whenever issuance flows") {
    MarketConfig config = baseline_market();
    // push the solo fixed cost to within a sliver of its whole profit; the
    // deposit choice is unchanged (fixed costs are not marginal) but growth
    // is now three orders of magnitude below issuance
    const Equilibrium pre = solve(config);
    AgentClass& solo = config.classes[0];
    solo.cost.fixed +=
        0.999 * cash_profit(solo, pre.find("expert")->deposit, pre.total_stake, config);
    const Equilibrium eq = solve(config);
    const Trajectory traj = project(eq, config, 120e6, 6);
    for (std::size_t t = 1; t < traj.points.size(); ++t) {
        CHECK(traj.points[t].ratios[0] < traj.points[t - 1].ratios[0]);
    }
}

TEST_CASE("an empty class never resurrects and pays nothing") {
    MarketConfig config = baseline_market();
    config.classes[0].cost.fixed = 5.0;  // participation check zeroes the class
    const Equilibrium eq = solve(config);
    REQUIRE(eq.find("expert")->total == 0.0);
    const Trajectory traj = project(eq, config, 120e6, 5);
    for (const TrajectoryPoint& pt : traj.points) {
        CHECK(pt.levels[0] == 0.0);
    }
}

TEST_CASE("negative profits draw the stake down, floored at zero") {
    MarketConfig config = baseline_market();
    const Equilibrium eq = solve(config);
    // inflate the solo fixed cost after solving so reinvestment runs at a loss
    config.classes[0].cost.fixed = 3.0;
    const Trajectory traj = project(eq, config, 120e6, 40);
    double prev = traj.points[0].levels[0];
    for (std::size_t t = 1; t < traj.points.size(); ++t) {
        CHECK(traj.points[t].levels[0] <= prev);
        CHECK(traj.points[t].levels[0] >= 0.0);
        prev = traj.points[t].levels[0];
    }
}

TEST_CASE("solo share of stake is diluted, faster under the damped schedule") {
    const MarketConfig config = baseline_market();
    const MarketConfig damped = config.with_schedule(IssuanceSchedule::tempered());
    const Trajectory cur = project(solve(config), config, 120e6, 8);
    const Trajectory tmp = project(solve(damped), damped, 120e6, 8);
    for (std::size_t t = 1; t < cur.points.size(); ++t) {
        CHECK(cur.points[t].ratios[0] < cur.points[t - 1].ratios[0]);
        CHECK(tmp.points[t].ratios[0] < tmp.points[t - 1].ratios[0]);
        CHECK(tmp.points[t].ratio_pct[0] < cur.points[t].ratio_pct[0]);
    }
}

TEST_CASE("trajectory bookkeeping") {
    const MarketConfig config = baseline_market();
    const Equilibrium eq = solve(config);
    const Trajectory traj = project(eq, config, 120e6, 4);
    CHECK(traj.labels.size() == 3);
    for (const TrajectoryPoint& pt : traj.points) {
        double sum = 0.0;
        for (double level : pt.levels) {
            CHECK(level >= 0.0);
            sum += level;
        }
        CHECK(pt.total_level == doctest::Approx(sum).epsilon(1e-12));
        for (double ratio : pt.ratios) {
            CHECK(ratio >= 0.0);
            CHECK(ratio <= 1.0);
        }
    }
    // supply weakly increases
    for (std::size_t t = 1; t < traj.points.size(); ++t) {
        CHECK(traj.points[t].supply >= traj.points[t - 1].supply);
    }
    // cumulative changes are anchored at year zero
    CHECK(traj.points[0].year == 0);
    CHECK(traj.points.back().year == 4);
}

TEST_CASE("projection rejects bad inputs") {
    const MarketConfig config = baseline_market();
    const Equilibrium eq = solve(config);
    CHECK_THROWS_AS(project(eq, config, 120e6, 0), std::invalid_argument);
    CHECK_THROWS_AS(project(eq, config, 1e6, 10), std::domain_error);
}
