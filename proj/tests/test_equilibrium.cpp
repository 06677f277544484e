#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "stakemkt/config.hpp"
#include "stakemkt/equilibrium.hpp"

using namespace stakemkt;

namespace {

double aggregate_response(const MarketConfig& config, double D) {
    double sum = 0.0;
    for (const AgentClass& cls : config.classes) {
        sum += cls.population * best_response(cls, D, config);
    }
    return sum;
}

// Brute-force oracle: Gauss-Seidel best-response iteration over a zooming
// deposit grid, each agent maximizing its exact profit given the others.
// Returns per-member deposits.
std::vector<double> grid_nash(const MarketConfig& config, double cap, double& final_step) {
    const std::size_t n = config.classes.size();
    std::vector<double> deposits(n, 100.0);

    const auto argmax = [&](std::size_t i, double others, double lo, double hi, double step) {
        const AgentClass& cls = config.classes[i];
        double best_d = lo, best_p = -std::numeric_limits<double>::infinity();
        for (double d = std::max(lo, 0.0); d <= hi; d += step) {
            const double D = d + others;
            const double p = (D > 0.0) ? profit(cls, d, D, config) : -cls.cost.fixed;
            if (p > best_p) {
                best_p = p;
                best_d = d;
            }
        }
        return best_d;
    };

    const double steps[3] = {cap / 1500.0, 0.5, 0.05};
    final_step = steps[2];
    for (int round = 0; round < 300; ++round) {
        double moved = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double others = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                const double members = (j == i) ? config.classes[j].population - 1.0
                                                : config.classes[j].population;
                others += members * deposits[j];
            }
            double d = argmax(i, others, 0.0, cap, steps[0]);
            d = argmax(i, others, d - 2.0 * steps[0], d + 2.0 * steps[0], steps[1]);
            d = argmax(i, others, d - 2.0 * steps[1], d + 2.0 * steps[1], steps[2]);
            // damped update keeps the decreasing best responses from cycling
            const double next = 0.5 * deposits[i] + 0.5 * d;
            moved = std::max(moved, std::fabs(next - deposits[i]));
            deposits[i] = next;
        }
        if (moved < 0.25 * steps[2]) break;
    }
    return deposits;
}

}  // namespace

TEST_CASE("baseline market under the square-root schedule") {
    const MarketConfig config = baseline_market();
    const Equilibrium eq = solve(config);

    REQUIRE(eq.status == SolveStatus::Interior);
    CHECK(eq.total_stake == doctest::Approx(33.3e6).epsilon(0.01));
    CHECK(eq.find("expert")->total == doctest::Approx(0.9e6).epsilon(0.02));
    CHECK(eq.find("techie")->total == doctest::Approx(18e6).epsilon(0.02));
    CHECK(eq.find("retailer")->total == doctest::Approx(14.4e6).epsilon(0.02));
    CHECK(std::fabs(eq.find("expert")->share - 0.027) < 0.005);
    CHECK(std::fabs(eq.find("techie")->share - 0.541) < 0.005);
    CHECK(std::fabs(eq.find("retailer")->share - 0.432) < 0.005);
    CHECK(std::fabs(eq.find("expert")->profit_per_eth - 0.008) < 0.001);
    CHECK(std::fabs(eq.find("techie")->profit_per_eth - 0.018) < 0.001);
    CHECK(std::fabs(eq.find("retailer")->profit_per_eth - 0.0095) < 0.001);

    // solver contracts
    CHECK(std::fabs(eq.residual) < 1.0);
    double share_sum = 0.0;
    for (const ClassOutcome& c : eq.classes) share_sum += c.share;
    CHECK(std::fabs(share_sum - 1.0) < 1e-9);
    CHECK_FALSE(eq.pc_enforced);
}

TEST_CASE("damped schedule drains a quarter of the stake") {
    const ComparisonReport report =
        compare(baseline_market(), IssuanceSchedule::current(), IssuanceSchedule::tempered());
    CHECK(report.alt.total_stake == doctest::Approx(24.84e6).epsilon(0.01));
    CHECK(report.total_deposits_pct == doctest::Approx(-0.254).epsilon(0.04));
    CHECK(std::fabs(report.deltas[0].deposits_pct - -0.178) < 0.015);
    CHECK(std::fabs(report.deltas[1].deposits_pct - -0.206) < 0.015);
    CHECK(std::fabs(report.deltas[2].deposits_pct - -0.315) < 0.015);
    // strictly smaller equilibrium whenever any attentive class is active
    CHECK(report.alt.total_stake < report.base.total_stake);
}

TEST_CASE("fixed point is self-consistent") {
    for (const MarketConfig& config :
         {baseline_market(), mev_variance_market(), inattentive_market()}) {
        for (const IssuanceSchedule& s :
             {IssuanceSchedule::current(), IssuanceSchedule::tempered()}) {
            const Equilibrium eq = solve(config.with_schedule(s));
            REQUIRE(eq.status == SolveStatus::Interior);
            const MarketConfig solved = config.with_schedule(s);
            double recomputed = 0.0;
            for (const AgentClass& cls : solved.classes) {
                recomputed += cls.population * best_response(cls, eq.total_stake, solved);
            }
            CHECK(recomputed == doctest::Approx(eq.total_stake).epsilon(1e-9));
            // per-class FOC residuals at the root
            for (std::size_t i = 0; i < solved.classes.size(); ++i) {
                const AgentClass& cls = solved.classes[i];
                if (!cls.attentive() || eq.classes[i].deposit <= 0.0) continue;
                const double r = foc_residual(cls, eq.classes[i].deposit, eq.total_stake, solved);
                CHECK(std::fabs(r) / cls.cost.marginal(eq.classes[i].deposit) < 1e-8);
            }
        }
    }
}

TEST_CASE("aggregate response crosses exactly once at the calibrated market") {
    const MarketConfig config = baseline_market();
    CHECK(aggregate_response(config, 1.0) - 1.0 > 0.0);
    CHECK(aggregate_response(config, config.max_supply) - config.max_supply < 0.0);
    const Equilibrium eq = solve(config);
    CHECK_FALSE(eq.multiple_crossings);
}

TEST_CASE("empty market collapses to zero") {
    MarketConfig config = baseline_market();
    for (AgentClass& cls : config.classes) cls.population = 0.0;
    const Equilibrium eq = solve(config);
    CHECK(eq.status == SolveStatus::CornerLow);
    CHECK(eq.total_stake == 0.0);
    CHECK(eq.participation.empty());  // vacuously satisfied
}

TEST_CASE("an inattentive block alone pins the aggregate") {
    MarketConfig config = inattentive_market();
    for (AgentClass& cls : config.classes) {
        if (cls.attentive()) cls.population = 0.0;
    }
    const Equilibrium eq = solve(config);
    CHECK(eq.status == SolveStatus::Interior);
    CHECK(eq.total_stake == doctest::Approx(6.5e6).epsilon(1e-9));
}

TEST_CASE("participation slack at the calibrated market") {
    const Equilibrium eq = solve(baseline_market());
    REQUIRE(eq.participation.size() == 4);  // three profit floors plus the ranking
    for (const ParticipationCheck& c : eq.participation) {
        CHECK(c.satisfied);
        CHECK(c.slack > 0.0);
    }
}

TEST_CASE("variance-pricing solo stakers stay in at roughly zero profit") {
    const MarketConfig config = mev_variance_market();
    const ComparisonReport report =
        compare(config, IssuanceSchedule::current(), IssuanceSchedule::tempered());

    CHECK(report.base.find("expert")->total == doctest::Approx(0.77e6).epsilon(0.02));
    CHECK(report.alt.find("expert")->total == doctest::Approx(0.58e6).epsilon(0.02));
    CHECK(std::fabs(report.deltas[0].deposits_pct - -0.246) < 0.015);

    // the decision value dips just below zero, the cash flow does not ...
    const ClassOutcome* solo = report.alt.find("expert");
    CHECK(solo->profit_per_eth <= 0.0005);
    const MarketConfig tempered = config.with_schedule(IssuanceSchedule::tempered());
    CHECK(cash_profit(tempered.classes[0], solo->deposit, report.alt.total_stake, tempered) >
          0.0);
    // ... so the class is not pushed out of the market
    CHECK(solo->participating);
    CHECK_FALSE(report.alt.pc_enforced);
}

TEST_CASE("retail split with a fixed inattentive block") {
    const MarketConfig config = inattentive_market();
    const ComparisonReport report =
        compare(config, IssuanceSchedule::current(), IssuanceSchedule::tempered());

    CHECK(report.base.total_stake == doctest::Approx(33.1e6).epsilon(0.02));
    CHECK(report.alt.total_stake == doctest::Approx(25.7e6).epsilon(0.02));
    CHECK(report.base.find("inattentive")->total == 6.5e6);
    CHECK(report.alt.find("inattentive")->total == 6.5e6);
    const ClassDelta* inattentive = nullptr;
    const ClassDelta* institution = nullptr;
    for (const ClassDelta& d : report.deltas) {
        if (d.label == "inattentive") inattentive = &d;
        if (d.label == "institution") institution = &d;
    }
    REQUIRE(inattentive);
    REQUIRE(institution);
    CHECK(inattentive->deposits_pct == 0.0);
    CHECK(std::fabs(institution->deposits_pct - -0.364) < 0.02);
}

TEST_CASE("a cash-losing class is removed and the market re-solved") {
    MarketConfig config = baseline_market();
    config.classes[0].cost.fixed = 5.0;  // fixed cost nothing at this scale can cover
    const Equilibrium eq = solve(config);
    CHECK(eq.pc_enforced);
    CHECK_FALSE(eq.find("expert")->participating);
    CHECK(eq.find("expert")->total == 0.0);
    // remaining classes re-equilibrate to a valid fixed point
    CHECK(eq.find("techie")->total > 0.0);
    CHECK(std::fabs(eq.residual) < 1.0);
    for (const ParticipationCheck& c : eq.participation) CHECK(c.satisfied);
}

TEST_CASE("solver equilibrium matches a brute-force grid search on a reduced market") {
    MarketConfig config = baseline_market();
    for (AgentClass& cls : config.classes) cls.population = 2.0;
    config.exact_foc = true;  // the grid oracle maximizes exact profits

    const Equilibrium eq = solve(config);
    REQUIRE(eq.status == SolveStatus::Interior);

    double step = 0.0;
    const std::vector<double> oracle = grid_nash(config, 3e5, step);
    for (std::size_t i = 0; i < config.classes.size(); ++i) {
        CHECK(std::fabs(eq.classes[i].deposit - oracle[i]) <= step);
    }
}

TEST_CASE("comparing a schedule against itself changes nothing") {
    const ComparisonReport report =
        compare(baseline_market(), IssuanceSchedule::current(), IssuanceSchedule::current());
    CHECK(report.total_deposits_pct == 0.0);
    for (const ClassDelta& d : report.deltas) CHECK(d.deposits_pct == 0.0);
}
