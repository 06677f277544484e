#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "stakemkt/equilibrium.hpp"
#include "stakemkt/market.hpp"

namespace stakemkt {

// Fee-setting intermediary standing between the techie class and the
// centralized providers that run the stake. The intermediary charges
// user_fee to stakers, passes passthrough_fee through to providers, and pays
// a concave operating cost kappa * sqrt(D_t).
struct IntermediaryConfig {
    double user_fee = 0.10;         // f_d, charged to the techie class
    double passthrough_fee = 0.05;  // paid through to the providers
    int cssp_count = 1;             // providers sharing the intermediated flow
    // kappa; NaN means "calibrate so net profit is half of fee revenue at the
    // baseline equilibrium".
    double intermediary_cost_scale = std::numeric_limits<double>::quiet_NaN();
    double cssp_cost_scale = 1.0;  // same concave shape for each provider
    double fee_cap = 0.9;          // upper end of the fee search
    double fee_step = 0.005;       // search grid resolution

    void validate() const;
};

// Equilibrium quantities the intermediary's ledger is built from.
struct IntermediaryState {
    Equilibrium eq;
    double techie_total = 0.0;  // D_t
    double fee_base = 0.0;      // y(D)*D_t + y_v*D_t/D
};

// Solves the market with the techie fee overridden to user_fee.
IntermediaryState solve_with_fee(double user_fee, const MarketConfig& market);

// (f_d - passthrough) * fee_base - kappa * sqrt(D_t), at the equilibrium the
// fee induces.
double dssp_profit(double user_fee, const IntermediaryConfig& config, const MarketConfig& market);

// kappa making net profit half of the fee-margin revenue at the configured
// baseline fee.
double calibrate_cost_scale(const IntermediaryConfig& config, const MarketConfig& market);

struct FeePoint {
    double fee = 0.0;
    double profit = 0.0;
    double fee_base = 0.0;
    double techie_total = 0.0;
    double total_stake = 0.0;
};

struct FeeSearchResult {
    double baseline_fee = 0.0;
    double baseline_profit = 0.0;  // under the old schedule at the configured fee
    double matched_fee = 0.0;      // smallest fee restoring the baseline profit
    double matched_profit = 0.0;
    bool shortfall = false;  // no fee in range reaches the target; matched_fee is the argmax
    std::vector<FeePoint> curve;  // profit-vs-fee under the new schedule
};

// Smallest user fee in [user_fee, fee_cap] whose profit under new_schedule
// reaches the profit earned under old_schedule at the configured fee.
FeeSearchResult profit_matching_fee(const IntermediaryConfig& config, const MarketConfig& market,
                                    const IssuanceSchedule& old_schedule,
                                    const IssuanceSchedule& new_schedule);

// One provider's ledger under uniform allocation of the intermediated flow.
struct CsspReport {
    int index = 0;
    double intermediated_flow = 0.0;  // D_t / M
    double direct_flow = 0.0;         // institution stake / M
    double direct_fee_income = 0.0;
    double passthrough_income = 0.0;
    double cost = 0.0;
    double profit = 0.0;
};

CsspReport cssp_profit(int m_index, const IntermediaryConfig& config, const MarketConfig& market);

struct IntermediaryReport {
    IntermediaryState state;
    double user_fee = 0.0;
    double cost_scale = 0.0;  // resolved kappa
    double dssp_profit = 0.0;
    std::vector<CsspReport> providers;
    double min_provider_slack = 0.0;  // participation slack across providers
};

IntermediaryReport intermediary_report(const IntermediaryConfig& config,
                                       const MarketConfig& market);

}  // namespace stakemkt
