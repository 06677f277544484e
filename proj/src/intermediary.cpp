#include "stakemkt/intermediary.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace stakemkt {

namespace {

constexpr const char* kTechieLabel = "techie";
constexpr const char* kInstitutionLabel = "institution";

double resolve_cost_scale(const IntermediaryConfig& config, const MarketConfig& market) {
    return std::isnan(config.intermediary_cost_scale)
               ? calibrate_cost_scale(config, market)
               : config.intermediary_cost_scale;
}

}  // namespace

void IntermediaryConfig::validate() const {
    if (!(passthrough_fee >= 0.0 && passthrough_fee <= user_fee && user_fee < 1.0)) {
        throw std::invalid_argument(
            "intermediary: need 0 <= passthrough_fee <= user_fee < 1");
    }
    if (cssp_count < 1) throw std::invalid_argument("intermediary.cssp_count must be >= 1");
    if (!std::isnan(intermediary_cost_scale) && !(intermediary_cost_scale >= 0.0)) {
        throw std::invalid_argument("intermediary.cost_scale must be >= 0");
    }
    if (!(cssp_cost_scale >= 0.0)) throw std::invalid_argument("intermediary.cssp_cost_scale must be >= 0");
    if (!(fee_cap > user_fee && fee_cap < 1.0)) {
        throw std::invalid_argument("intermediary.fee_cap must lie in (user_fee, 1)");
    }
    if (!(fee_step > 0.0)) throw std::invalid_argument("intermediary.fee_step must be > 0");
}

IntermediaryState solve_with_fee(double user_fee, const MarketConfig& market) {
    MarketConfig config = market;
    const int t = config.index_of(kTechieLabel);
    if (t < 0) throw std::invalid_argument("intermediary: market has no techie class");
    config.classes[static_cast<std::size_t>(t)].fee = user_fee;

    IntermediaryState state;
    state.eq = solve(config);
    const ClassOutcome* techie = state.eq.find(kTechieLabel);
    state.techie_total = techie ? techie->total : 0.0;
    if (state.eq.total_stake > 0.0 && state.techie_total > 0.0) {
        const double y = config.schedule.yield(state.eq.total_stake);
        state.fee_base = y * state.techie_total +
                         config.mev_total * state.techie_total / state.eq.total_stake;
    }
    return state;
}

double dssp_profit(double user_fee, const IntermediaryConfig& config, const MarketConfig& market) {
    const double kappa = resolve_cost_scale(config, market);
    const IntermediaryState state = solve_with_fee(user_fee, market);
    return (user_fee - config.passthrough_fee) * state.fee_base -
           kappa * std::sqrt(state.techie_total);
}

double calibrate_cost_scale(const IntermediaryConfig& config, const MarketConfig& market) {
    const IntermediaryState state = solve_with_fee(config.user_fee, market);
    if (!(state.techie_total > 0.0)) return 0.0;
    const double margin_revenue = (config.user_fee - config.passthrough_fee) * state.fee_base;
    return 0.5 * margin_revenue / std::sqrt(state.techie_total);
}

FeeSearchResult profit_matching_fee(const IntermediaryConfig& config, const MarketConfig& market,
                                    const IssuanceSchedule& old_schedule,
                                    const IssuanceSchedule& new_schedule) {
    config.validate();
    IntermediaryConfig resolved = config;
    resolved.intermediary_cost_scale =
        resolve_cost_scale(config, market.with_schedule(old_schedule));

    FeeSearchResult result;
    result.baseline_fee = config.user_fee;
    result.baseline_profit =
        dssp_profit(config.user_fee, resolved, market.with_schedule(old_schedule));

    const MarketConfig market_new = market.with_schedule(new_schedule);
    const auto eval = [&](double fee) {
        const IntermediaryState state = solve_with_fee(fee, market_new);
        FeePoint pt;
        pt.fee = fee;
        pt.fee_base = state.fee_base;
        pt.techie_total = state.techie_total;
        pt.total_stake = state.eq.total_stake;
        pt.profit = (fee - resolved.passthrough_fee) * state.fee_base -
                    resolved.intermediary_cost_scale * std::sqrt(state.techie_total);
        return pt;
    };

    // Grid scan from the configured fee upward; the first grid point meeting
    // the target brackets the crossing, which a bisection then sharpens.
    double found = std::numeric_limits<double>::quiet_NaN();
    double best_fee = config.user_fee;
    double best_profit = -std::numeric_limits<double>::infinity();
    double prev_fee = config.user_fee;
    for (double fee = config.user_fee;; fee += config.fee_step) {
        fee = std::min(fee, config.fee_cap);
        const FeePoint pt = eval(fee);
        result.curve.push_back(pt);
        if (pt.profit > best_profit) {
            best_profit = pt.profit;
            best_fee = fee;
        }
        if (std::isnan(found) && pt.profit >= result.baseline_profit) {
            found = fee;
            if (fee > config.user_fee) {
                double lo = prev_fee, hi = fee;
                for (int it = 0; it < 40 && (hi - lo) > 1e-6; ++it) {
                    const double mid = 0.5 * (lo + hi);
                    if (eval(mid).profit >= result.baseline_profit) {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                found = hi;
            }
        }
        prev_fee = fee;
        if (fee >= config.fee_cap) break;
    }

    if (std::isnan(found)) {
        result.shortfall = true;
        result.matched_fee = best_fee;
        result.matched_profit = best_profit;
    } else {
        result.matched_fee = found;
        result.matched_profit = eval(found).profit;
    }
    return result;
}

CsspReport cssp_profit(int m_index, const IntermediaryConfig& config, const MarketConfig& market) {
    config.validate();
    if (m_index < 0 || m_index >= config.cssp_count) {
        throw std::invalid_argument("cssp_profit: provider index out of range");
    }
    const IntermediaryState state = solve_with_fee(config.user_fee, market);

    CsspReport report;
    report.index = m_index;
    const double m = static_cast<double>(config.cssp_count);
    report.intermediated_flow = state.techie_total / m;

    const ClassOutcome* inst = state.eq.find(kInstitutionLabel);
    const double direct_total = inst ? inst->total : 0.0;
    report.direct_flow = direct_total / m;

    const double D = state.eq.total_stake;
    if (D > 0.0) {
        const double y = market.schedule.yield(D);
        const double direct_fee =
            market.find(kInstitutionLabel) ? market.find(kInstitutionLabel)->fee : 0.0;
        report.direct_fee_income =
            direct_fee * (y * report.direct_flow + market.mev_total * report.direct_flow / D);
        report.passthrough_income =
            config.passthrough_fee *
            (y * report.intermediated_flow + market.mev_total * report.intermediated_flow / D);
    }
    report.cost = config.cssp_cost_scale *
                  std::sqrt(report.intermediated_flow + report.direct_flow);
    report.profit = report.direct_fee_income + report.passthrough_income - report.cost;
    return report;
}

IntermediaryReport intermediary_report(const IntermediaryConfig& config,
                                       const MarketConfig& market) {
    config.validate();
    IntermediaryReport report;
    report.user_fee = config.user_fee;
    report.cost_scale = resolve_cost_scale(config, market);
    report.state = solve_with_fee(config.user_fee, market);
    report.dssp_profit = (config.user_fee - config.passthrough_fee) * report.state.fee_base -
                         report.cost_scale * std::sqrt(report.state.techie_total);
    report.min_provider_slack = std::numeric_limits<double>::infinity();
    for (int m = 0; m < config.cssp_count; ++m) {
        report.providers.push_back(cssp_profit(m, config, market));
        report.min_provider_slack = std::min(report.min_provider_slack, report.providers.back().profit);
    }
    return report;
}

}  // namespace stakemkt
