#include "stakemkt/market.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace stakemkt {

double CostTriple::total(double deposit) const {
    return fixed + variable_coeff * std::pow(deposit, exponent);
}

double CostTriple::marginal(double deposit) const {
    return variable_coeff * exponent * std::pow(deposit, exponent - 1.0);
}

void CostTriple::validate(const std::string& where) const {
    if (!(fixed >= 0.0)) throw std::invalid_argument(where + ".fixed_cost must be >= 0");
    if (!(variable_coeff > 0.0)) throw std::invalid_argument(where + ".var_coeff must be > 0");
    if (!(exponent > 1.0)) throw std::invalid_argument(where + ".exponent must be > 1");
}

void AgentClass::validate() const {
    const std::string where = "class '" + label + "'";
    if (label.empty()) throw std::invalid_argument("class label must be non-empty");
    if (!(population >= 0.0)) throw std::invalid_argument(where + ".population must be >= 0");
    if (!(fee >= 0.0 && fee < 1.0)) throw std::invalid_argument(where + ".fee must be in [0, 1)");
    if (!(defi_yield >= 0.0)) throw std::invalid_argument(where + ".defi_yield must be >= 0");
    cost.validate(where);
    if (fixed_deposit && !(*fixed_deposit >= 0.0)) {
        throw std::invalid_argument(where + ".fixed_deposit must be >= 0");
    }
}

void MarketConfig::validate() const {
    schedule.validate();
    if (!(mev_total >= 0.0)) throw std::invalid_argument("market.mev_total must be >= 0");
    if (!(max_supply > 0.0)) throw std::invalid_argument("market.max_supply must be > 0");
    std::set<std::string> seen;
    for (const AgentClass& cls : classes) {
        cls.validate();
        if (!seen.insert(cls.label).second) {
            throw std::invalid_argument("duplicate class label '" + cls.label + "'");
        }
    }
}

const AgentClass* MarketConfig::find(const std::string& label) const {
    for (const AgentClass& cls : classes) {
        if (cls.label == label) return &cls;
    }
    return nullptr;
}

int MarketConfig::index_of(const std::string& label) const {
    for (std::size_t i = 0; i < classes.size(); ++i) {
        if (classes[i].label == label) return static_cast<int>(i);
    }
    return -1;
}

double marginal_cost(const CostTriple& cost, double deposit) {
    if (!(deposit > 0.0) && !(cost.exponent >= 1.0 && deposit >= 0.0)) {
        throw std::domain_error("marginal_cost: deposit must be positive");
    }
    return cost.marginal(deposit);
}

namespace {

void check_profit_preconditions(double deposit, double total_stake) {
    if (!(deposit >= 0.0)) throw std::domain_error("profit: deposit must be >= 0");
    if (!(total_stake > 0.0)) throw std::domain_error("profit: total_stake must be positive");
    if (!(total_stake >= deposit)) {
        throw std::domain_error("profit: total_stake must be >= deposit");
    }
}

double revenue_before_cost(const AgentClass& cls, double deposit, double total_stake,
                           const MarketConfig& config, bool apply_risk_model) {
    const double y = config.schedule.yield(total_stake);
    double bracket = y * deposit;
    if (cls.has_mev) {
        const double share = config.mev_total * deposit / total_stake;
        if (apply_risk_model && cls.risk_model == RiskModel::ExcludeMev) {
            // decision value drops MEV entirely
        } else if (apply_risk_model && cls.risk_model == RiskModel::VariancePenalty) {
            bracket += share - share * share;
        } else {
            bracket += share;
        }
    }
    return (1.0 - cls.fee) * bracket + cls.defi_yield * deposit;
}

}  // namespace

double profit(const AgentClass& cls, double deposit, double total_stake,
              const MarketConfig& config) {
    check_profit_preconditions(deposit, total_stake);
    return revenue_before_cost(cls, deposit, total_stake, config, true) - cls.cost.total(deposit);
}

double cash_profit(const AgentClass& cls, double deposit, double total_stake,
                   const MarketConfig& config) {
    check_profit_preconditions(deposit, total_stake);
    return revenue_before_cost(cls, deposit, total_stake, config, false) - cls.cost.total(deposit);
}

namespace {

// Marginal revenue per ETH under the reduced FOC, where dP/dd is replaced by
// P/d = 1/D and the dy/dD * d term is dropped.
double reduced_marginal_revenue(const AgentClass& cls, double deposit, double total_stake,
                                const MarketConfig& config) {
    const double y = config.schedule.yield(total_stake);
    double bracket = y;
    if (cls.has_mev && cls.risk_model != RiskModel::ExcludeMev) {
        const double v = config.mev_total / total_stake;
        if (cls.risk_model == RiskModel::VariancePenalty) {
            bracket += v * (1.0 - 2.0 * config.mev_total * deposit / total_stake);
        } else {
            bracket += v;
        }
    }
    return (1.0 - cls.fee) * bracket + cls.defi_yield;
}

// Full marginal revenue, keeping the own-deposit terms.
double exact_marginal_revenue(const AgentClass& cls, double deposit, double total_stake,
                              const MarketConfig& config) {
    const double y = config.schedule.yield(total_stake);
    const double dy = config.schedule.yield_derivative(total_stake);
    double bracket = y + dy * deposit;
    if (cls.has_mev && cls.risk_model != RiskModel::ExcludeMev) {
        const double dP = (total_stake - deposit) / (total_stake * total_stake);
        if (cls.risk_model == RiskModel::VariancePenalty) {
            const double P = deposit / total_stake;
            bracket += config.mev_total * dP * (1.0 - 2.0 * config.mev_total * P);
        } else {
            bracket += config.mev_total * dP;
        }
    }
    return (1.0 - cls.fee) * bracket + cls.defi_yield;
}

double marginal_revenue(const AgentClass& cls, double deposit, double total_stake,
                        const MarketConfig& config) {
    return config.exact_foc ? exact_marginal_revenue(cls, deposit, total_stake, config)
                            : reduced_marginal_revenue(cls, deposit, total_stake, config);
}

// Bisect the strictly decreasing residual d -> marginal_revenue - marginal_cost
// on [lo, hi], where the residual is positive at lo and negative at hi.
double bisect_deposit(const AgentClass& cls, double total_stake, const MarketConfig& config,
                      double lo, double hi) {
    for (int it = 0; it < 200 && (hi - lo) > 1e-15 * std::max(1.0, hi); ++it) {
        const double mid = 0.5 * (lo + hi);
        const double r = marginal_revenue(cls, mid, total_stake, config) - cls.cost.marginal(mid);
        if (r > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

}  // namespace

double foc_residual(const AgentClass& cls, double deposit, double total_stake,
                    const MarketConfig& config) {
    if (!(deposit > 0.0)) throw std::domain_error("foc_residual: deposit must be positive");
    if (!(total_stake > 0.0)) {
        throw std::domain_error("foc_residual: total_stake must be positive");
    }
    return marginal_revenue(cls, deposit, total_stake, config) - cls.cost.marginal(deposit);
}

double best_response(const AgentClass& cls, double total_stake, const MarketConfig& config) {
    if (!(total_stake > 0.0)) {
        throw std::domain_error("best_response: total_stake must be positive");
    }
    if (cls.fixed_deposit) return *cls.fixed_deposit;

    // Nonparticipation corner: marginal revenue already below the marginal
    // cost of the first unit (zero for convex costs, c for linear ones).
    const double at_zero = marginal_revenue(cls, 0.0, total_stake, config);
    if (!(at_zero > cls.cost.marginal(0.0))) return 0.0;

    const bool deposit_in_lhs =
        config.exact_foc || (cls.has_mev && cls.risk_model == RiskModel::VariancePenalty);

    if (!deposit_in_lhs) {
        // LHS is independent of the deposit; the FOC inverts in closed form.
        const double ca = cls.cost.variable_coeff * cls.cost.exponent;
        return std::pow(at_zero / ca, 1.0 / (cls.cost.exponent - 1.0));
    }

    if (!config.exact_foc && cls.cost.exponent == 2.0) {
        // Variance penalty with quadratic cost keeps the FOC linear in d.
        const double v2 = config.mev_total * config.mev_total / (total_stake * total_stake);
        const double slope =
            cls.cost.variable_coeff * 2.0 + (1.0 - cls.fee) * 2.0 * v2;
        return at_zero / slope;
    }

    // Scalar root-find. Under the exact FOC a member's deposit cannot exceed
    // the aggregate it is part of.
    double hi = 1.0;
    const double cap = config.exact_foc ? total_stake : 0x1p60;
    while (hi < cap &&
           marginal_revenue(cls, hi, total_stake, config) - cls.cost.marginal(hi) > 0.0) {
        hi = std::min(hi * 2.0, cap);
        if (hi == cap) break;
    }
    if (hi >= cap &&
        marginal_revenue(cls, cap, total_stake, config) - cls.cost.marginal(cap) > 0.0) {
        return cap;
    }
    return bisect_deposit(cls, total_stake, config, 0.0, hi);
}

}  // namespace stakemkt
