#pragma once

#include <optional>
#include <string>
#include <vector>

#include "stakemkt/issuance.hpp"

namespace stakemkt {

// Annual staking cost C + c * d^alpha for a position of d ETH.
struct CostTriple {
    double fixed = 0.0;           // C, ETH/yr
    double variable_coeff = 0.0;  // c, ETH/yr per ETH^alpha
    double exponent = 2.0;        // alpha, > 1 for convexity

    double total(double deposit) const;
    double marginal(double deposit) const;  // c * alpha * d^(alpha - 1)

    void validate(const std::string& where) const;
};

// How a class treats the variance of MEV proposer rewards when staking.
//   Neutral:         expected value only, y_v * d/D.
//   VariancePenalty: expected value minus variance, y_v*P - y_v^2*P^2.
//   ExcludeMev:      MEV dropped from the objective altogether (the stronger
//                    risk-adjustment convention collapses to this for small
//                    stakers).
enum class RiskModel { Neutral, VariancePenalty, ExcludeMev };

struct AgentClass {
    std::string label;
    double population = 0.0;
    double fee = 0.0;         // provider's cut of staking revenue, [0, 1)
    CostTriple cost;
    bool has_mev = true;      // class receives a pro-rata MEV share
    double defi_yield = 0.0;  // extra annual yield on liquid-staked deposits
    RiskModel risk_model = RiskModel::Neutral;
    std::optional<double> fixed_deposit;  // per-member deposit of inattentive classes

    // Inattentive classes never re-optimize; their FOC is skipped.
    bool attentive() const { return !fixed_deposit.has_value(); }

    void validate() const;
};

struct MarketConfig {
    IssuanceSchedule schedule;
    std::vector<AgentClass> classes;
    double mev_total = 300000.0;  // y_v: network-wide annual MEV pot, ETH/yr
    double max_supply = 120e6;    // aggregate stake bound, ETH

    // Keep the own-deposit terms (dy/dD * d and the exact dP/dd) that the
    // reduced first-order conditions drop. Sensitivity checks only.
    bool exact_foc = false;

    void validate() const;
    const AgentClass* find(const std::string& label) const;
    int index_of(const std::string& label) const;  // -1 when absent

    MarketConfig with_schedule(const IssuanceSchedule& s) const {
        MarketConfig copy = *this;
        copy.schedule = s;
        return copy;
    }
};

double marginal_cost(const CostTriple& cost, double deposit);

// Objective value of one member staking `deposit` when aggregate stake is
// `total_stake`: (1-fee)*[y(D)*d + mev share] + y_d*d - (C + c*d^alpha).
// For RiskModel::VariancePenalty the MEV share is y_v*P - y_v^2*P^2.
double profit(const AgentClass& cls, double deposit, double total_stake,
              const MarketConfig& config);

// Expected cash flow: same as profit() but without the variance penalty.
// Participation and reinvestment run on cash, not on the utility value.
double cash_profit(const AgentClass& cls, double deposit, double total_stake,
                   const MarketConfig& config);

// LHS - RHS of the class's first-order condition at (deposit, total_stake).
// Reduced form unless config.exact_foc is set.
double foc_residual(const AgentClass& cls, double deposit, double total_stake,
                    const MarketConfig& config);

// The unique deposit solving the class FOC at the given aggregate, 0 when the
// marginal revenue is non-positive, or the fixed deposit for inattentive
// classes.
double best_response(const AgentClass& cls, double total_stake, const MarketConfig& config);

}  // namespace stakemkt
