#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "stakemkt/market.hpp"

namespace stakemkt {

struct ClassOutcome {
    std::string label;
    double deposit = 0.0;         // per member, ETH
    double total = 0.0;           // population * deposit
    double share = 0.0;           // total / aggregate stake
    double profit_per_eth = 0.0;  // objective value per ETH staked (NaN at zero deposit)
    bool participating = true;    // false when the participation check removed the class
};

struct ParticipationCheck {
    std::string constraint;  // e.g. "profit(expert) >= 0", "profit(techie) >= profit(retailer)"
    double slack = 0.0;      // ETH/yr per member; >= 0 when satisfied
    bool satisfied = true;
};

enum class SolveStatus {
    Interior,    // root of G inside the bracket
    CornerLow,   // no demand for stake: D* = 0
    CornerHigh,  // responses exceed max_supply everywhere: D* = max_supply
};

struct Equilibrium {
    std::vector<ClassOutcome> classes;
    double total_stake = 0.0;  // D*
    int iterations = 0;        // aggregate-response evaluations
    double residual = 0.0;     // G(D*) in ETH
    SolveStatus status = SolveStatus::Interior;
    bool multiple_crossings = false;  // more than one sign change in the pre-scan
    bool pc_enforced = false;         // a class was zeroed and the market re-solved
    std::vector<ParticipationCheck> participation;
    std::vector<std::string> enforced;  // constraints whose violation removed a class
    double bracket_lo = 0.0, bracket_hi = 0.0;

    const ClassOutcome* find(const std::string& label) const;
};

struct SolverOptions {
    double bracket_low = 1.0;    // ETH; lower end of the search bracket
    double rel_width = 1e-6;     // bisection exit: bracket width relative to D
    double abs_residual = 1e-6;  // target |G(D*)| in ETH (contract requires < 1)
    int max_iterations = 200;
    int scan_points = 65;        // log-spaced crossing pre-scan
};

class SolverError : public std::runtime_error {
public:
    SolverError(const std::string& what, double lo, double hi)
        : std::runtime_error(what), bracket_lo(lo), bracket_hi(hi) {}
    double bracket_lo, bracket_hi;
};

// Symmetric Nash equilibrium as the root of
//   G(D) = sum_theta N_theta * best_response(theta, D) + fixed blocks - D
// on [bracket_low, max_supply]. Participation constraints are evaluated on
// expected cash profit after the solve; violating classes are zeroed and the
// market re-solved.
Equilibrium solve(const MarketConfig& config, const SolverOptions& options = {});

std::vector<ParticipationCheck> check_participation(const Equilibrium& eq,
                                                    const MarketConfig& config);

struct ClassDelta {
    std::string label;
    double deposits_pct = 0.0;  // (new - old)/old, NaN when old == 0
    double profit_pct = 0.0;    // per-ETH profit change, NaN when undefined
};

struct ComparisonReport {
    Equilibrium base, alt;
    std::vector<ClassDelta> deltas;
    double total_deposits_pct = 0.0;
};

// Solves the same market under two schedules and reports percentage changes.
ComparisonReport compare(const MarketConfig& config, const IssuanceSchedule& schedule_a,
                         const IssuanceSchedule& schedule_b, const SolverOptions& options = {});

}  // namespace stakemkt
