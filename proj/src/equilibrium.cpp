#include "stakemkt/equilibrium.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace stakemkt {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct ResponseEval {
    std::vector<double> deposits;  // per member
    double aggregate = 0.0;        // sum of class totals
};

ResponseEval aggregate_response(const MarketConfig& config, const std::vector<bool>& active,
                                double total_stake) {
    ResponseEval ev;
    ev.deposits.resize(config.classes.size(), 0.0);
    for (std::size_t i = 0; i < config.classes.size(); ++i) {
        const AgentClass& cls = config.classes[i];
        if (!active[i] || cls.population <= 0.0) continue;
        ev.deposits[i] = best_response(cls, total_stake, config);
        ev.aggregate += cls.population * ev.deposits[i];
    }
    return ev;
}

Equilibrium build_outcome(const MarketConfig& config, const std::vector<bool>& active,
                          double total_stake, SolveStatus status) {
    Equilibrium eq;
    eq.status = status;
    eq.total_stake = total_stake;
    eq.classes.reserve(config.classes.size());
    ResponseEval ev;
    if (total_stake > 0.0) ev = aggregate_response(config, active, total_stake);

    for (std::size_t i = 0; i < config.classes.size(); ++i) {
        const AgentClass& cls = config.classes[i];
        ClassOutcome out;
        out.label = cls.label;
        out.participating = active[i];
        out.deposit = (total_stake > 0.0) ? ev.deposits[i] : 0.0;
        out.total = cls.population * out.deposit;
        out.share = (total_stake > 0.0) ? out.total / total_stake : 0.0;
        out.profit_per_eth =
            (out.deposit > 0.0)
                ? profit(cls, out.deposit, total_stake, config) / out.deposit
                : kNaN;
        eq.classes.push_back(std::move(out));
    }
    return eq;
}

// Root-find for G(D) = aggregate_response(D) - D with one class subset.
Equilibrium solve_active(const MarketConfig& config, const std::vector<bool>& active,
                         const SolverOptions& opt) {
    int evals = 0;
    const auto G = [&](double D) {
        ++evals;
        return aggregate_response(config, active, D).aggregate - D;
    };

    const double lo0 = opt.bracket_low;
    const double hi0 = config.max_supply;
    const double g_lo = G(lo0);
    const double g_hi = G(hi0);

    if (g_lo <= 0.0) {
        // Nobody wants to stake even at the highest yields: empty market.
        Equilibrium eq = build_outcome(config, active, 0.0, SolveStatus::CornerLow);
        eq.residual = 0.0;
        eq.iterations = evals;
        eq.bracket_lo = lo0;
        eq.bracket_hi = hi0;
        return eq;
    }
    if (g_hi >= 0.0) {
        // Demand exceeds the supply cap across the whole bracket.
        Equilibrium eq = build_outcome(config, active, hi0, SolveStatus::CornerHigh);
        eq.residual = g_hi;
        eq.iterations = evals;
        eq.bracket_lo = lo0;
        eq.bracket_hi = hi0;
        return eq;
    }

    // Coarse log-spaced scan; G may kink where a class leaves participation,
    // and the contract picks the largest crossing when several exist.
    double lo = lo0, hi = hi0, g_at_lo = g_lo, g_at_hi = g_hi;
    bool multiple = false;
    {
        const int n = std::max(opt.scan_points, 3);
        const double step = std::log(hi0 / lo0) / (n - 1);
        double prev_x = lo0, prev_g = g_lo;
        int crossings = 0;
        for (int i = 1; i < n; ++i) {
            const double x = (i == n - 1) ? hi0 : lo0 * std::exp(step * i);
            const double g = (i == n - 1) ? g_hi : G(x);
            if ((prev_g > 0.0) != (g > 0.0)) {
                ++crossings;
                lo = prev_x;
                hi = x;
                g_at_lo = prev_g;
                g_at_hi = g;
            }
            prev_x = x;
            prev_g = g;
        }
        multiple = crossings > 1;
    }

    // Bisection to the relative-width target...
    while ((hi - lo) > opt.rel_width * hi) {
        if (evals > opt.max_iterations) {
            throw SolverError("equilibrium solve: bisection exceeded max iterations", lo, hi);
        }
        const double mid = 0.5 * (lo + hi);
        const double g = G(mid);
        if ((g > 0.0) == (g_at_lo > 0.0)) {
            lo = mid;
            g_at_lo = g;
        } else {
            hi = mid;
            g_at_hi = g;
        }
    }

    // ...then a derivative-free refinement pass (Illinois regula falsi) to
    // drive the absolute residual down.
    double root = 0.5 * (lo + hi);
    double g_root = G(root);
    {
        double fa = g_at_lo, fb = g_at_hi, a = lo, b = hi;
        while (std::fabs(g_root) > opt.abs_residual && (b - a) > 0.0) {
            if (evals > opt.max_iterations) {
                throw SolverError("equilibrium solve: refinement exceeded max iterations", a, b);
            }
            if ((g_root > 0.0) == (fa > 0.0)) {
                a = root;
                fa = g_root;
                fb *= 0.5;  // Illinois weighting keeps the step superlinear
            } else {
                b = root;
                fb = g_root;
                fa *= 0.5;
            }
            const double denom = fa - fb;
            double next = (denom != 0.0) ? a + fa * (b - a) / denom : 0.5 * (a + b);
            if (!(next > a && next < b)) next = 0.5 * (a + b);
            if (next == root || next == a || next == b) break;  // bracket at FP resolution
            root = next;
            g_root = G(root);
        }
        lo = a;
        hi = b;
    }

    Equilibrium eq = build_outcome(config, active, root, SolveStatus::Interior);
    eq.residual = g_root;
    eq.iterations = evals;
    eq.multiple_crossings = multiple;
    eq.bracket_lo = lo;
    eq.bracket_hi = hi;
    return eq;
}

std::vector<ParticipationCheck> evaluate_constraints(const Equilibrium& eq,
                                                     const MarketConfig& config) {
    std::vector<ParticipationCheck> checks;
    std::vector<double> cash(config.classes.size(), kNaN);
    for (std::size_t i = 0; i < config.classes.size(); ++i) {
        const AgentClass& cls = config.classes[i];
        const ClassOutcome& out = eq.classes[i];
        if (!cls.attentive() || cls.population <= 0.0 || !(out.deposit > 0.0)) continue;
        cash[i] = cash_profit(cls, out.deposit, eq.total_stake, config);
        checks.push_back({"profit(" + cls.label + ") >= 0", cash[i], cash[i] >= 0.0});
    }
    const int t = config.index_of("techie");
    const int r = config.index_of("retailer");
    if (t >= 0 && r >= 0 && std::isfinite(cash[t]) && std::isfinite(cash[r])) {
        const double slack = cash[t] - cash[r];
        checks.push_back({"profit(techie) >= profit(retailer)", slack, slack >= 0.0});
    }
    return checks;
}

// Class label a violated constraint removes from the market (the first
// parenthesised label in the constraint name).
std::string constrained_class(const std::string& constraint) {
    std::string label = constraint.substr(constraint.find('(') + 1);
    return label.substr(0, label.find(')'));
}

}  // namespace

const ClassOutcome* Equilibrium::find(const std::string& label) const {
    for (const ClassOutcome& c : classes) {
        if (c.label == label) return &c;
    }
    return nullptr;
}

Equilibrium solve(const MarketConfig& config, const SolverOptions& options) {
    config.validate();
    std::vector<bool> active(config.classes.size(), true);

    Equilibrium eq;
    std::vector<std::string> enforced;
    for (std::size_t round = 0; round <= config.classes.size(); ++round) {
        eq = solve_active(config, active, options);
        eq.participation = evaluate_constraints(eq, config);
        eq.pc_enforced = !enforced.empty();
        eq.enforced = enforced;
        bool any_dropped = false;
        for (const ParticipationCheck& c : eq.participation) {
            if (c.satisfied) continue;
            const int idx = config.index_of(constrained_class(c.constraint));
            if (idx >= 0 && active[static_cast<std::size_t>(idx)]) {
                active[static_cast<std::size_t>(idx)] = false;
                enforced.push_back(c.constraint);
                any_dropped = true;
            }
        }
        if (!any_dropped) return eq;
    }
    return eq;  // every attentive class removed; nothing left to violate
}

std::vector<ParticipationCheck> check_participation(const Equilibrium& eq,
                                                    const MarketConfig& config) {
    return evaluate_constraints(eq, config);
}

ComparisonReport compare(const MarketConfig& config, const IssuanceSchedule& schedule_a,
                         const IssuanceSchedule& schedule_b, const SolverOptions& options) {
    schedule_a.validate();
    schedule_b.validate();
    ComparisonReport report;
    report.base = solve(config.with_schedule(schedule_a), options);
    report.alt = solve(config.with_schedule(schedule_b), options);

    const auto pct = [](double from, double to) {
        return (from != 0.0 && std::isfinite(from) && std::isfinite(to))
                   ? (to - from) / from
                   : kNaN;
    };
    for (std::size_t i = 0; i < config.classes.size(); ++i) {
        ClassDelta d;
        d.label = config.classes[i].label;
        d.deposits_pct = pct(report.base.classes[i].total, report.alt.classes[i].total);
        d.profit_pct =
            pct(report.base.classes[i].profit_per_eth, report.alt.classes[i].profit_per_eth);
        report.deltas.push_back(std::move(d));
    }
    report.total_deposits_pct = pct(report.base.total_stake, report.alt.total_stake);
    return report;
}

}  // namespace stakemkt
