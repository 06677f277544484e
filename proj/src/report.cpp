#include "stakemkt/report.hpp"

#include <cmath>
#include <cstdio>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace stakemkt {

namespace {

const char* status_name(SolveStatus s) {
    switch (s) {
        case SolveStatus::Interior: return "interior";
        case SolveStatus::CornerLow: return "corner_low";
        case SolveStatus::CornerHigh: return "corner_high";
    }
    return "unknown";
}

std::string fmt_g(double v, int digits) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.*g", digits, v);
    return buf;
}

// Millions of ETH with a trailing M, the unit the summary tables use.
std::string fmt_meth(double eth) { return fmt_table(eth / 1e6) + "M"; }

}  // namespace

std::string fmt_full(double v) { return fmt_g(v, 12); }
std::string fmt_table(double v) { return fmt_g(v, 6); }

std::string fmt_pct(double v) {
    if (!std::isfinite(v)) return "n/a";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.1f%%", v * 100.0);
    return buf;
}

nlohmann::json RunManifest::to_json() const {
    return {{"command", command},   {"config", config_path}, {"schedule_a", schedule_a},
            {"schedule_b", schedule_b}, {"seed", seed},      {"out", out_path},
            {"version", version}};
}

void RunManifest::write_comment_block(std::ostream& os) const {
    os << "# stakemkt " << version << '\n';
    os << "# command: " << command << '\n';
    os << "# config: " << config_path << '\n';
    os << "# schedule_a: " << schedule_a << '\n';
    if (!schedule_b.empty()) os << "# schedule_b: " << schedule_b << '\n';
    os << "# seed: " << seed << '\n';
    os << "# out: " << out_path << '\n';
}

nlohmann::json to_json(const ClassOutcome& out) {
    return {{"label", out.label},
            {"deposit", out.deposit},
            {"total", out.total},
            {"share", out.share},
            {"profit_per_eth", out.profit_per_eth},
            {"participating", out.participating}};
}

nlohmann::json to_json(const Equilibrium& eq) {
    nlohmann::json classes = nlohmann::json::array();
    for (const ClassOutcome& out : eq.classes) classes.push_back(to_json(out));
    nlohmann::json participation = nlohmann::json::array();
    for (const ParticipationCheck& c : eq.participation) {
        participation.push_back(
            {{"constraint", c.constraint}, {"slack", c.slack}, {"satisfied", c.satisfied}});
    }
    return {{"classes", classes},
            {"total_stake", eq.total_stake},
            {"status", status_name(eq.status)},
            {"iterations", eq.iterations},
            {"residual", eq.residual},
            {"multiple_crossings", eq.multiple_crossings},
            {"pc_enforced", eq.pc_enforced},
            {"participation", participation}};
}

nlohmann::json to_json(const ComparisonReport& report) {
    nlohmann::json deltas = nlohmann::json::array();
    for (const ClassDelta& d : report.deltas) {
        deltas.push_back({{"label", d.label},
                          {"deposits_pct", d.deposits_pct},
                          {"profit_pct", d.profit_pct}});
    }
    return {{"base", to_json(report.base)},
            {"alt", to_json(report.alt)},
            {"deltas", deltas},
            {"total_deposits_pct", report.total_deposits_pct}};
}

nlohmann::json to_json(const RegressionResult& result) {
    nlohmann::json coeffs = nlohmann::json::array();
    for (std::size_t i = 0; i < result.names.size(); ++i) {
        coeffs.push_back({{"name", result.names[i]},
                          {"coef", result.coef[static_cast<Eigen::Index>(i)]},
                          {"se", result.se[static_cast<Eigen::Index>(i)]},
                          {"t", result.tstat[static_cast<Eigen::Index>(i)]}});
    }
    const char* stage = result.stage == Stage::OLS
                            ? "ols"
                            : (result.stage == Stage::FirstStage ? "first_stage" : "2sls");
    return {{"stage", stage},
            {"coefficients", coeffs},
            {"r_squared", result.r_squared},
            {"n_obs", result.n_obs},
            {"f_statistic", result.f_statistic},
            {"f_hypothesis", result.f_hypothesis},
            {"f_df", {result.f_df1, result.f_df2}},
            {"robust", result.errors != ErrorType::Classical},
            {"weak_instruments", result.weak_instruments}};
}

nlohmann::json to_json(const EstimationReport& report) {
    nlohmann::json j;
    j["response"] = report.spec.response.name();
    j["n_obs"] = report.n_obs;
    j["weekly"] = report.spec.weekly;
    j["ols"] = to_json(report.ols);
    if (report.has_iv) {
        nlohmann::json stages = nlohmann::json::array();
        for (const RegressionResult& fs : report.first_stages) stages.push_back(to_json(fs));
        j["first_stages"] = stages;
        j["tsls"] = to_json(report.second_stage);
        j["weak_instruments"] = report.weak_instruments;
    }
    return j;
}

nlohmann::json to_json(const FeeSearchResult& result) {
    nlohmann::json curve = nlohmann::json::array();
    for (const FeePoint& pt : result.curve) {
        curve.push_back({{"fee", pt.fee},
                         {"profit", pt.profit},
                         {"fee_base", pt.fee_base},
                         {"techie_total", pt.techie_total},
                         {"total_stake", pt.total_stake}});
    }
    return {{"baseline_fee", result.baseline_fee},
            {"baseline_profit", result.baseline_profit},
            {"matched_fee", result.matched_fee},
            {"matched_profit", result.matched_profit},
            {"shortfall", result.shortfall},
            {"curve", curve}};
}

nlohmann::json to_json(const IntermediaryReport& report) {
    nlohmann::json providers = nlohmann::json::array();
    for (const CsspReport& p : report.providers) {
        providers.push_back({{"index", p.index},
                             {"intermediated_flow", p.intermediated_flow},
                             {"direct_flow", p.direct_flow},
                             {"direct_fee_income", p.direct_fee_income},
                             {"passthrough_income", p.passthrough_income},
                             {"cost", p.cost},
                             {"profit", p.profit}});
    }
    return {{"user_fee", report.user_fee},
            {"cost_scale", report.cost_scale},
            {"fee_base", report.state.fee_base},
            {"techie_total", report.state.techie_total},
            {"dssp_profit", report.dssp_profit},
            {"equilibrium", to_json(report.state.eq)},
            {"providers", providers},
            {"min_provider_slack", report.min_provider_slack}};
}

nlohmann::json to_json(const Trajectory& traj) {
    nlohmann::json points = nlohmann::json::array();
    for (const TrajectoryPoint& pt : traj.points) {
        points.push_back({{"year", pt.year},
                          {"levels", pt.levels},
                          {"total_level", pt.total_level},
                          {"supply", pt.supply},
                          {"ratios", pt.ratios},
                          {"level_pct", pt.level_pct},
                          {"ratio_pct", pt.ratio_pct}});
    }
    return {{"labels", traj.labels}, {"initial_supply", traj.initial_supply}, {"points", points}};
}

namespace {

void equilibrium_rows(std::ostream& os, const Equilibrium& eq, const MarketConfig& config,
                      const ComparisonReport* cmp) {
    for (std::size_t i = 0; i < eq.classes.size(); ++i) {
        const ClassOutcome& a = eq.classes[i];
        os << a.label << ',' << fmt_full(config.classes[i].population) << ','
           << fmt_full(a.total) << ',' << fmt_full(a.share) << ','
           << fmt_full(a.profit_per_eth);
        if (cmp) {
            const ClassOutcome& b = cmp->alt.classes[i];
            os << ',' << fmt_full(b.total) << ',' << fmt_full(b.share) << ','
               << fmt_full(b.profit_per_eth) << ',' << fmt_full(cmp->deltas[i].deposits_pct)
               << ',' << fmt_full(cmp->deltas[i].profit_pct);
        }
        os << '\n';
    }
    os << "total,," << fmt_full(eq.total_stake) << ",,";
    if (cmp) {
        os << ',' << fmt_full(cmp->alt.total_stake) << ",,," << fmt_full(cmp->total_deposits_pct)
           << ',';
    }
    os << '\n';
}

}  // namespace

void write_equilibrium_csv(std::ostream& os, const Equilibrium& eq, const MarketConfig& config) {
    os << "type,num,deps,ratio,profit\n";
    equilibrium_rows(os, eq, config, nullptr);
}

void write_comparison_csv(std::ostream& os, const ComparisonReport& report,
                          const MarketConfig& config) {
    os << "type,num,deps_a,ratio_a,profit_a,deps_b,ratio_b,profit_b,delta_deps,delta_profit\n";
    equilibrium_rows(os, report.base, config, &report);
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
    os << "year,class,level,ratio,level_pct,ratio_pct,supply\n";
    for (const TrajectoryPoint& pt : traj.points) {
        for (std::size_t i = 0; i < traj.labels.size(); ++i) {
            os << pt.year << ',' << traj.labels[i] << ',' << fmt_full(pt.levels[i]) << ','
               << fmt_full(pt.ratios[i]) << ',' << fmt_full(pt.level_pct[i]) << ','
               << fmt_full(pt.ratio_pct[i]) << ',' << fmt_full(pt.supply) << '\n';
        }
    }
}

void write_surface_csv(std::ostream& os, const CalibrationSurface& surf) {
    os << surf.class_a << "_var_coeff," << surf.class_b << "_var_coeff,distance";
    for (const std::string& label : surf.share_labels) os << ',' << label << "_share";
    os << '\n';
    const std::size_t n_b = surf.values_b.size();
    for (std::size_t ia = 0; ia < surf.values_a.size(); ++ia) {
        for (std::size_t ib = 0; ib < n_b; ++ib) {
            const std::size_t cell = ia * n_b + ib;
            os << fmt_full(surf.values_a[ia]) << ',' << fmt_full(surf.values_b[ib]) << ','
               << fmt_full(surf.distance[cell]);
            for (std::size_t k = 0; k < surf.share_labels.size(); ++k) {
                os << ',' << fmt_full(surf.shares[cell * surf.share_labels.size() + k]);
            }
            os << '\n';
        }
    }
}

void write_trend_csv(std::ostream& os, const BinnedTrend& trend) {
    os << "bin_midpoint,mean_" << trend.column << "_pct,count\n";
    for (std::size_t b = 0; b < trend.midpoints.size(); ++b) {
        os << fmt_full(trend.midpoints[b]) << ',' << fmt_full(trend.means[b]) << ','
           << trend.counts[b] << '\n';
    }
}

namespace {

void table_row(std::ostream& os, std::initializer_list<std::string> cells) {
    for (const std::string& cell : cells) os << std::setw(12) << cell;
    os << '\n';
}

std::string fmt_num(double population) {
    if (population >= 1e6) return fmt_table(population / 1e6) + "M";
    if (population >= 1e3) return fmt_table(population / 1e3) + "K";
    return fmt_table(population);
}

}  // namespace

std::string render_table(const Equilibrium& eq, const MarketConfig& config) {
    std::ostringstream os;
    os << std::left;
    table_row(os, {"type", "num", "deps", "ratio", "profit"});
    for (std::size_t i = 0; i < eq.classes.size(); ++i) {
        const ClassOutcome& a = eq.classes[i];
        table_row(os, {a.label, fmt_num(config.classes[i].population), fmt_meth(a.total),
                       fmt_pct(a.share), fmt_pct(a.profit_per_eth)});
    }
    table_row(os, {"total", "", fmt_meth(eq.total_stake), "", ""});
    if (eq.status != SolveStatus::Interior) {
        os << "status: " << status_name(eq.status) << '\n';
    }
    return os.str();
}

std::string render_table(const ComparisonReport& report, const MarketConfig& config) {
    std::ostringstream os;
    os << std::left;
    table_row(os, {"type", "num", "deps_a", "ratio_a", "profit_a", "deps_b", "ratio_b",
                   "profit_b", "d_deps", "d_profit"});
    for (std::size_t i = 0; i < report.base.classes.size(); ++i) {
        const ClassOutcome& a = report.base.classes[i];
        const ClassOutcome& b = report.alt.classes[i];
        table_row(os, {a.label, fmt_num(config.classes[i].population), fmt_meth(a.total),
                       fmt_pct(a.share), fmt_pct(a.profit_per_eth), fmt_meth(b.total),
                       fmt_pct(b.share), fmt_pct(b.profit_per_eth),
                       fmt_pct(report.deltas[i].deposits_pct),
                       fmt_pct(report.deltas[i].profit_pct)});
    }
    table_row(os, {"total", "", fmt_meth(report.base.total_stake), "", "",
                   fmt_meth(report.alt.total_stake), "", "", fmt_pct(report.total_deposits_pct),
                   ""});
    return os.str();
}

namespace {

void render_stage(std::ostringstream& os, const RegressionResult& r, const std::string& title) {
    os << title << " (n=" << r.n_obs << ")\n";
    for (std::size_t i = 0; i < r.names.size(); ++i) {
        os << "  " << std::left << std::setw(28) << r.names[i] << std::right << std::setw(12)
           << fmt_table(r.coef[static_cast<Eigen::Index>(i)]) << "  ("
           << fmt_table(r.se[static_cast<Eigen::Index>(i)]) << ")\n";
    }
    os << "  " << std::left << std::setw(28) << "R-squared" << std::right << std::setw(12)
       << fmt_table(r.r_squared) << '\n';
    os << "  " << std::left << std::setw(28) << ("F (" + r.f_hypothesis + ")") << std::right
       << std::setw(12) << fmt_table(r.f_statistic) << '\n';
    if (r.stage == Stage::FirstStage && r.weak_instruments) {
        os << "  [weak instruments: first-stage F below 10]\n";
    }
    os << '\n';
}

}  // namespace

std::string render_table(const EstimationReport& report) {
    std::ostringstream os;
    os << "response: " << report.spec.response.name()
       << (report.spec.weekly ? " (weekly)" : " (daily)") << "  errors: "
       << (report.spec.robust ? "robust (HC1)" : "classical") << "\n\n";
    render_stage(os, report.ols, "OLS");
    for (std::size_t i = 0; i < report.first_stages.size(); ++i) {
        render_stage(os, report.first_stages[i],
                     "First stage [" + report.spec.endogenous[i] + "]");
    }
    if (report.has_iv) render_stage(os, report.second_stage, "2SLS");
    return os.str();
}

}  // namespace stakemkt
