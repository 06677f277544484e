// Acceptance suite: one pass/fail line per criterion, exit code = failures.
// Runs against the built-in calibrated profiles only.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "stakemkt/config.hpp"
#include "stakemkt/dynamics.hpp"
#include "stakemkt/intermediary.hpp"
#include "stakemkt/regression.hpp"
#include "stakemkt/rng.hpp"
#include "stakemkt/sweep.hpp"
#include "test_util.hpp"

using namespace stakemkt;
using Clock = std::chrono::steady_clock;

namespace {

struct Gate {
    int failures = 0;
    std::vector<std::string> notes;

    void criterion(int n, const std::string& name, bool pass, const std::string& detail) {
        std::printf("%s  criterion %2d  %-38s %s\n", pass ? "PASS" : "FAIL", n, name.c_str(),
                    detail.c_str());
        if (!pass) ++failures;
    }
};

std::string fmt(double v, int digits = 4) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.*g", digits, v);
    return buf;
}

bool near(double value, double target, double rel) {
    return std::fabs(value - target) <= rel * std::fabs(target);
}

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

double bin_spearman(const BinnedTrend& trend) {
    std::vector<double> x, y;
    for (std::size_t b = 0; b < trend.midpoints.size(); ++b) {
        if (trend.counts[b] == 0 || !std::isfinite(trend.means[b])) continue;
        x.push_back(trend.midpoints[b]);
        y.push_back(trend.means[b]);
    }
    if (x.size() < 3) return 0.0;
    return testutil::spearman(x, y);
}

std::string sweep_bytes(const SweepPlan& plan, const std::vector<SweepRecord>& records) {
    std::ostringstream os;
    write_sweep_header(os, plan);
    for (const SweepRecord& rec : records) write_sweep_record(os, plan, rec);
    return os.str();
}

}  // namespace

int main() {
    Gate gate;

    // ---- 1: baseline equilibrium under the square-root schedule ----------
    {
        const auto t0 = Clock::now();
        const Equilibrium eq = solve(baseline_market());
        const double dt = seconds_since(t0);
        bool ok = dt < 1.0 && eq.status == SolveStatus::Interior;
        ok = ok && near(eq.total_stake, 33.3e6, 0.01);
        ok = ok && near(eq.find("expert")->total, 0.9e6, 0.02);
        ok = ok && near(eq.find("techie")->total, 18e6, 0.02);
        ok = ok && near(eq.find("retailer")->total, 14.4e6, 0.02);
        ok = ok && std::fabs(eq.find("expert")->share - 0.027) <= 0.005;
        ok = ok && std::fabs(eq.find("techie")->share - 0.541) <= 0.005;
        ok = ok && std::fabs(eq.find("retailer")->share - 0.432) <= 0.005;
        ok = ok && std::fabs(eq.find("expert")->profit_per_eth - 0.008) <= 0.001;
        ok = ok && std::fabs(eq.find("techie")->profit_per_eth - 0.018) <= 0.001;
        ok = ok && std::fabs(eq.find("retailer")->profit_per_eth - 0.0095) <= 0.001;
        gate.criterion(1, "baseline equilibrium", ok,
                       "D*=" + fmt(eq.total_stake / 1e6) + "M in " + fmt(dt, 2) + "s");
    }

    // ---- 2: baseline under the damped schedule ---------------------------
    {
        const ComparisonReport r = compare(baseline_market(), IssuanceSchedule::current(),
                                           IssuanceSchedule::tempered());
        bool ok = near(r.alt.total_stake, 24.84e6, 0.01);
        ok = ok && std::fabs(r.deltas[0].deposits_pct - -0.178) <= 0.015;
        ok = ok && std::fabs(r.deltas[1].deposits_pct - -0.206) <= 0.015;
        ok = ok && std::fabs(r.deltas[2].deposits_pct - -0.315) <= 0.015;
        ok = ok && std::fabs(r.total_deposits_pct - -0.254) <= 0.01;
        gate.criterion(2, "damped-schedule comparison", ok,
                       "D*=" + fmt(r.alt.total_stake / 1e6) + "M, total " +
                           fmt(100 * r.total_deposits_pct, 3) + "%");
    }

    // ---- 3: MEV-variance extension ---------------------------------------
    {
        const ComparisonReport r = compare(mev_variance_market(), IssuanceSchedule::current(),
                                           IssuanceSchedule::tempered());
        const double solo_a = r.base.find("expert")->total;
        const double solo_b = r.alt.find("expert")->total;
        bool ok = near(solo_a, 0.77e6, 0.02) && near(solo_b, 0.58e6, 0.02);
        ok = ok && std::fabs(r.deltas[0].deposits_pct - -0.246) <= 0.015;
        ok = ok && r.alt.find("expert")->profit_per_eth <= 0.0005;
        gate.criterion(3, "MEV-variance extension", ok,
                       "solo " + fmt(solo_a / 1e6) + "M -> " + fmt(solo_b / 1e6) + "M, profit " +
                           fmt(100 * r.alt.find("expert")->profit_per_eth, 2) + "%");
    }

    // ---- 4: inattentive extension ----------------------------------------
    {
        const ComparisonReport r = compare(inattentive_market(), IssuanceSchedule::current(),
                                           IssuanceSchedule::tempered());
        const ClassDelta* idle = nullptr;
        const ClassDelta* inst = nullptr;
        for (const ClassDelta& d : r.deltas) {
            if (d.label == "inattentive") idle = &d;
            if (d.label == "institution") inst = &d;
        }
        bool ok = near(r.base.total_stake, 33.1e6, 0.02) && near(r.alt.total_stake, 25.7e6, 0.02);
        ok = ok && idle && idle->deposits_pct == 0.0;
        ok = ok && inst && std::fabs(inst->deposits_pct - -0.364) <= 0.02;
        gate.criterion(4, "inattentive extension", ok,
                       "totals " + fmt(r.base.total_stake / 1e6) + "M -> " +
                           fmt(r.alt.total_stake / 1e6) + "M, institutions " +
                           fmt(100 * (inst ? inst->deposits_pct : 0), 3) + "%");
    }

    // ---- 5: intermediary with market power -------------------------------
    {
        MarketConfig imposed = inattentive_market().with_schedule(IssuanceSchedule::tempered());
        imposed.classes[1].fee = 0.13;
        const Equilibrium eq = solve(imposed);
        bool ok = near(eq.find("expert")->total, 0.57e6, 0.02);
        ok = ok && near(eq.find("techie")->total, 13.4e6, 0.02);
        ok = ok && near(eq.find("institution")->total, 5e6, 0.02);
        ok = ok && near(eq.find("inattentive")->total, 6.5e6, 0.02);
        ok = ok && near(eq.total_stake, 25.5e6, 0.02);

        const FeeSearchResult search =
            profit_matching_fee(default_intermediary(), inattentive_market(),
                                IssuanceSchedule::current(), IssuanceSchedule::tempered());
        ok = ok && !search.shortfall && search.matched_fee > 0.10;
        gate.criterion(5, "intermediary fee response", ok,
                       "D*=" + fmt(eq.total_stake / 1e6) + "M at 13%, matched fee " +
                           fmt(100 * search.matched_fee, 3) + "% (reported: 13%)");
    }

    // ---- 6: sensitivity trend signs at desk scale ------------------------
    {
        const auto t0 = Clock::now();
        const SweepPlan plan = SweepPlan::default_ranges(
            baseline_market(), IssuanceSchedule::current(), IssuanceSchedule::tempered());
        const std::vector<SweepRecord> records = run_sweep(plan, 10000, 1, 1);
        const double dt = seconds_since(t0);

        const auto rho = [&](const char* param, const char* column) {
            return bin_spearman(bin_trend(plan, records, param, column, 20));
        };
        const double r1a = rho("expert.fixed_cost", "expert");
        const double r1b = rho("expert.var_coeff", "expert");
        const double r1c = rho("expert.exponent", "expert");
        const double r2a = rho("mev_total", "techie");
        const double r2b = rho("techie.defi_yield", "techie");
        const double r3 = rho("techie.defi_yield", "expert");
        const bool ok = dt < 600.0 && r1a > 0.5 && r1b > 0.5 && r1c > 0.5 && r2a > 0.5 &&
                        r2b > 0.5 && r3 < -0.5;
        gate.criterion(6, "sensitivity trend signs", ok,
                       "rho=[" + fmt(r1a, 2) + "," + fmt(r1b, 2) + "," + fmt(r1c, 2) + "," +
                           fmt(r2a, 2) + "," + fmt(r2b, 2) + "," + fmt(r3, 2) + "] in " +
                           fmt(dt, 3) + "s");
    }

    // ---- 7: calibration valley -------------------------------------------
    {
        const MarketConfig base = baseline_market();
        const double ct = base.classes[1].cost.variable_coeff;
        const double cr = base.classes[2].cost.variable_coeff;
        const CalibrationSurface surf =
            calibration_grid(base, "techie", {0.5 * ct, 2.0 * ct}, "retailer",
                             {0.5 * cr, 2.0 * cr}, reference_shares(), 20, 33, 1);
        const std::size_t close = surf.cells_near_min(1.1);
        gate.criterion(7, "calibration distance valley", close > 1,
                       std::to_string(close) + " cells within 1.1x of min " +
                           fmt(surf.min_distance));
    }

    // ---- 8: reinvestment dilution ----------------------------------------
    {
        const MarketConfig cur = baseline_market();
        const MarketConfig tmp = cur.with_schedule(IssuanceSchedule::tempered());
        const Trajectory a = project(solve(cur), cur, 120e6, 20);
        const Trajectory b = project(solve(tmp), tmp, 120e6, 20);
        bool ok = true;
        for (std::size_t t = 1; t <= 20; ++t) {
            ok = ok && a.points[t].ratios[0] < a.points[t - 1].ratios[0];
            ok = ok && b.points[t].ratios[0] < b.points[t - 1].ratios[0];
            ok = ok && b.points[t].ratio_pct[0] < a.points[t].ratio_pct[0];
        }
        gate.criterion(8, "reinvestment dilution", ok,
                       "20y solo ratio " + fmt(100 * a.points[20].ratio_pct[0], 3) + "% vs " +
                           fmt(100 * b.points[20].ratio_pct[0], 3) + "%");
    }

    // ---- 9: estimator oracle suite ----------------------------------------
    {
        bool ok = true;
        std::string detail;

        // (a) instruments identical to the regressors collapse to OLS
        {
            DrawRng rng(17);
            const int n = 300;
            Eigen::VectorXd x(n), y(n);
            for (int i = 0; i < n; ++i) {
                x[i] = rng.normal();
                y[i] = 1.0 + 2.0 * x[i] + rng.normal();
            }
            Eigen::MatrixXd X(n, 2);
            X.col(0).setOnes();
            X.col(1) = x;
            Eigen::MatrixXd Z(n, 1);
            Z.col(0) = x;
            const RegressionResult direct = ols(y, X, {"const", "x"}, ErrorType::Classical);
            const TslsResult iv = tsls(y, X, {"const", "x"}, {1}, Z, {"z"}, ErrorType::Classical);
            ok = ok && std::fabs(iv.second_stage.coef_of("x") - direct.coef_of("x")) < 1e-12;
        }

        // (b) just-identified covariance ratio on the frozen fixture
        {
            Eigen::VectorXd z(4), x(4), y(4);
            z << 0, 0, 1, 1;
            x << 1, 2, 3, 5;
            y << 2, 3, 7, 9;
            Eigen::MatrixXd X(4, 2);
            X.col(0).setOnes();
            X.col(1) = x;
            Eigen::MatrixXd Z(4, 1);
            Z.col(0) = z;
            const TslsResult iv = tsls(y, X, {"const", "x"}, {1}, Z, {"z"}, ErrorType::Classical);
            const double beta = iv.second_stage.coef_of("x");
            ok = ok && std::fabs(beta - 2.2) < 1e-12;
            detail += "iv=" + fmt(beta, 8);
        }

        // (c) endogenous DGP: instrument recovers the planted slope
        {
            DrawRng rng(20240915);
            const int n = 20000;
            Eigen::VectorXd x(n), y(n), z(n);
            for (int i = 0; i < n; ++i) {
                const double confound = rng.normal();
                z[i] = rng.normal();
                x[i] = z[i] + confound + 0.5 * rng.normal();
                y[i] = x[i] + confound + 0.5 * rng.normal();
            }
            Eigen::MatrixXd X(n, 2);
            X.col(0).setOnes();
            X.col(1) = x;
            Eigen::MatrixXd Z(n, 1);
            Z.col(0) = z;
            const RegressionResult biased = ols(y, X, {"const", "x"});
            const TslsResult iv = tsls(y, X, {"const", "x"}, {1}, Z, {"z"});
            ok = ok && std::fabs(biased.coef_of("x") - 1.0) > 0.05;
            ok = ok && std::fabs(iv.second_stage.coef_of("x") - 1.0) < 0.02;
            detail += ", 2sls=" + fmt(iv.second_stage.coef_of("x"), 4) +
                      " ols=" + fmt(biased.coef_of("x"), 4);
        }

        // (d) HC1 equals the brute-force sandwich
        {
            DrawRng rng(123);
            const int n = 80;
            Eigen::MatrixXd X(n, 2);
            Eigen::VectorXd y(n);
            for (int i = 0; i < n; ++i) {
                X(i, 0) = 1.0;
                X(i, 1) = rng.uniform(0.0, 5.0);
                y[i] = 0.5 + 2.0 * X(i, 1) + (0.1 + X(i, 1)) * rng.normal();
            }
            const RegressionResult r = ols(y, X, {"const", "x"}, ErrorType::HC1);
            double xtx[2][2] = {}, meat[2][2] = {};
            for (int i = 0; i < n; ++i) {
                double e = y[i] - r.coef[0] * X(i, 0) - r.coef[1] * X(i, 1);
                for (int a = 0; a < 2; ++a) {
                    for (int b = 0; b < 2; ++b) {
                        xtx[a][b] += X(i, a) * X(i, b);
                        meat[a][b] += e * e * X(i, a) * X(i, b);
                    }
                }
            }
            const double det = xtx[0][0] * xtx[1][1] - xtx[0][1] * xtx[1][0];
            const double inv[2][2] = {{xtx[1][1] / det, -xtx[0][1] / det},
                                      {-xtx[1][0] / det, xtx[0][0] / det}};
            const double scale = static_cast<double>(n) / (n - 2);
            for (int a = 0; a < 2 && ok; ++a) {
                double v = 0.0;
                for (int p = 0; p < 2; ++p) {
                    for (int q = 0; q < 2; ++q) v += inv[a][p] * meat[p][q] * inv[q][a];
                }
                const double se = std::sqrt(v * scale);
                ok = ok && std::fabs(r.se[a] - se) <= 1e-10 * se;
            }
        }

        // (e) the weak-instrument flag keys off the first-stage F at 10
        {
            DrawRng rng(5);
            const int n = 400;
            Eigen::VectorXd x(n), y(n), weak(n), strong(n);
            for (int i = 0; i < n; ++i) {
                const double u = rng.normal();
                strong[i] = rng.normal();
                weak[i] = rng.normal();
                x[i] = strong[i] + 0.02 * weak[i] + u + rng.normal();
                y[i] = x[i] + u;
            }
            Eigen::MatrixXd X(n, 2);
            X.col(0).setOnes();
            X.col(1) = x;
            Eigen::MatrixXd Zw(n, 1), Zs(n, 1);
            Zw.col(0) = weak;
            Zs.col(0) = strong;
            const TslsResult a = tsls(y, X, {"const", "x"}, {1}, Zw, {"z"});
            const TslsResult b = tsls(y, X, {"const", "x"}, {1}, Zs, {"z"});
            ok = ok && a.weak_instruments == (a.first_stages[0].f_statistic < 10.0);
            ok = ok && b.weak_instruments == (b.first_stages[0].f_statistic < 10.0);
            ok = ok && a.weak_instruments && !b.weak_instruments;
        }

        gate.criterion(9, "estimator oracle suite", ok, detail);
    }

    // ---- 10: sweep determinism across worker counts ----------------------
    {
        const SweepPlan plan = SweepPlan::default_ranges(
            baseline_market(), IssuanceSchedule::current(), IssuanceSchedule::tempered());
        const std::string serial = sweep_bytes(plan, run_sweep_serial(plan, 2000, 2024));
        const std::string one = sweep_bytes(plan, run_sweep(plan, 2000, 2024, 1));
        const std::string many = sweep_bytes(plan, run_sweep(plan, 2000, 2024, 4));
        const bool ok = serial == one && serial == many;
        gate.criterion(10, "sweep determinism", ok,
                       ok ? "byte-identical across 1/4/serial workers" : "streams diverge");
    }

    if (gate.failures == 0) {
        std::printf("all criteria passed\n");
    } else {
        std::printf("%d criteria FAILED\n", gate.failures);
    }
    return gate.failures;
}
