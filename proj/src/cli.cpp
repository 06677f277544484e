#include "stakemkt/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "stakemkt/config.hpp"
#include "stakemkt/dynamics.hpp"
#include "stakemkt/report.hpp"

namespace stakemkt {

namespace {

struct CommonOptions {
    std::string config_path;
    std::string out = "-";
    std::string format = "table";
    bool json_errors = false;
};

RunConfig load_config(const CommonOptions& opts) {
    if (opts.config_path.empty()) return RunConfig{};
    return load_run_config_file(opts.config_path);
}

IssuanceSchedule pick_schedule(const std::string& name, const MarketConfig& market) {
    if (name.empty() || name == "custom" || name == "config") return market.schedule;
    return IssuanceSchedule::by_name(name);
}

std::filesystem::path resolve_out(const std::string& out) {
    std::filesystem::path path(out);
    if (path.is_relative()) {
        if (const char* dir = std::getenv("STAKEMKT_OUT_DIR")) {
            path = std::filesystem::path(dir) / path;
        }
    }
    return path;
}

// Temp-file-plus-rename so a crashed run never leaves a truncated output.
void emit(const std::string& out, const std::function<void(std::ostream&)>& writer) {
    if (out.empty() || out == "-") {
        writer(std::cout);
        std::cout.flush();
        return;
    }
    const std::filesystem::path path = resolve_out(out);
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw std::runtime_error("cannot write '" + tmp.string() + "'");
        writer(f);
        f.flush();
        if (!f) throw std::runtime_error("write failed for '" + tmp.string() + "'");
    }
    std::filesystem::rename(tmp, path);
}

RunManifest make_manifest(const std::string& command, const CommonOptions& opts,
                          const std::string& schedule_a, const std::string& schedule_b,
                          std::uint64_t seed) {
    RunManifest m;
    m.command = command;
    m.config_path = opts.config_path.empty() ? "builtin" : opts.config_path;
    m.schedule_a = schedule_a;
    m.schedule_b = schedule_b;
    m.seed = seed;
    m.out_path = opts.out;
    m.version = kVersion;
    return m;
}

void emit_json(const CommonOptions& opts, const RunManifest& manifest, nlohmann::json payload) {
    payload["manifest"] = manifest.to_json();
    emit(opts.out, [&](std::ostream& os) { os << payload.dump(2) << '\n'; });
}

int cmd_solve(const CommonOptions& opts, const std::string& schedule) {
    RunConfig run = load_config(opts);
    const IssuanceSchedule s = pick_schedule(schedule, run.market);
    const MarketConfig market = run.market.with_schedule(s);
    const Equilibrium eq = solve(market);
    const RunManifest manifest = make_manifest("solve", opts, s.name(), "", 0);

    if (opts.format == "json") {
        emit_json(opts, manifest, {{"equilibrium", to_json(eq)}});
    } else if (opts.format == "csv") {
        emit(opts.out, [&](std::ostream& os) {
            manifest.write_comment_block(os);
            write_equilibrium_csv(os, eq, market);
        });
    } else {
        emit(opts.out, [&](std::ostream& os) {
            manifest.write_comment_block(os);
            os << render_table(eq, market);
        });
    }
    return 0;
}

int cmd_compare(const CommonOptions& opts, const std::string& schedule_a,
                const std::string& schedule_b) {
    RunConfig run = load_config(opts);
    const IssuanceSchedule a = pick_schedule(schedule_a, run.market);
    const IssuanceSchedule b = pick_schedule(schedule_b, run.market);
    const ComparisonReport report = compare(run.market, a, b);
    const RunManifest manifest = make_manifest("compare", opts, a.name(), b.name(), 0);

    if (opts.format == "json") {
        emit_json(opts, manifest, {{"comparison", to_json(report)}});
    } else if (opts.format == "csv") {
        emit(opts.out, [&](std::ostream& os) {
            manifest.write_comment_block(os);
            write_comparison_csv(os, report, run.market);
        });
    } else {
        emit(opts.out, [&](std::ostream& os) {
            manifest.write_comment_block(os);
            os << render_table(report, run.market);
        });
    }
    return 0;
}

int cmd_sweep(const CommonOptions& opts, const std::string& schedule_a,
              const std::string& schedule_b, std::uint64_t draws_override, std::int64_t seed_override,
              int threads_override, const std::vector<std::string>& trends, int bins_override) {
    RunConfig run = load_config(opts);
    if (draws_override > 0) run.sweep.draws = draws_override;
    if (seed_override >= 0) run.sweep.seed = static_cast<std::uint64_t>(seed_override);
    if (threads_override != 0) run.sweep.threads = threads_override;
    if (bins_override > 0) run.sweep.bins = bins_override;

    const IssuanceSchedule a = pick_schedule(schedule_a, run.market);
    const IssuanceSchedule b = pick_schedule(schedule_b, run.market);
    const SweepPlan plan = SweepPlan::default_ranges(run.market, a, b);
    const RunManifest manifest = make_manifest("sweep", opts, a.name(), b.name(), run.sweep.seed);

    if (trends.empty()) {
        emit(opts.out, [&](std::ostream& os) {
            manifest.write_comment_block(os);
            write_sweep_header(os, plan);
            run_sweep(plan, run.sweep.draws, run.sweep.seed, run.sweep.threads,
                      [&](const SweepRecord& rec) { write_sweep_record(os, plan, rec); });
        });
        return 0;
    }

    // Trends need the full record set; collect once, derive every requested
    // parameter:column pair alongside the record stream.
    const std::vector<SweepRecord> records =
        run_sweep(plan, run.sweep.draws, run.sweep.seed, run.sweep.threads);
    emit(opts.out, [&](std::ostream& os) {
        manifest.write_comment_block(os);
        write_sweep_header(os, plan);
        for (const SweepRecord& rec : records) write_sweep_record(os, plan, rec);
    });
    for (const std::string& spec : trends) {
        const std::size_t colon = spec.find(':');
        if (colon == std::string::npos) {
            throw std::runtime_error("--trend expects <parameter>:<class|total>, got '" + spec + "'");
        }
        const std::string parameter = spec.substr(0, colon);
        const std::string column = spec.substr(colon + 1);
        const BinnedTrend trend = bin_trend(plan, records, parameter, column, run.sweep.bins);
        std::string trend_out = opts.out;
        if (trend_out != "-" && !trend_out.empty()) {
            std::string suffix = parameter + "_" + column;
            for (char& ch : suffix) {
                if (ch == '.') ch = '_';
            }
            const std::filesystem::path base(trend_out);
            std::filesystem::path p = base.parent_path() / (base.stem().string() + "_trend_" +
                                                            suffix + base.extension().string());
            trend_out = p.string();
        }
        emit(trend_out, [&](std::ostream& os) {
            manifest.write_comment_block(os);
            os << "# trend: " << parameter << " vs " << column << '\n';
            write_trend_csv(os, trend);
        });
    }
    return 0;
}

int cmd_calibrate(const CommonOptions& opts, int cells_override, int threads) {
    RunConfig run = load_config(opts);
    if (cells_override > 0) run.calibrate.cells = cells_override;
    const CalibrateSettings& cal = run.calibrate;

    const auto coeff = [&](const std::string& label) {
        const AgentClass* cls = run.market.find(label);
        if (!cls) throw std::runtime_error("calibrate: unknown class '" + label + "'");
        return cls->cost.variable_coeff;
    };
    const double ca = coeff(cal.class_a);
    const double cb = coeff(cal.class_b);
    const CalibrationSurface surf = calibration_grid(
        run.market, cal.class_a, {cal.lo_scale * ca, cal.hi_scale * ca}, cal.class_b,
        {cal.lo_scale * cb, cal.hi_scale * cb}, cal.reference, cal.cells, cal.draws_per_cell,
        cal.seed, threads);

    const RunManifest manifest =
        make_manifest("calibrate", opts, run.market.schedule.name(), "", cal.seed);
    emit(opts.out, [&](std::ostream& os) {
        manifest.write_comment_block(os);
        os << "# min_distance: " << fmt_full(surf.min_distance) << '\n';
        write_surface_csv(os, surf);
    });
    return 0;
}

int cmd_dynamics(const CommonOptions& opts, const std::string& schedule, int horizon_override,
                 double supply_override) {
    RunConfig run = load_config(opts);
    if (horizon_override > 0) run.dynamics.horizon = horizon_override;
    if (supply_override > 0.0) run.dynamics.initial_supply = supply_override;

    const IssuanceSchedule s = pick_schedule(schedule, run.market);
    const MarketConfig market = run.market.with_schedule(s);
    const Equilibrium eq = solve(market);
    const Trajectory traj =
        project(eq, market, run.dynamics.initial_supply, run.dynamics.horizon);

    const RunManifest manifest = make_manifest("dynamics", opts, s.name(), "", 0);
    if (opts.format == "json") {
        emit_json(opts, manifest, {{"trajectory", to_json(traj)}});
    } else {
        emit(opts.out, [&](std::ostream& os) {
            manifest.write_comment_block(os);
            write_trajectory_csv(os, traj);
        });
    }
    return 0;
}

int cmd_regress(const CommonOptions& opts, const std::string& data_path) {
    RunConfig run = load_config(opts);
    if (!run.model) {
        throw std::runtime_error("regress: config has no [regress] model section");
    }
    const Panel panel = load_panel_file(data_path);
    const EstimationReport report = estimate(panel, *run.model);

    const RunManifest manifest = make_manifest("regress", opts, "", "", 0);
    if (opts.format == "table") {
        emit(opts.out, [&](std::ostream& os) {
            manifest.write_comment_block(os);
            os << render_table(report);
        });
    } else {
        emit_json(opts, manifest, {{"estimation", to_json(report)}});
    }
    return 0;
}

int cmd_intermediary(const CommonOptions& opts, const std::string& schedule_a,
                     const std::string& schedule_b) {
    RunConfig run = load_config(opts);
    const IssuanceSchedule a = pick_schedule(schedule_a, run.market);
    const IssuanceSchedule b = pick_schedule(schedule_b, run.market);

    const IntermediaryReport baseline =
        intermediary_report(run.intermediary, run.market.with_schedule(a));
    const FeeSearchResult search =
        profit_matching_fee(run.intermediary, run.market, a, b);

    // Re-solve the second schedule with the matched fee imposed.
    IntermediaryConfig matched = run.intermediary;
    matched.user_fee = search.matched_fee;
    matched.intermediary_cost_scale = baseline.cost_scale;
    const IntermediaryReport after =
        intermediary_report(matched, run.market.with_schedule(b));

    const RunManifest manifest = make_manifest("intermediary", opts, a.name(), b.name(), 0);
    emit_json(opts, manifest,
              {{"baseline", to_json(baseline)},
               {"fee_search", to_json(search)},
               {"matched", to_json(after)}});
    return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"staking-market equilibrium engine"};
    app.require_subcommand(1);

    CommonOptions opts;
    app.add_flag("--json-errors", opts.json_errors, "emit errors as JSON on stderr");

    std::string schedule, schedule_a = "current", schedule_b = "tempered";
    std::uint64_t draws = 0;
    std::int64_t seed = -1;
    int threads = 0, bins = 0, cells = 0, horizon = 0;
    double supply = 0.0;
    std::string data_path;
    std::vector<std::string> trends;

    const auto add_common = [&](CLI::App* cmd, bool with_format = true) {
        cmd->add_option("--config", opts.config_path, "key-value config file");
        cmd->add_option("--out", opts.out, "output path ('-' for stdout)");
        if (with_format) {
            cmd->add_option("--format", opts.format, "json|csv|table")
                ->check(CLI::IsMember({"json", "csv", "table"}));
        }
    };

    CLI::App* solve_cmd = app.add_subcommand("solve", "solve one equilibrium");
    add_common(solve_cmd);
    solve_cmd->add_option("--schedule", schedule, "current|tempered|custom");

    CLI::App* compare_cmd = app.add_subcommand("compare", "compare two schedules");
    add_common(compare_cmd);
    compare_cmd->add_option("--schedule-a", schedule_a, "current|tempered|custom");
    compare_cmd->add_option("--schedule-b", schedule_b, "current|tempered|custom");

    CLI::App* sweep_cmd = app.add_subcommand("sweep", "Monte-Carlo parameter sweep");
    add_common(sweep_cmd, false);
    sweep_cmd->add_option("--schedule-a", schedule_a, "current|tempered|custom");
    sweep_cmd->add_option("--schedule-b", schedule_b, "current|tempered|custom");
    sweep_cmd->add_option("--draws", draws, "number of draws");
    sweep_cmd->add_option("--seed", seed, "sweep seed");
    sweep_cmd->add_option("--threads", threads, "worker count (0 = default)");
    sweep_cmd->add_option("--bins", bins, "bins for --trend outputs");
    sweep_cmd->add_option("--trend", trends, "<parameter>:<class|total>, repeatable");

    CLI::App* calibrate_cmd = app.add_subcommand("calibrate", "cost-coefficient grid scan");
    add_common(calibrate_cmd, false);
    calibrate_cmd->add_option("--cells", cells, "grid cells per axis");
    calibrate_cmd->add_option("--threads", threads, "worker count (0 = default)");

    CLI::App* dynamics_cmd = app.add_subcommand("dynamics", "reinvestment projection");
    add_common(dynamics_cmd);
    dynamics_cmd->add_option("--schedule", schedule, "current|tempered|custom");
    dynamics_cmd->add_option("--horizon", horizon, "years");
    dynamics_cmd->add_option("--supply", supply, "initial circulating supply (ETH)");

    CLI::App* regress_cmd = app.add_subcommand("regress", "panel regressions");
    add_common(regress_cmd);
    regress_cmd->add_option("--data", data_path, "panel CSV")->required();

    CLI::App* intermediary_cmd =
        app.add_subcommand("intermediary", "fee-setting intermediary analysis");
    add_common(intermediary_cmd, false);
    intermediary_cmd->add_option("--schedule-a", schedule_a, "current|tempered|custom");
    intermediary_cmd->add_option("--schedule-b", schedule_b, "current|tempered|custom");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (solve_cmd->parsed()) return cmd_solve(opts, schedule);
        if (compare_cmd->parsed()) return cmd_compare(opts, schedule_a, schedule_b);
        if (sweep_cmd->parsed()) {
            return cmd_sweep(opts, schedule_a, schedule_b, draws, seed, threads, trends, bins);
        }
        if (calibrate_cmd->parsed()) return cmd_calibrate(opts, cells, threads);
        if (dynamics_cmd->parsed()) return cmd_dynamics(opts, schedule, horizon, supply);
        if (regress_cmd->parsed()) return cmd_regress(opts, data_path);
        if (intermediary_cmd->parsed()) return cmd_intermediary(opts, schedule_a, schedule_b);
    } catch (const std::exception& e) {
        if (opts.json_errors) {
            nlohmann::json err{{"error", e.what()}};
            std::cerr << err.dump() << '\n';
        } else {
            std::cerr << "error: " << e.what() << '\n';
        }
        return 1;
    }
    return 0;
}

}  // namespace stakemkt
