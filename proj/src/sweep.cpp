#include "stakemkt/sweep.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "stakemkt/rng.hpp"

namespace stakemkt {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double pct_change(double from, double to) {
    if (!std::isfinite(from) || !std::isfinite(to)) return kNaN;
    if (from > 0.0) return (to - from) / from;
    return to == 0.0 ? 0.0 : kNaN;  // out both ways = no adjustment
}

void apply_param(MarketConfig& config, const SweepParam& p, double value) {
    using Field = SweepParam::Field;
    if (p.field == Field::MevTotal) {
        config.mev_total = value;
        return;
    }
    AgentClass& cls = config.classes.at(static_cast<std::size_t>(p.class_index));
    switch (p.field) {
        case Field::Population: cls.population = value; break;
        case Field::FixedCost: cls.cost.fixed = value; break;
        case Field::VarCoeff: cls.cost.variable_coeff = value; break;
        case Field::Exponent: cls.cost.exponent = value; break;
        case Field::Fee: cls.fee = value; break;
        case Field::DefiYield: cls.defi_yield = value; break;
        case Field::MevTotal: break;
    }
}

// Flags for one solved side.
std::uint8_t side_flags(const Equilibrium& eq, std::uint8_t corner_bit, std::uint8_t floor_bit,
                        std::uint8_t ranking_bit) {
    std::uint8_t flags = 0;
    if (eq.status != SolveStatus::Interior) flags |= corner_bit;
    for (const std::string& constraint : eq.enforced) {
        if (constraint.find(">= profit(") != std::string::npos) {
            flags |= ranking_bit;
        } else {
            flags |= floor_bit;
        }
    }
    return flags;
}

}  // namespace

SweepPlan SweepPlan::default_ranges(const MarketConfig& base, const IssuanceSchedule& schedule_a,
                                    const IssuanceSchedule& schedule_b) {
    SweepPlan plan;
    plan.base = base;
    plan.schedule_a = schedule_a;
    plan.schedule_b = schedule_b;

    using Field = SweepParam::Field;
    const auto scaled = [](double v) { return std::pair<double, double>{0.5 * v, 2.0 * v}; };
    for (std::size_t i = 0; i < base.classes.size(); ++i) {
        const AgentClass& cls = base.classes[i];
        const int ci = static_cast<int>(i);
        const auto add = [&](Field f, const char* suffix, double lo, double hi) {
            plan.params.push_back({cls.label + "." + suffix, f, ci, lo, hi});
        };
        auto [plo, phi] = scaled(cls.population);
        add(Field::Population, "population", plo, phi);
        auto [flo, fhi] = scaled(cls.cost.fixed);
        add(Field::FixedCost, "fixed_cost", flo, fhi);
        auto [clo, chi] = scaled(cls.cost.variable_coeff);
        add(Field::VarCoeff, "var_coeff", clo, chi);
        add(Field::Exponent, "exponent", 1.1, 2.5);
        if (cls.fee > 0.0) {
            add(Field::Fee, "fee", 0.0, 0.4);
        } else {
            add(Field::Fee, "fee", 0.0, 0.0);
        }
        auto [dlo, dhi] = scaled(cls.defi_yield);
        add(Field::DefiYield, "defi_yield", dlo, dhi);
    }
    auto [mlo, mhi] = scaled(base.mev_total);
    plan.params.push_back({"mev_total", Field::MevTotal, -1, mlo, mhi});
    return plan;
}

int SweepPlan::param_index(const std::string& name) const {
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (params[i].name == name) return static_cast<int>(i);
    }
    return -1;
}

SweepRecord evaluate_draw(const SweepPlan& plan, std::uint64_t seed, std::uint64_t index) {
    SweepRecord rec;
    rec.index = index;
    rec.params.reserve(plan.params.size());

    DrawRng rng(seed, index);
    MarketConfig config = plan.base;
    for (const SweepParam& p : plan.params) {
        const double v = (p.lo == p.hi) ? p.lo : rng.uniform(p.lo, p.hi);
        rec.params.push_back(v);
        apply_param(config, p, v);
    }

    const std::size_t n_classes = config.classes.size();
    rec.class_total_a.assign(n_classes, kNaN);
    rec.class_total_b.assign(n_classes, kNaN);
    rec.class_pct.assign(n_classes, kNaN);
    rec.total_a = rec.total_b = rec.total_pct = kNaN;

    const auto solve_side = [&](const IssuanceSchedule& s, double& total,
                                std::vector<double>& class_totals, std::uint8_t corner_bit,
                                std::uint8_t floor_bit, std::uint8_t ranking_bit,
                                std::uint8_t error_bit) {
        try {
            const Equilibrium eq = solve(config.with_schedule(s));
            total = eq.total_stake;
            for (std::size_t i = 0; i < n_classes; ++i) class_totals[i] = eq.classes[i].total;
            rec.flags |= side_flags(eq, corner_bit, floor_bit, ranking_bit);
        } catch (const std::exception&) {
            rec.flags |= error_bit;
        }
    };
    solve_side(plan.schedule_a, rec.total_a, rec.class_total_a, SweepRecord::kCornerA,
               SweepRecord::kFloorA, SweepRecord::kRankingA, SweepRecord::kErrorA);
    solve_side(plan.schedule_b, rec.total_b, rec.class_total_b, SweepRecord::kCornerB,
               SweepRecord::kFloorB, SweepRecord::kRankingB, SweepRecord::kErrorB);

    rec.total_pct = pct_change(rec.total_a, rec.total_b);
    for (std::size_t i = 0; i < n_classes; ++i) {
        rec.class_pct[i] = pct_change(rec.class_total_a[i], rec.class_total_b[i]);
    }
    return rec;
}

void run_sweep(const SweepPlan& plan, std::uint64_t n_draws, std::uint64_t seed, int threads,
               const RecordSink& sink) {
    if (n_draws < 1) throw std::invalid_argument("run_sweep: n_draws must be >= 1");
    plan.base.validate();

    constexpr std::uint64_t kChunk = 8192;
    std::vector<SweepRecord> buffer;
    for (std::uint64_t start = 0; start < n_draws; start += kChunk) {
        const std::int64_t m = static_cast<std::int64_t>(std::min(kChunk, n_draws - start));
        buffer.resize(static_cast<std::size_t>(m));
#ifdef _OPENMP
        if (threads > 0) {
#pragma omp parallel for schedule(dynamic, 16) num_threads(threads)
            for (std::int64_t j = 0; j < m; ++j) {
                buffer[static_cast<std::size_t>(j)] =
                    evaluate_draw(plan, seed, start + static_cast<std::uint64_t>(j));
            }
        } else {
#pragma omp parallel for schedule(dynamic, 16)
            for (std::int64_t j = 0; j < m; ++j) {
                buffer[static_cast<std::size_t>(j)] =
                    evaluate_draw(plan, seed, start + static_cast<std::uint64_t>(j));
            }
        }
#else
        (void)threads;
        for (std::int64_t j = 0; j < m; ++j) {
            buffer[static_cast<std::size_t>(j)] =
                evaluate_draw(plan, seed, start + static_cast<std::uint64_t>(j));
        }
#endif
        for (const SweepRecord& rec : buffer) sink(rec);
    }
}

std::vector<SweepRecord> run_sweep(const SweepPlan& plan, std::uint64_t n_draws,
                                   std::uint64_t seed, int threads) {
    std::vector<SweepRecord> records;
    records.reserve(n_draws);
    run_sweep(plan, n_draws, seed, threads, [&](const SweepRecord& r) { records.push_back(r); });
    return records;
}

std::vector<SweepRecord> run_sweep_serial(const SweepPlan& plan, std::uint64_t n_draws,
                                          std::uint64_t seed) {
    if (n_draws < 1) throw std::invalid_argument("run_sweep: n_draws must be >= 1");
    plan.base.validate();
    std::vector<SweepRecord> records;
    records.reserve(n_draws);
    for (std::uint64_t i = 0; i < n_draws; ++i) {
        records.push_back(evaluate_draw(plan, seed, i));
    }
    return records;
}

BinnedTrend bin_trend(const SweepPlan& plan, const std::vector<SweepRecord>& records,
                      const std::string& parameter, const std::string& column, int n_bins) {
    if (n_bins < 1) throw std::invalid_argument("bin_trend: n_bins must be >= 1");
    const int pi = plan.param_index(parameter);
    if (pi < 0) throw std::invalid_argument("bin_trend: unknown parameter '" + parameter + "'");

    int ci = -1;
    if (column != "total") {
        ci = plan.base.index_of(column);
        if (ci < 0) throw std::invalid_argument("bin_trend: unknown column '" + column + "'");
    }

    BinnedTrend trend;
    trend.parameter = parameter;
    trend.column = column;
    trend.lo = plan.params[static_cast<std::size_t>(pi)].lo;
    trend.hi = plan.params[static_cast<std::size_t>(pi)].hi;
    if (!(trend.hi > trend.lo)) {
        throw std::invalid_argument("bin_trend: parameter '" + parameter + "' has a degenerate range");
    }

    const double width = (trend.hi - trend.lo) / n_bins;
    trend.midpoints.resize(static_cast<std::size_t>(n_bins));
    for (int b = 0; b < n_bins; ++b) {
        trend.midpoints[static_cast<std::size_t>(b)] = trend.lo + width * (b + 0.5);
    }
    std::vector<double> sums(static_cast<std::size_t>(n_bins), 0.0);
    trend.counts.assign(static_cast<std::size_t>(n_bins), 0);

    std::uint64_t usable = 0;
    for (const SweepRecord& rec : records) {
        if (!rec.solved()) continue;
        const double value =
            (ci < 0) ? rec.total_pct : rec.class_pct[static_cast<std::size_t>(ci)];
        if (!std::isfinite(value)) continue;  // undefined ratio, excluded
        ++usable;
        const double x = rec.params[static_cast<std::size_t>(pi)];
        int b = static_cast<int>((x - trend.lo) / width);
        b = std::clamp(b, 0, n_bins - 1);
        sums[static_cast<std::size_t>(b)] += value;
        ++trend.counts[static_cast<std::size_t>(b)];
    }
    if (usable < static_cast<std::uint64_t>(n_bins)) {
        throw std::invalid_argument("bin_trend: fewer valid records than bins");
    }

    trend.means.resize(static_cast<std::size_t>(n_bins));
    for (int b = 0; b < n_bins; ++b) {
        const auto ub = static_cast<std::size_t>(b);
        trend.means[ub] = trend.counts[ub] ? sums[ub] / static_cast<double>(trend.counts[ub]) : kNaN;
    }
    return trend;
}

namespace {

void put_csv_double(std::ostream& os, double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    os << buf;
}

}  // namespace

void write_sweep_header(std::ostream& os, const SweepPlan& plan) {
    os << "index";
    for (const SweepParam& p : plan.params) os << ',' << p.name;
    os << ",flags,total_a,total_b,total_pct";
    for (const AgentClass& cls : plan.base.classes) {
        os << ',' << cls.label << "_total_a," << cls.label << "_total_b," << cls.label << "_pct";
    }
    os << '\n';
}

void write_sweep_record(std::ostream& os, const SweepPlan& plan, const SweepRecord& rec) {
    os << rec.index;
    for (double v : rec.params) {
        os << ',';
        put_csv_double(os, v);
    }
    os << ',' << static_cast<int>(rec.flags);
    os << ',';
    put_csv_double(os, rec.total_a);
    os << ',';
    put_csv_double(os, rec.total_b);
    os << ',';
    put_csv_double(os, rec.total_pct);
    for (std::size_t i = 0; i < plan.base.classes.size(); ++i) {
        os << ',';
        put_csv_double(os, rec.class_total_a[i]);
        os << ',';
        put_csv_double(os, rec.class_total_b[i]);
        os << ',';
        put_csv_double(os, rec.class_pct[i]);
    }
    os << '\n';
}

namespace {

CalibrationSurface make_surface(const MarketConfig& base, const std::string& class_a,
                                std::pair<double, double> range_a, const std::string& class_b,
                                std::pair<double, double> range_b,
                                const std::vector<std::pair<std::string, double>>& reference,
                                int n_cells, int draws_per_cell) {
    if (n_cells < 1) throw std::invalid_argument("calibration_grid: n_cells must be >= 1");
    if (draws_per_cell < 1) {
        throw std::invalid_argument("calibration_grid: draws_per_cell must be >= 1");
    }
    if (reference.empty()) throw std::invalid_argument("calibration_grid: empty reference");
    if (base.index_of(class_a) < 0 || base.index_of(class_b) < 0) {
        throw std::invalid_argument("calibration_grid: unknown class label");
    }

    CalibrationSurface surf;
    surf.class_a = class_a;
    surf.class_b = class_b;
    const auto centers = [n_cells](std::pair<double, double> r) {
        std::vector<double> v(static_cast<std::size_t>(n_cells));
        const double w = (r.second - r.first) / n_cells;
        for (int i = 0; i < n_cells; ++i) v[static_cast<std::size_t>(i)] = r.first + w * (i + 0.5);
        return v;
    };
    surf.values_a = centers(range_a);
    surf.values_b = centers(range_b);
    for (const auto& [label, share] : reference) {
        (void)share;
        surf.share_labels.push_back(label);
    }
    const std::size_t total = static_cast<std::size_t>(n_cells) * static_cast<std::size_t>(n_cells);
    surf.distance.assign(total, kNaN);
    surf.shares.assign(total * reference.size(), kNaN);
    return surf;
}

// Parameters resampled per draw when a cell's distance is a median: every
// cost/fee/yield knob except the two scanned coefficients. Populations and
// fixed costs stay put; they do not identify the share split.
std::vector<SweepParam> cell_noise_params(const MarketConfig& base, const std::string& class_a,
                                          const std::string& class_b) {
    std::vector<SweepParam> params;
    using Field = SweepParam::Field;
    for (std::size_t i = 0; i < base.classes.size(); ++i) {
        const AgentClass& cls = base.classes[i];
        const int ci = static_cast<int>(i);
        if (cls.label != class_a && cls.label != class_b) {
            params.push_back({cls.label + ".var_coeff", Field::VarCoeff, ci,
                              0.5 * cls.cost.variable_coeff, 2.0 * cls.cost.variable_coeff});
        }
        params.push_back({cls.label + ".exponent", Field::Exponent, ci, 1.1, 2.5});
        if (cls.fee > 0.0) params.push_back({cls.label + ".fee", Field::Fee, ci, 0.0, 0.4});
        if (cls.defi_yield > 0.0) {
            params.push_back({cls.label + ".defi_yield", Field::DefiYield, ci,
                              0.5 * cls.defi_yield, 2.0 * cls.defi_yield});
        }
    }
    params.push_back({"mev_total", Field::MevTotal, -1, 0.5 * base.mev_total, 2.0 * base.mev_total});
    return params;
}

struct CellContext {
    const MarketConfig& base;
    const std::vector<std::pair<std::string, double>>& reference;
    double ref_sum;
    int n_cells;
    int draws_per_cell;
    std::uint64_t seed;
    std::vector<SweepParam> noise;
};

double cell_distance(const MarketConfig& config,
                     const std::vector<std::pair<std::string, double>>& reference, double ref_sum,
                     double* shares_out) {
    const Equilibrium eq = solve(config);
    if (eq.status != SolveStatus::Interior || !(eq.total_stake > 0.0)) return kNaN;
    double sq = 0.0;
    for (std::size_t k = 0; k < reference.size(); ++k) {
        const ClassOutcome* out = eq.find(reference[k].first);
        const double simulated = out ? out->share : 0.0;
        const double target = reference[k].second / ref_sum;
        if (shares_out) shares_out[k] = simulated;
        sq += (simulated - target) * (simulated - target);
    }
    return std::sqrt(sq);
}

void solve_cell(CalibrationSurface& surf, const CellContext& ctx, std::int64_t cell) {
    const std::size_t ia = static_cast<std::size_t>(cell) / static_cast<std::size_t>(ctx.n_cells);
    const std::size_t ib = static_cast<std::size_t>(cell) % static_cast<std::size_t>(ctx.n_cells);
    MarketConfig config = ctx.base;
    config.classes[static_cast<std::size_t>(config.index_of(surf.class_a))].cost.variable_coeff =
        surf.values_a[ia];
    config.classes[static_cast<std::size_t>(config.index_of(surf.class_b))].cost.variable_coeff =
        surf.values_b[ib];
    try {
        if (ctx.draws_per_cell == 1) {
            surf.distance[static_cast<std::size_t>(cell)] = cell_distance(
                config, ctx.reference, ctx.ref_sum,
                &surf.shares[static_cast<std::size_t>(cell) * ctx.reference.size()]);
            return;
        }
        std::vector<double> distances;
        distances.reserve(static_cast<std::size_t>(ctx.draws_per_cell));
        for (int j = 0; j < ctx.draws_per_cell; ++j) {
            DrawRng rng(ctx.seed, static_cast<std::uint64_t>(cell) *
                                      static_cast<std::uint64_t>(ctx.draws_per_cell) +
                                  static_cast<std::uint64_t>(j));
            MarketConfig sampled = config;
            for (const SweepParam& p : ctx.noise) {
                apply_param(sampled, p, (p.lo == p.hi) ? p.lo : rng.uniform(p.lo, p.hi));
            }
            const double d = cell_distance(sampled, ctx.reference, ctx.ref_sum, nullptr);
            if (std::isfinite(d)) distances.push_back(d);
        }
        if (distances.empty()) return;
        std::sort(distances.begin(), distances.end());
        const std::size_t m = distances.size();
        surf.distance[static_cast<std::size_t>(cell)] =
            (m % 2 == 1) ? distances[m / 2] : 0.5 * (distances[m / 2 - 1] + distances[m / 2]);
    } catch (const std::exception&) {
        // cell stays flagged as NaN
    }
}

void finish_surface(CalibrationSurface& surf) {
    double best = std::numeric_limits<double>::infinity();
    for (double d : surf.distance) {
        if (std::isfinite(d)) best = std::min(best, d);
    }
    surf.min_distance = std::isfinite(best) ? best : kNaN;
}

double reference_sum(const std::vector<std::pair<std::string, double>>& reference) {
    double s = 0.0;
    for (const auto& [label, share] : reference) {
        (void)label;
        if (!(share >= 0.0)) throw std::invalid_argument("calibration_grid: negative share");
        s += share;
    }
    if (!(s > 0.0)) throw std::invalid_argument("calibration_grid: reference shares sum to zero");
    return s;
}

}  // namespace

std::size_t CalibrationSurface::cells_near_min(double factor) const {
    if (!std::isfinite(min_distance)) return 0;
    std::size_t n = 0;
    for (double d : distance) {
        if (std::isfinite(d) && d <= factor * min_distance) ++n;
    }
    return n;
}

CalibrationSurface calibration_grid(const MarketConfig& base, const std::string& class_a,
                                    std::pair<double, double> range_a, const std::string& class_b,
                                    std::pair<double, double> range_b,
                                    const std::vector<std::pair<std::string, double>>& reference,
                                    int n_cells, int draws_per_cell, std::uint64_t seed,
                                    int threads) {
    CalibrationSurface surf =
        make_surface(base, class_a, range_a, class_b, range_b, reference, n_cells, draws_per_cell);
    const CellContext ctx{base,          reference, reference_sum(reference), n_cells,
                          draws_per_cell, seed,      cell_noise_params(base, class_a, class_b)};
    const std::int64_t total = static_cast<std::int64_t>(n_cells) * n_cells;
#ifdef _OPENMP
    if (threads > 0) {
#pragma omp parallel for schedule(dynamic) num_threads(threads)
        for (std::int64_t cell = 0; cell < total; ++cell) {
            solve_cell(surf, ctx, cell);
        }
    } else {
#pragma omp parallel for schedule(dynamic)
        for (std::int64_t cell = 0; cell < total; ++cell) {
            solve_cell(surf, ctx, cell);
        }
    }
#else
    (void)threads;
    for (std::int64_t cell = 0; cell < total; ++cell) {
        solve_cell(surf, ctx, cell);
    }
#endif
    finish_surface(surf);
    return surf;
}

CalibrationSurface calibration_grid_serial(const MarketConfig& base, const std::string& class_a,
                                           std::pair<double, double> range_a,
                                           const std::string& class_b,
                                           std::pair<double, double> range_b,
                                           const std::vector<std::pair<std::string, double>>& reference,
                                           int n_cells, int draws_per_cell, std::uint64_t seed) {
    CalibrationSurface surf =
        make_surface(base, class_a, range_a, class_b, range_b, reference, n_cells, draws_per_cell);
    const CellContext ctx{base,          reference, reference_sum(reference), n_cells,
                          draws_per_cell, seed,      cell_noise_params(base, class_a, class_b)};
    const std::int64_t total = static_cast<std::int64_t>(n_cells) * n_cells;
    for (std::int64_t cell = 0; cell < total; ++cell) {
        solve_cell(surf, ctx, cell);
    }
    finish_surface(surf);
    return surf;
}

}  // namespace stakemkt
