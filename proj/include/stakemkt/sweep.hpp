#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "stakemkt/equilibrium.hpp"
#include "stakemkt/market.hpp"

namespace stakemkt {

// One sampled scalar in a sweep: which config field it lands on and the
// uniform sampling interval. lo == hi pins the parameter.
struct SweepParam {
    enum class Field { Population, FixedCost, VarCoeff, Exponent, Fee, DefiYield, MevTotal };
    std::string name;      // e.g. "expert.var_coeff", "mev_total"
    Field field = Field::MevTotal;
    int class_index = -1;  // -1 for market-level fields
    double lo = 0.0, hi = 0.0;
};

struct SweepPlan {
    MarketConfig base;
    IssuanceSchedule schedule_a, schedule_b;
    std::vector<SweepParam> params;

    // Default sampling box: every class parameter varied over [0.5x, 2x] its
    // configured value, exponents over [1.1, 2.5], nonzero fees over [0, 0.4],
    // the MEV pot over [0.5x, 2x].
    static SweepPlan default_ranges(const MarketConfig& base, const IssuanceSchedule& schedule_a,
                                    const IssuanceSchedule& schedule_b);

    int param_index(const std::string& name) const;  // -1 when absent
};

struct SweepRecord {
    // Flag bits recorded per draw. Corners and solver errors disqualify the
    // record; participation-constraint enforcement is informational (those
    // markets are real equilibria, just with a class priced out).
    enum : std::uint8_t {
        kCornerA = 1,
        kCornerB = 2,
        kErrorA = 4,
        kErrorB = 8,
        kFloorA = 16,  // a profit floor removed a class
        kFloorB = 32,
        kRankingA = 64,  // the cross-class profit ranking removed a class
        kRankingB = 128,
    };

    std::uint64_t index = 0;
    std::vector<double> params;                   // sampled values, plan order
    double total_a = 0.0, total_b = 0.0;          // D* under each schedule
    double total_pct = 0.0;
    std::vector<double> class_total_a, class_total_b;
    // (new - old)/old; 0 when the class is out of the market either way
    // (nothing adjusted); NaN only for entry from a zero base.
    std::vector<double> class_pct;
    std::uint8_t flags = 0;

    bool solved() const { return (flags & (kCornerA | kCornerB | kErrorA | kErrorB)) == 0; }
    bool interior() const { return flags == 0; }
};

using RecordSink = std::function<void(const SweepRecord&)>;

// Evaluates draw `index` of the plan. Randomness depends only on (seed, index).
SweepRecord evaluate_draw(const SweepPlan& plan, std::uint64_t seed, std::uint64_t index);

// OpenMP kernel. Records reach the sink in index order regardless of the
// worker count; per-draw failures are flagged, never thrown. threads <= 0
// uses the OpenMP default.
void run_sweep(const SweepPlan& plan, std::uint64_t n_draws, std::uint64_t seed, int threads,
               const RecordSink& sink);
std::vector<SweepRecord> run_sweep(const SweepPlan& plan, std::uint64_t n_draws,
                                   std::uint64_t seed, int threads = 0);

// Plain-loop reference implementation, kept for testing the kernel against.
std::vector<SweepRecord> run_sweep_serial(const SweepPlan& plan, std::uint64_t n_draws,
                                          std::uint64_t seed);

// Equal-width binned means of one percentage-change column against one
// sampled parameter, over interior records. Column is a class label or
// "total".
struct BinnedTrend {
    std::string parameter;
    std::string column;
    double lo = 0.0, hi = 0.0;
    std::vector<double> midpoints;
    std::vector<double> means;  // NaN for empty bins
    std::vector<std::uint64_t> counts;
};

BinnedTrend bin_trend(const SweepPlan& plan, const std::vector<SweepRecord>& records,
                      const std::string& parameter, const std::string& column, int n_bins = 20);

// CSV streaming for sweep records (stable documented column order).
void write_sweep_header(std::ostream& os, const SweepPlan& plan);
void write_sweep_record(std::ostream& os, const SweepPlan& plan, const SweepRecord& rec);

// Calibration scan: vary two classes' variable-cost coefficients on an
// n x n grid of cell centers and record the L2 distance between simulated
// and reference class shares. With draws_per_cell == 1 each cell solves the
// base market once; with more draws the cell reports the median distance
// over seeded samples of the remaining cost/fee/yield parameters, which is
// what surfaces the flat valley of near-equivalent calibrations.
struct CalibrationSurface {
    std::string class_a, class_b;
    std::vector<double> values_a, values_b;  // cell-center coefficients
    std::vector<double> distance;            // row-major [i_a * n + i_b], NaN on failure
    std::vector<double> shares;              // simulated shares, [cell * n_ref + k]
    std::vector<std::string> share_labels;   // (single-solve cells only)
    double min_distance = 0.0;
    std::size_t cells_near_min(double factor) const;  // count within factor * min
};

CalibrationSurface calibration_grid(const MarketConfig& base, const std::string& class_a,
                                    std::pair<double, double> range_a, const std::string& class_b,
                                    std::pair<double, double> range_b,
                                    const std::vector<std::pair<std::string, double>>& reference,
                                    int n_cells, int draws_per_cell = 1, std::uint64_t seed = 1,
                                    int threads = 0);
CalibrationSurface calibration_grid_serial(const MarketConfig& base, const std::string& class_a,
                                           std::pair<double, double> range_a,
                                           const std::string& class_b,
                                           std::pair<double, double> range_b,
                                           const std::vector<std::pair<std::string, double>>& reference,
                                           int n_cells, int draws_per_cell = 1,
                                           std::uint64_t seed = 1);

}  // namespace stakemkt
