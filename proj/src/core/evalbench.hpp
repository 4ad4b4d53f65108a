#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "core/cellgen.hpp"
#include "core/forecast.hpp"
#include "core/road_data.hpp"

namespace roadcell {

// Error metrics over one prediction run. MAPE divides by the target, so
// targets with |y| <= floor are excluded; when nothing survives the floor the
// value is undefined and mape_defined is false.
struct MetricValues {
    double mae = 0.0;
    double mse = 0.0;
    double rmse = 0.0;
    double mape_percent = 0.0;
    bool mape_defined = true;
    std::int64_t mape_excluded = 0;
};

MetricValues compute_metrics(const std::vector<double>& predictions,
                             const std::vector<double>& targets, double mape_floor = 1e-6);

// 100 * (err_base - err_enriched) / err_base; negative when enrichment hurts.
double improvement(double err_base, double err_enriched);

struct Stat3 {
    double min = 0.0;
    double median = 0.0;
    double max = 0.0;
};

// Order statistics per metric over repeated runs. The median of an even count
// is the lower-middle element, so it is always an observed run. MAPE stats
// cover only runs where it was defined.
struct RunSummary {
    int run_count = 0;
    Stat3 mae;
    Stat3 mse;
    Stat3 rmse;
    Stat3 mape;
    int mape_defined_runs = 0;
    std::int64_t mape_excluded_total = 0;
};

RunSummary summarize_runs(const std::vector<MetricValues>& runs);

// Scenario for the feature-set comparison: one corridor with validated,
// aligned road data, a list of run seeds, and the knobs shared by every grid
// cell. Each seed drives both the data generation and the model training of
// its run. noise_sigma > 0 perturbs only the flow feature fed to the model;
// the cellular data always comes from the true flow.
struct ExperimentScenario {
    std::string name;
    Corridor corridor;
    std::vector<RoadSeries> roads;
    GenParams gen;
    TrainConfig train;
    int history = 6;
    std::array<int, 3> split_ratios{2, 1, 1};
    std::vector<FeatureSet> sets = all_feature_sets();
    std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
    double mape_floor = 1e-6;
    double noise_sigma = 0.0;
    int jobs = 1;
};

void check_scenario(const ExperimentScenario& s);

// JSON form of the scalar knobs (everything except corridor and road data).
// Parsing accepts partial objects, applies defaults, and rejects unknown keys.
ExperimentScenario scenario_from_json(const std::string& json_text);
std::string scenario_json(const ExperimentScenario& s);

// Per site x feature set: metrics of every run plus their summaries, in
// normalized units (primary) and original call counts. The first corridor
// site has no incoming handovers, so its handover-based rows are marked not
// applicable (the numbers are still reported).
struct CellReport {
    std::string bs_id;
    FeatureSet set = FeatureSet::C;
    bool applicable = true;
    std::vector<MetricValues> runs_norm;
    std::vector<MetricValues> runs_raw;
    RunSummary norm;
    RunSummary raw;
};

// Improvement of the enriched set over the baseline, per metric and order
// statistic, from normalized summaries. NaN marks an undefined entry (zero
// baseline or undefined MAPE); JSON renders those as null.
struct ImprovementRow {
    std::string bs_id;
    FeatureSet baseline = FeatureSet::C;
    FeatureSet enriched = FeatureSet::FSC;
    bool applicable = true;
    Stat3 mae;
    Stat3 mse;
    Stat3 rmse;
    Stat3 mape;
};

struct ErrorReport {
    std::string name;
    std::vector<std::string> site_ids;
    std::vector<std::uint64_t> seeds;
    int history = 0;
    std::array<int, 3> split_ratios{0, 0, 0};
    double noise_sigma = 0.0;
    double mape_floor = 0.0;
    GenParams gen;
    TrainConfig train;
    std::vector<std::string> notes;
    std::vector<CellReport> cells;
    std::vector<ImprovementRow> pairs;
};

// Called with (phase, done, total) as grid cells finish; may run under a lock.
using ProgressFn = std::function<void(const std::string&, int, int)>;

// The full grid: generate once per seed, then train one model per
// (site, feature set, seed) with identical seeds across feature sets.
// Improvement pairs: C->FSC, NHC->FSNHC, C->NHC, FSC->FSNHC, NHC->FSC,
// restricted to sets present in the scenario. Deterministic for a given
// scenario regardless of jobs.
ErrorReport run_experiment(const ExperimentScenario& scenario,
                           const ProgressFn& progress = nullptr);

// Same grid with the model-side flow perturbed by sigma_fraction.
ErrorReport run_noise_experiment(ExperimentScenario scenario, double sigma_fraction,
                                 const ProgressFn& progress = nullptr);

// Reports from runs with identical knobs and disjoint site sets merge into
// one; anything incompatible is an error.
ErrorReport merge_reports(const std::vector<ErrorReport>& reports);

std::string error_report_json(const ErrorReport& report);
ErrorReport error_report_from_json(const std::string& json_text);

// Aligned-column text rendering: per site, metric rows under feature-set
// min/median/max columns, then the improvement pairs.
std::string error_report_table(const ErrorReport& report);

// One (filename, content) per improvement pair, rows bs_id x metric.
std::vector<std::pair<std::string, std::string>> plot_csvs(const ErrorReport& report);

}  // namespace roadcell
