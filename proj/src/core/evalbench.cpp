#include "core/evalbench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <mutex>
#include <thread>

#include "json.hpp"

#include "core/errors.hpp"
#include "core/textio.hpp"

namespace roadcell {

namespace {

using ordered_json = nlohmann::ordered_json;

constexpr std::int64_t kSlotsPerWeek =
    static_cast<std::int64_t>(kSlotsPerDay) * kWeekdaysPerWeek;

const std::array<std::pair<FeatureSet, FeatureSet>, 5> kPairings = {{
    {FeatureSet::C, FeatureSet::FSC},
    {FeatureSet::NHC, FeatureSet::FSNHC},
    {FeatureSet::C, FeatureSet::NHC},
    {FeatureSet::FSC, FeatureSet::FSNHC},
    {FeatureSet::NHC, FeatureSet::FSC},
}};

bool uses_handover(FeatureSet set) {
    return set == FeatureSet::NHC || set == FeatureSet::FSNHC;
}

}  // namespace

MetricValues compute_metrics(const std::vector<double>& predictions,
                             const std::vector<double>& targets, double mape_floor) {
    if (predictions.empty()) fail(ErrKind::validation, "cannot compute metrics of no samples");
    if (predictions.size() != targets.size())
        fail(ErrKind::validation, "prediction and target counts differ");
    if (mape_floor < 0.0) fail(ErrKind::validation, "mape_floor must be >= 0");

    MetricValues m;
    double abs_sum = 0.0;
    double sq_sum = 0.0;
    double pct_sum = 0.0;
    std::int64_t pct_n = 0;
    for (std::size_t i = 0; i < targets.size(); ++i) {
        const double diff = predictions[i] - targets[i];
        abs_sum += std::fabs(diff);
        sq_sum += diff * diff;
        if (std::fabs(targets[i]) > mape_floor) {
            pct_sum += std::fabs(diff) / std::fabs(targets[i]);
            ++pct_n;
        }
    }
    const double n = static_cast<double>(targets.size());
    m.mae = abs_sum / n;
    m.mse = sq_sum / n;
    m.rmse = std::sqrt(m.mse);
    m.mape_excluded = static_cast<std::int64_t>(targets.size()) - pct_n;
    if (pct_n > 0) {
        m.mape_percent = 100.0 * pct_sum / static_cast<double>(pct_n);
    } else {
        m.mape_defined = false;
        m.mape_percent = 0.0;
    }
    return m;
}

double improvement(double err_base, double err_enriched) {
    if (!(err_base > 0.0)) fail(ErrKind::validation, "baseline error must be positive");
    if (err_enriched < 0.0) fail(ErrKind::validation, "enriched error must be non-negative");
    return 100.0 * (err_base - err_enriched) / err_base;
}

namespace {

Stat3 order_stats(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    Stat3 s;
    s.min = v.front();
    s.median = v[(v.size() - 1) / 2];  // lower middle for even counts
    s.max = v.back();
    return s;
}

}  // namespace

RunSummary summarize_runs(const std::vector<MetricValues>& runs) {
    if (runs.empty()) fail(ErrKind::internal, "summarize_runs needs at least one run");
    RunSummary s;
    s.run_count = static_cast<int>(runs.size());
    std::vector<double> mae, mse, rmse, mape;
    for (const MetricValues& m : runs) {
        mae.push_back(m.mae);
        mse.push_back(m.mse);
        rmse.push_back(m.rmse);
        if (m.mape_defined) mape.push_back(m.mape_percent);
        s.mape_excluded_total += m.mape_excluded;
    }
    s.mae = order_stats(mae);
    s.mse = order_stats(mse);
    s.rmse = order_stats(rmse);
    s.mape_defined_runs = static_cast<int>(mape.size());
    if (!mape.empty()) {
        s.mape = order_stats(mape);
    } else {
        const double nan = std::numeric_limits<double>::quiet_NaN();
        s.mape = {nan, nan, nan};
    }
    return s;
}

void check_scenario(const ExperimentScenario& s) {
    if (s.corridor.sites.empty()) fail(ErrKind::validation, "scenario has no corridor sites");
    if (s.roads.size() != s.corridor.sites.size())
        fail(ErrKind::validation, "scenario needs one road series per corridor site");
    if (s.seeds.empty()) fail(ErrKind::validation, "scenario needs at least one seed");
    if (s.sets.empty()) fail(ErrKind::validation, "scenario needs at least one feature set");
    for (std::size_t i = 0; i < s.sets.size(); ++i)
        for (std::size_t j = i + 1; j < s.sets.size(); ++j)
            if (s.sets[i] == s.sets[j])
                fail(ErrKind::validation,
                     "duplicate feature set " + feature_set_name(s.sets[i]));
    if (s.history < 1) fail(ErrKind::validation, "history length must be >= 1");
    if (s.noise_sigma < 0.0) fail(ErrKind::validation, "noise_sigma must be >= 0");
    if (s.mape_floor < 0.0) fail(ErrKind::validation, "mape_floor must be >= 0");
    if (s.jobs < 1) fail(ErrKind::validation, "jobs must be >= 1");
    check_gen_params(s.gen);
    check_train_config(s.train);
}

ExperimentScenario scenario_from_json(const std::string& json_text) {
    ordered_json j;
    try {
        j = ordered_json::parse(json_text);
    } catch (const std::exception& e) {
        fail(ErrKind::validation, std::string("bad scenario JSON: ") + e.what());
    }
    ExperimentScenario s;
    try {
        if (j.contains("name")) {
            s.name = j["name"].get<std::string>();
            j.erase("name");
        }
        if (j.contains("history")) {
            s.history = j["history"].get<int>();
            j.erase("history");
        }
        if (j.contains("split_ratios")) {
            const auto r = j["split_ratios"].get<std::vector<int>>();
            if (r.size() != 3)
                fail(ErrKind::validation, "split_ratios must have 3 entries");
            s.split_ratios = {r[0], r[1], r[2]};
            j.erase("split_ratios");
        }
        if (j.contains("feature_sets")) {
            s.sets.clear();
            for (const auto& name : j["feature_sets"])
                s.sets.push_back(feature_set_from_name(name.get<std::string>()));
            j.erase("feature_sets");
        }
        if (j.contains("seeds")) {
            s.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
            j.erase("seeds");
        }
        if (j.contains("mape_floor")) {
            s.mape_floor = j["mape_floor"].get<double>();
            j.erase("mape_floor");
        }
        if (j.contains("noise_sigma")) {
            s.noise_sigma = j["noise_sigma"].get<double>();
            j.erase("noise_sigma");
        }
        if (j.contains("jobs")) {
            s.jobs = j["jobs"].get<int>();
            j.erase("jobs");
        }
        if (j.contains("gen_params")) {
            s.gen = gen_params_from_json(j["gen_params"].dump());
            j.erase("gen_params");
        }
        if (j.contains("train_config")) {
            s.train = train_config_from_json(j["train_config"].dump());
            j.erase("train_config");
        }
    } catch (const Error&) {
        throw;
    } catch (const std::exception& e) {
        fail(ErrKind::validation, std::string("bad scenario JSON: ") + e.what());
    }
    if (!j.empty())
        fail(ErrKind::validation, "unknown scenario field: " + j.begin().key());
    return s;
}

std::string scenario_json(const ExperimentScenario& s) {
    ordered_json j;
    j["name"] = s.name;
    j["history"] = s.history;
    j["split_ratios"] = s.split_ratios;
    ordered_json sets = ordered_json::array();
    for (FeatureSet set : s.sets) sets.push_back(feature_set_name(set));
    j["feature_sets"] = sets;
    j["seeds"] = s.seeds;
    j["mape_floor"] = s.mape_floor;
    j["noise_sigma"] = s.noise_sigma;
    j["jobs"] = s.jobs;
    j["gen_params"] = ordered_json::parse(gen_params_json(s.gen));
    j["train_config"] = ordered_json::parse(train_config_json(s.train));
    return j.dump(2) + "\n";
}

namespace {

// Index-sharded worker pool. The first error wins; remaining jobs are skipped.
void parallel_for(int jobs, std::size_t n, const std::function<void(std::size_t)>& body) {
    if (n == 0) return;
    const int workers = std::max(1, std::min(jobs, static_cast<int>(n)));
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::atomic<bool> stop{false};
    std::mutex err_mu;
    bool has_err = false;
    ErrKind err_kind = ErrKind::internal;
    std::string err_msg;

    auto work = [&] {
        while (!stop.load()) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                body(i);
            } catch (const Error& e) {
                std::lock_guard<std::mutex> lock(err_mu);
                if (!has_err) {
                    has_err = true;
                    err_kind = e.kind();
                    err_msg = e.what();
                }
                stop.store(true);
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(err_mu);
                if (!has_err) {
                    has_err = true;
                    err_kind = ErrKind::internal;
                    err_msg = e.what();
                }
                stop.store(true);
            }
        }
    };

    std::vector<std::thread> pool;
    for (int w = 1; w < workers; ++w) pool.emplace_back(work);
    work();
    for (std::thread& t : pool) t.join();
    if (has_err) fail(err_kind, err_msg);
}

Stat3 improvement_stats(const Stat3& base, const Stat3& enriched) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    auto one = [&](double b, double e) {
        if (!std::isfinite(b) || !std::isfinite(e) || !(b > 0.0)) return nan;
        return improvement(b, e);
    };
    return {one(base.min, enriched.min), one(base.median, enriched.median),
            one(base.max, enriched.max)};
}

}  // namespace

ErrorReport run_experiment(const ExperimentScenario& scenario, const ProgressFn& progress) {
    check_scenario(scenario);
    const std::size_t nsites = scenario.corridor.sites.size();
    const std::size_t nsets = scenario.sets.size();
    const std::size_t nseeds = scenario.seeds.size();

    std::int64_t last_slot = 0;
    for (const RoadSeries& r : scenario.roads) {
        if (r.slots.empty()) fail(ErrKind::validation, "empty road series " + r.detector_id);
        last_slot = std::max(last_slot, r.slots.back().slot_index);
    }
    const std::int64_t total_weeks = last_slot / kSlotsPerWeek + 1;
    const WeekRanges ranges = split_chronological(total_weeks, scenario.split_ratios);

    // One generation per seed; every feature set of that run shares its data.
    std::vector<GenResult> generated(nseeds);
    for (std::size_t si = 0; si < nseeds; ++si) {
        GenParams g = scenario.gen;
        g.seed = scenario.seeds[si];
        generated[si] = generate(scenario.corridor, scenario.roads, g);
        if (progress)
            progress("generate", static_cast<int>(si + 1), static_cast<int>(nseeds));
    }

    // Model-side road tables; the flow column is perturbed when noise is on,
    // while the generation above always saw the true flow.
    std::vector<std::vector<FeatureTable>> tables(nsites);
    for (std::size_t b = 0; b < nsites; ++b) {
        tables[b].resize(nseeds);
        for (std::size_t si = 0; si < nseeds; ++si) {
            RoadSeries road = scenario.roads[b];
            if (scenario.noise_sigma > 0.0)
                road = add_flow_noise(road, {scenario.noise_sigma, scenario.seeds[si]});
            tables[b][si] = build_feature_table(lag_align(road), generated[si].series[b]);
        }
    }

    struct CellRun {
        MetricValues norm;
        MetricValues raw;
    };
    const std::size_t njobs = nsites * nsets * nseeds;
    std::vector<CellRun> results(njobs);
    std::atomic<int> done{0};
    std::mutex progress_mu;

    parallel_for(scenario.jobs, njobs, [&](std::size_t k) {
        const std::size_t b = k / (nsets * nseeds);
        const std::size_t fi = (k / nseeds) % nsets;
        const std::size_t si = k % nseeds;
        const FeatureSet set = scenario.sets[fi];
        const std::uint64_t seed = scenario.seeds[si];
        try {
            SplitWindows sw = build_windows(tables[b][si], set, scenario.history, ranges);
            if (sw.test.samples.empty())
                fail(ErrKind::validation, "test split has no windows");
            const Scaler sc = fit_scaler(sw.train);
            apply_scaler(sc, sw.train);
            apply_scaler(sc, sw.val);
            apply_scaler(sc, sw.test);
            TrainConfig tc = scenario.train;
            tc.seed = seed;
            const TrainResult tr = train_lstm(sw, tc);
            const Predictions pr = predict(tr.model, sc, sw.test);
            results[k].norm =
                compute_metrics(pr.prediction_norm, pr.target_norm, scenario.mape_floor);
            results[k].raw =
                compute_metrics(pr.prediction_raw, pr.target_raw, scenario.mape_floor);
        } catch (const Error& e) {
            fail(e.kind(), "site " + scenario.corridor.sites[b].bs_id + ", feature set " +
                               feature_set_name(set) + ", seed " + std::to_string(seed) +
                               ": " + e.what());
        }
        if (progress) {
            const int d = done.fetch_add(1) + 1;
            std::lock_guard<std::mutex> lock(progress_mu);
            progress("train", d, static_cast<int>(njobs));
        }
    });

    ErrorReport report;
    report.name = scenario.name;
    for (const CellSite& site : scenario.corridor.sites) report.site_ids.push_back(site.bs_id);
    report.seeds = scenario.seeds;
    report.history = scenario.history;
    report.split_ratios = scenario.split_ratios;
    report.noise_sigma = scenario.noise_sigma;
    report.mape_floor = scenario.mape_floor;
    report.gen = scenario.gen;
    report.train = scenario.train;
    report.notes.push_back(
        "each run seed drives both the cellular data generation and the model training");
    report.notes.push_back(
        "metrics are on normalized units first; original call counts are also reported");
    report.notes.push_back(
        "MAPE excludes targets at or below the floor; exclusion counts are reported");
    report.notes.push_back("improvements are computed from normalized-unit summaries");
    if (scenario.noise_sigma > 0.0)
        report.notes.push_back(
            "flow noise applies only to the model's flow feature; the cellular data comes "
            "from the true flow");
    bool any_na = false;

    for (std::size_t b = 0; b < nsites; ++b) {
        for (std::size_t fi = 0; fi < nsets; ++fi) {
            CellReport cell;
            cell.bs_id = scenario.corridor.sites[b].bs_id;
            cell.set = scenario.sets[fi];
            cell.applicable = !(b == 0 && uses_handover(cell.set));
            any_na = any_na || !cell.applicable;
            for (std::size_t si = 0; si < nseeds; ++si) {
                const CellRun& r = results[(b * nsets + fi) * nseeds + si];
                cell.runs_norm.push_back(r.norm);
                cell.runs_raw.push_back(r.raw);
            }
            cell.norm = summarize_runs(cell.runs_norm);
            cell.raw = summarize_runs(cell.runs_raw);
            report.cells.push_back(std::move(cell));
        }
    }
    if (any_na)
        report.notes.push_back(
            "the first corridor site receives no handovers, so its handover-based rows "
            "are not applicable");

    auto cell_of = [&](std::size_t b, FeatureSet set) -> const CellReport* {
        for (std::size_t fi = 0; fi < nsets; ++fi)
            if (scenario.sets[fi] == set) return &report.cells[b * nsets + fi];
        return nullptr;
    };
    for (std::size_t b = 0; b < nsites; ++b) {
        for (const auto& [base_set, enriched_set] : kPairings) {
            const CellReport* base = cell_of(b, base_set);
            const CellReport* enriched = cell_of(b, enriched_set);
            if (base == nullptr || enriched == nullptr) continue;
            ImprovementRow row;
            row.bs_id = scenario.corridor.sites[b].bs_id;
            row.baseline = base_set;
            row.enriched = enriched_set;
            row.applicable = base->applicable && enriched->applicable;
            row.mae = improvement_stats(base->norm.mae, enriched->norm.mae);
            row.mse = improvement_stats(base->norm.mse, enriched->norm.mse);
            row.rmse = improvement_stats(base->norm.rmse, enriched->norm.rmse);
            row.mape = improvement_stats(base->norm.mape, enriched->norm.mape);
            report.pairs.push_back(std::move(row));
        }
    }
    return report;
}

ErrorReport run_noise_experiment(ExperimentScenario scenario, double sigma_fraction,
                                 const ProgressFn& progress) {
    if (sigma_fraction < 0.0) fail(ErrKind::validation, "sigma_fraction must be >= 0");
    scenario.noise_sigma = sigma_fraction;
    return run_experiment(scenario, progress);
}

// --- serialization ------------------------------------------------------------

namespace {

ordered_json num_or_null(double v) {
    if (!std::isfinite(v)) return nullptr;
    return v;
}

double num_from(const ordered_json& j) {
    if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
    return j.get<double>();
}

ordered_json stat3_json(const Stat3& s) {
    ordered_json j;
    j["min"] = num_or_null(s.min);
    j["median"] = num_or_null(s.median);
    j["max"] = num_or_null(s.max);
    return j;
}

Stat3 stat3_from(const ordered_json& j) {
    return {num_from(j.at("min")), num_from(j.at("median")), num_from(j.at("max"))};
}

ordered_json metrics_json(const MetricValues& m) {
    ordered_json j;
    j["mae"] = m.mae;
    j["mse"] = m.mse;
    j["rmse"] = m.rmse;
    j["mape"] = m.mape_defined ? ordered_json(m.mape_percent) : ordered_json(nullptr);
    j["mape_excluded"] = m.mape_excluded;
    return j;
}

MetricValues metrics_from(const ordered_json& j) {
    MetricValues m;
    m.mae = j.at("mae").get<double>();
    m.mse = j.at("mse").get<double>();
    m.rmse = j.at("rmse").get<double>();
    if (j.at("mape").is_null()) {
        m.mape_defined = false;
    } else {
        m.mape_percent = j.at("mape").get<double>();
    }
    m.mape_excluded = j.at("mape_excluded").get<std::int64_t>();
    return m;
}

ordered_json summary_json(const RunSummary& s) {
    ordered_json j;
    j["run_count"] = s.run_count;
    j["mae"] = stat3_json(s.mae);
    j["mse"] = stat3_json(s.mse);
    j["rmse"] = stat3_json(s.rmse);
    j["mape"] = stat3_json(s.mape);
    j["mape_defined_runs"] = s.mape_defined_runs;
    j["mape_excluded_total"] = s.mape_excluded_total;
    return j;
}

RunSummary summary_from(const ordered_json& j) {
    RunSummary s;
    s.run_count = j.at("run_count").get<int>();
    s.mae = stat3_from(j.at("mae"));
    s.mse = stat3_from(j.at("mse"));
    s.rmse = stat3_from(j.at("rmse"));
    s.mape = stat3_from(j.at("mape"));
    s.mape_defined_runs = j.at("mape_defined_runs").get<int>();
    s.mape_excluded_total = j.at("mape_excluded_total").get<std::int64_t>();
    return s;
}

}  // namespace

std::string error_report_json(const ErrorReport& report) {
    ordered_json j;
    j["schema"] = "roadcell-report-v1";
    j["name"] = report.name;
    j["sites"] = report.site_ids;
    j["seeds"] = report.seeds;
    j["history"] = report.history;
    j["split_ratios"] = report.split_ratios;
    j["noise_sigma"] = report.noise_sigma;
    j["mape_floor"] = report.mape_floor;
    j["gen_params"] = ordered_json::parse(gen_params_json(report.gen));
    j["train_config"] = ordered_json::parse(train_config_json(report.train));
    j["notes"] = report.notes;

    j["cells"] = ordered_json::array();
    for (const CellReport& c : report.cells) {
        ordered_json cj;
        cj["bs_id"] = c.bs_id;
        cj["feature_set"] = feature_set_name(c.set);
        cj["applicable"] = c.applicable;
        ordered_json norm;
        norm["summary"] = summary_json(c.norm);
        norm["runs"] = ordered_json::array();
        for (const MetricValues& m : c.runs_norm) norm["runs"].push_back(metrics_json(m));
        cj["normalized"] = norm;
        ordered_json raw;
        raw["summary"] = summary_json(c.raw);
        raw["runs"] = ordered_json::array();
        for (const MetricValues& m : c.runs_raw) raw["runs"].push_back(metrics_json(m));
        cj["original"] = raw;
        j["cells"].push_back(cj);
    }

    j["improvements"] = ordered_json::array();
    for (const ImprovementRow& r : report.pairs) {
        ordered_json rj;
        rj["bs_id"] = r.bs_id;
        rj["baseline"] = feature_set_name(r.baseline);
        rj["enriched"] = feature_set_name(r.enriched);
        rj["applicable"] = r.applicable;
        rj["mae"] = stat3_json(r.mae);
        rj["mse"] = stat3_json(r.mse);
        rj["rmse"] = stat3_json(r.rmse);
        rj["mape"] = stat3_json(r.mape);
        j["improvements"].push_back(rj);
    }
    return j.dump(2) + "\n";
}

ErrorReport error_report_from_json(const std::string& json_text) {
    ordered_json j;
    try {
        j = ordered_json::parse(json_text);
    } catch (const std::exception& e) {
        fail(ErrKind::validation, std::string("bad report JSON: ") + e.what());
    }
    ErrorReport r;
    try {
        if (j.at("schema").get<std::string>() != "roadcell-report-v1")
            fail(ErrKind::validation, "unknown report schema");
        r.name = j.at("name").get<std::string>();
        r.site_ids = j.at("sites").get<std::vector<std::string>>();
        r.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
        r.history = j.at("history").get<int>();
        const auto ratios = j.at("split_ratios").get<std::vector<int>>();
        if (ratios.size() != 3) fail(ErrKind::validation, "split_ratios must have 3 entries");
        r.split_ratios = {ratios[0], ratios[1], ratios[2]};
        r.noise_sigma = j.at("noise_sigma").get<double>();
        r.mape_floor = j.at("mape_floor").get<double>();
        r.gen = gen_params_from_json(j.at("gen_params").dump());
        r.train = train_config_from_json(j.at("train_config").dump());
        r.notes = j.at("notes").get<std::vector<std::string>>();
        for (const ordered_json& cj : j.at("cells")) {
            CellReport c;
            c.bs_id = cj.at("bs_id").get<std::string>();
            c.set = feature_set_from_name(cj.at("feature_set").get<std::string>());
            c.applicable = cj.at("applicable").get<bool>();
            c.norm = summary_from(cj.at("normalized").at("summary"));
            for (const ordered_json& mj : cj.at("normalized").at("runs"))
                c.runs_norm.push_back(metrics_from(mj));
            c.raw = summary_from(cj.at("original").at("summary"));
            for (const ordered_json& mj : cj.at("original").at("runs"))
                c.runs_raw.push_back(metrics_from(mj));
            r.cells.push_back(std::move(c));
        }
        for (const ordered_json& rj : j.at("improvements")) {
            ImprovementRow row;
            row.bs_id = rj.at("bs_id").get<std::string>();
            row.baseline = feature_set_from_name(rj.at("baseline").get<std::string>());
            row.enriched = feature_set_from_name(rj.at("enriched").get<std::string>());
            row.applicable = rj.at("applicable").get<bool>();
            row.mae = stat3_from(rj.at("mae"));
            row.mse = stat3_from(rj.at("mse"));
            row.rmse = stat3_from(rj.at("rmse"));
            row.mape = stat3_from(rj.at("mape"));
            r.pairs.push_back(std::move(row));
        }
    } catch (const Error&) {
        throw;
    } catch (const std::exception& e) {
        fail(ErrKind::validation, std::string("bad report JSON: ") + e.what());
    }
    return r;
}

ErrorReport merge_reports(const std::vector<ErrorReport>& reports) {
    if (reports.empty()) fail(ErrKind::validation, "no reports to merge");
    ErrorReport merged = reports.front();
    for (std::size_t i = 1; i < reports.size(); ++i) {
        const ErrorReport& r = reports[i];
        if (r.history != merged.history)
            fail(ErrKind::validation, "reports disagree on history length");
        if (r.split_ratios != merged.split_ratios)
            fail(ErrKind::validation, "reports disagree on split ratios");
        if (r.seeds != merged.seeds) fail(ErrKind::validation, "reports disagree on seeds");
        if (r.noise_sigma != merged.noise_sigma)
            fail(ErrKind::validation, "reports disagree on noise_sigma");
        if (r.mape_floor != merged.mape_floor)
            fail(ErrKind::validation, "reports disagree on mape_floor");
        if (gen_params_json(r.gen) != gen_params_json(merged.gen))
            fail(ErrKind::validation, "reports disagree on generation parameters");
        if (train_config_json(r.train) != train_config_json(merged.train))
            fail(ErrKind::validation, "reports disagree on training parameters");
        for (const std::string& id : r.site_ids)
            if (std::find(merged.site_ids.begin(), merged.site_ids.end(), id) !=
                merged.site_ids.end())
                fail(ErrKind::validation, "site " + id + " appears in more than one report");
        merged.site_ids.insert(merged.site_ids.end(), r.site_ids.begin(), r.site_ids.end());
        merged.cells.insert(merged.cells.end(), r.cells.begin(), r.cells.end());
        merged.pairs.insert(merged.pairs.end(), r.pairs.begin(), r.pairs.end());
        for (const std::string& note : r.notes)
            if (std::find(merged.notes.begin(), merged.notes.end(), note) ==
                merged.notes.end())
                merged.notes.push_back(note);
        if (!r.name.empty() && r.name != merged.name)
            merged.name += merged.name.empty() ? r.name : "+" + r.name;
    }
    return merged;
}

// --- human-readable rendering ---------------------------------------------------

namespace {

std::string fmt_cell(double v) {
    if (!std::isfinite(v)) return "-";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return buf;
}

// Pads every column to its widest entry, first column left-aligned.
std::string render_grid(const std::vector<std::vector<std::string>>& rows) {
    std::vector<std::size_t> widths;
    for (const auto& row : rows) {
        if (widths.size() < row.size()) widths.resize(row.size(), 0);
        for (std::size_t i = 0; i < row.size(); ++i)
            widths[i] = std::max(widths[i], row[i].size());
    }
    std::string out;
    for (const auto& row : rows) {
        std::string line;
        for (std::size_t i = 0; i < row.size(); ++i) {
            std::string f = row[i];
            if (i == 0) {
                f.append(widths[i] - f.size(), ' ');
            } else {
                line += "  ";
                f.insert(0, widths[i] - f.size(), ' ');
            }
            line += f;
        }
        while (!line.empty() && line.back() == ' ') line.pop_back();
        out += line + "\n";
    }
    return out;
}

void push_stat_cells(std::vector<std::string>& row, const Stat3& s) {
    row.push_back(fmt_cell(s.min));
    row.push_back(fmt_cell(s.median));
    row.push_back(fmt_cell(s.max));
}

}  // namespace

std::string error_report_table(const ErrorReport& report) {
    std::string out;
    out += "Prediction error by feature set";
    if (!report.name.empty()) out += " (" + report.name + ")";
    out += "\n";
    out += "seeds:";
    for (std::uint64_t s : report.seeds) out += " " + std::to_string(s);
    out += "; history " + std::to_string(report.history) + "; split " +
           std::to_string(report.split_ratios[0]) + ":" +
           std::to_string(report.split_ratios[1]) + ":" +
           std::to_string(report.split_ratios[2]) + " weeks; flow noise sigma " +
           format_double(report.noise_sigma) + "\n";
    for (const std::string& note : report.notes) out += "note: " + note + "\n";

    for (const std::string& site : report.site_ids) {
        out += "\nsite " + site + " (normalized units)\n";
        std::vector<std::vector<std::string>> rows;
        rows.push_back({"set", "MAE min", "MAE med", "MAE max", "MSE min", "MSE med",
                        "MSE max", "RMSE min", "RMSE med", "RMSE max", "MAPE min",
                        "MAPE med", "MAPE max", ""});
        for (const CellReport& c : report.cells) {
            if (c.bs_id != site) continue;
            std::vector<std::string> row{feature_set_name(c.set)};
            push_stat_cells(row, c.norm.mae);
            push_stat_cells(row, c.norm.mse);
            push_stat_cells(row, c.norm.rmse);
            push_stat_cells(row, c.norm.mape);
            row.push_back(c.applicable ? "" : "(not applicable)");
            rows.push_back(std::move(row));
        }
        out += render_grid(rows);
    }

    if (!report.pairs.empty()) {
        out += "\nImprovement over baseline, percent (min/median/max across runs)\n";
        std::vector<std::vector<std::string>> rows;
        rows.push_back({"site", "pair", "MAE min", "MAE med", "MAE max", "MSE min",
                        "MSE med", "MSE max", "RMSE min", "RMSE med", "RMSE max",
                        "MAPE min", "MAPE med", "MAPE max", ""});
        for (const ImprovementRow& r : report.pairs) {
            std::vector<std::string> row{
                r.bs_id, feature_set_name(r.baseline) + "->" + feature_set_name(r.enriched)};
            push_stat_cells(row, r.mae);
            push_stat_cells(row, r.mse);
            push_stat_cells(row, r.rmse);
            push_stat_cells(row, r.mape);
            row.push_back(r.applicable ? "" : "(not applicable)");
            rows.push_back(std::move(row));
        }
        out += render_grid(rows);
    }
    return out;
}

std::vector<std::pair<std::string, std::string>> plot_csvs(const ErrorReport& report) {
    std::vector<std::pair<std::string, std::string>> files;
    for (const auto& [base_set, enriched_set] : kPairings) {
        std::string content = "bs_id,metric,improvement_min,improvement_median,improvement_max\n";
        bool any = false;
        for (const ImprovementRow& r : report.pairs) {
            if (r.baseline != base_set || r.enriched != enriched_set) continue;
            any = true;
            if (!r.applicable) continue;
            auto line = [&](const char* metric, const Stat3& s) {
                auto num = [](double v) { return std::isfinite(v) ? format_double(v) : ""; };
                content += r.bs_id;
                content += ",";
                content += metric;
                content += "," + num(s.min) + "," + num(s.median) + "," + num(s.max) + "\n";
            };
            line("mae", r.mae);
            line("mse", r.mse);
            line("rmse", r.rmse);
            line("mape", r.mape);
        }
        if (!any) continue;
        files.emplace_back("plot_improvement_" + feature_set_name(base_set) + "_to_" +
                               feature_set_name(enriched_set) + ".csv",
                           std::move(content));
    }
    return files;
}

}  // namespace roadcell
