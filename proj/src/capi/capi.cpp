#include "roadcell/roadcell.h"

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "core/calendar.hpp"
#include "core/cellgen.hpp"
#include "core/errors.hpp"
#include "core/evalbench.hpp"
#include "core/road_data.hpp"

using namespace roadcell;

struct rc_corridor {
    Corridor corridor;
};

struct rc_roadset {
    std::vector<RoadSeries> roads;
    std::vector<std::string> fill_reports;  // JSON per site; "{}"-ish for synth
};

struct rc_dataset {
    GenResult result;
    std::vector<std::string> bs_ids;
    bool with_log = false;
};

struct rc_report {
    ErrorReport report;
    std::vector<std::pair<std::string, std::string>> plots;
};

namespace {

thread_local std::string g_last_error;

void set_error(const std::string& msg) { g_last_error = msg; }

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (out == nullptr) return nullptr;
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

// Runs the body, translating exceptions into status codes + rc_last_error.
template <typename F>
rc_status guarded(F&& body) {
    try {
        body();
        return RC_OK;
    } catch (const Error& e) {
        set_error(e.what());
        return static_cast<rc_status>(static_cast<int>(e.kind()));
    } catch (const std::exception& e) {
        set_error(e.what());
        return RC_ERR_INTERNAL;
    } catch (...) {
        set_error("unknown error");
        return RC_ERR_INTERNAL;
    }
}

void require(bool ok, const char* what) {
    if (!ok) fail(ErrKind::usage, what);
}

rc_status to_out(const std::string& value, char** out) {
    *out = dup_string(value);
    if (*out == nullptr) {
        set_error("out of memory");
        return RC_ERR_INTERNAL;
    }
    return RC_OK;
}

rc_report* make_report(ErrorReport report) {
    auto* handle = new rc_report;
    handle->plots = plot_csvs(report);
    handle->report = std::move(report);
    return handle;
}

}  // namespace

extern "C" {

const char* rc_version(void) { return "0.1.0"; }

const char* rc_last_error(void) { return g_last_error.c_str(); }

void rc_string_free(char* s) { std::free(s); }

/* --- corridor ----------------------------------------------------------- */

rc_status rc_corridor_load(const char* csv_path, rc_corridor** out) {
    if (out != nullptr) *out = nullptr;
    return guarded([&] {
        require(csv_path != nullptr && out != nullptr, "null argument");
        auto handle = std::make_unique<rc_corridor>();
        handle->corridor = parse_corridor_csv(csv_path);
        *out = handle.release();
    });
}

int rc_corridor_site_count(const rc_corridor* c) {
    return c == nullptr ? 0 : static_cast<int>(c->corridor.sites.size());
}

rc_status rc_corridor_site_id(const rc_corridor* c, int site, char** out) {
    if (out != nullptr) *out = nullptr;
    return guarded([&] {
        require(c != nullptr && out != nullptr, "null argument");
        require(site >= 0 && site < rc_corridor_site_count(c), "site index out of range");
        const rc_status rc = to_out(c->corridor.sites[static_cast<std::size_t>(site)].bs_id, out);
        if (rc != RC_OK) fail(ErrKind::internal, g_last_error);
    });
}

rc_status rc_corridor_detector_id(const rc_corridor* c, int site, char** out) {
    if (out != nullptr) *out = nullptr;
    return guarded([&] {
        require(c != nullptr && out != nullptr, "null argument");
        require(site >= 0 && site < rc_corridor_site_count(c), "site index out of range");
        const rc_status rc =
            to_out(c->corridor.sites[static_cast<std::size_t>(site)].detector_id, out);
        if (rc != RC_OK) fail(ErrKind::internal, g_last_error);
    });
}

void rc_corridor_free(rc_corridor* c) { delete c; }

/* --- road data ----------------------------------------------------------- */

rc_status rc_default_profile_json(int position, char** out) {
    if (out != nullptr) *out = nullptr;
    return guarded([&] {
        require(out != nullptr, "null argument");
        require(position >= 0, "position must be >= 0");
        if (to_out(synth_profile_json(default_profile(position)), out) != RC_OK)
            fail(ErrKind::internal, g_last_error);
    });
}

rc_status rc_gen_params_json(const char* json_or_null, char** out) {
    if (out != nullptr) *out = nullptr;
    return guarded([&] {
        require(out != nullptr, "null argument");
        const GenParams params =
            json_or_null != nullptr ? gen_params_from_json(json_or_null) : GenParams{};
        if (to_out(gen_params_json(params), out) != RC_OK)
            fail(ErrKind::internal, g_last_error);
    });
}

rc_status rc_road_synth_csv(const char* profile_json, int weeks, uint64_t seed,
                            const char* detector_id, char** csv_out) {
    if (csv_out != nullptr) *csv_out = nullptr;
    return guarded([&] {
        require(detector_id != nullptr && csv_out != nullptr, "null argument");
        const SynthProfile profile =
            profile_json != nullptr ? synth_profile_from_json(profile_json)
                                    : default_profile(0);
        const RoadSeries series = synth_road(profile, weeks, seed, detector_id,
                                             civil_from_days(Calendar().epoch_days()));
        if (to_out(road_csv_text(series), csv_out) != RC_OK)
            fail(ErrKind::internal, g_last_error);
    });
}

rc_status rc_road_validate_csv(const char* csv_path, const char* detector_id,
                               int max_gap_slots, char** filled_csv_out,
                               char** report_json_out) {
    if (filled_csv_out != nullptr) *filled_csv_out = nullptr;
    if (report_json_out != nullptr) *report_json_out = nullptr;
    return guarded([&] {
        require(csv_path != nullptr && detector_id != nullptr, "null argument");
        const RoadSeries series = parse_road_csv(csv_path, detector_id);
        auto [filled, report] = validate_and_fill(series, max_gap_slots);
        if (filled_csv_out != nullptr &&
            to_out(road_csv_text(filled), filled_csv_out) != RC_OK)
            fail(ErrKind::internal, g_last_error);
        if (report_json_out != nullptr &&
            to_out(validation_report_json(report, filled.calendar), report_json_out) != RC_OK)
            fail(ErrKind::internal, g_last_error);
    });
}

rc_status rc_roadset_load(const rc_corridor* c, const char* dir, int max_gap_slots,
                          rc_roadset** out) {
    if (out != nullptr) *out = nullptr;
    return guarded([&] {
        require(c != nullptr && dir != nullptr && out != nullptr, "null argument");
        auto handle = std::make_unique<rc_roadset>();
        for (const CellSite& site : c->corridor.sites) {
            const std::filesystem::path path =
                std::filesystem::path(dir) / (site.detector_id + ".csv");
            if (!std::filesystem::exists(path))
                fail(ErrKind::io, "no road data for detector " + site.detector_id +
                                      ": " + path.string() + " does not exist");
            handle->roads.push_back(parse_road_csv(path.string(), site.detector_id));
        }
        align_epochs(handle->roads);
        for (RoadSeries& road : handle->roads) {
            auto [filled, report] = validate_and_fill(road, max_gap_slots);
            handle->fill_reports.push_back(
                validation_report_json(report, filled.calendar));
            road = std::move(filled);
        }
        intersect_coverage(handle->roads);
        *out = handle.release();
    });
}

rc_status rc_roadset_synth(const rc_corridor* c, const char* profile_json, int weeks,
                           uint64_t seed, rc_roadset** out) {
    if (out != nullptr) *out = nullptr;
    return guarded([&] {
        require(c != nullptr && out != nullptr, "null argument");
        auto handle = std::make_unique<rc_roadset>();
        for (std::size_t i = 0; i < c->corridor.sites.size(); ++i) {
            const SynthProfile profile =
                profile_json != nullptr ? synth_profile_from_json(profile_json)
                                        : default_profile(static_cast<int>(i));
            handle->roads.push_back(synth_road(profile, weeks, seed,
                                               c->corridor.sites[i].detector_id,
                                               civil_from_days(Calendar().epoch_days())));
            handle->fill_reports.push_back(
                validation_report_json(ValidationReport{}, handle->roads.back().calendar));
        }
        *out = handle.release();
    });
}

int rc_roadset_site_count(const rc_roadset* r) {
    return r == nullptr ? 0 : static_cast<int>(r->roads.size());
}

rc_status rc_roadset_csv(const rc_roadset* r, int site, char** csv_out) {
    if (csv_out != nullptr) *csv_out = nullptr;
    return guarded([&] {
        require(r != nullptr && csv_out != nullptr, "null argument");
        require(site >= 0 && site < rc_roadset_site_count(r), "site index out of range");
        if (to_out(road_csv_text(r->roads[static_cast<std::size_t>(site)]), csv_out) != RC_OK)
            fail(ErrKind::internal, g_last_error);
    });
}

rc_status rc_roadset_fill_report(const rc_roadset* r, int site, char** json_out) {
    if (json_out != nullptr) *json_out = nullptr;
    return guarded([&] {
        require(r != nullptr && json_out != nullptr, "null argument");
        require(site >= 0 && site < rc_roadset_site_count(r), "site index out of range");
        if (to_out(r->fill_reports[static_cast<std::size_t>(site)], json_out) != RC_OK)
            fail(ErrKind::internal, g_last_error);
    });
}

void rc_roadset_free(rc_roadset* r) { delete r; }

/* --- call load generation ------------------------------------------------- */

rc_status rc_dataset_generate(const rc_corridor* c, const rc_roadset* r,
                              const char* gen_params_json, int keep_call_log,
                              rc_dataset** out) {
    if (out != nullptr) *out = nullptr;
    return guarded([&] {
        require(c != nullptr && r != nullptr && out != nullptr, "null argument");
        const GenParams params = gen_params_json != nullptr
                                     ? gen_params_from_json(gen_params_json)
                                     : GenParams{};
        auto handle = std::make_unique<rc_dataset>();
        handle->with_log = keep_call_log != 0;
        handle->result = generate(c->corridor, r->roads, params, handle->with_log);
        for (const CellSite& site : c->corridor.sites) handle->bs_ids.push_back(site.bs_id);
        *out = handle.release();
    });
}

int rc_dataset_site_count(const rc_dataset* d) {
    return d == nullptr ? 0 : static_cast<int>(d->result.series.size());
}

rc_status rc_dataset_cell_csv(const rc_dataset* d, int site, char** csv_out) {
    if (csv_out != nullptr) *csv_out = nullptr;
    return guarded([&] {
        require(d != nullptr && csv_out != nullptr, "null argument");
        require(site >= 0 && site < rc_dataset_site_count(d), "site index out of range");
        if (to_out(cell_csv_text(d->result.series[static_cast<std::size_t>(site)]),
                   csv_out) != RC_OK)
            fail(ErrKind::internal, g_last_error);
    });
}

rc_status rc_dataset_call_log(const rc_dataset* d, char** jsonl_out) {
    if (jsonl_out != nullptr) *jsonl_out = nullptr;
    return guarded([&] {
        require(d != nullptr && jsonl_out != nullptr, "null argument");
        if (!d->with_log)
            fail(ErrKind::validation, "call log was not kept; generate with keep_call_log");
        if (to_out(call_log_jsonl(d->result.calls), jsonl_out) != RC_OK)
            fail(ErrKind::internal, g_last_error);
    });
}

void rc_dataset_free(rc_dataset* d) { delete d; }

/* --- benchmark ------------------------------------------------------------ */

rc_status rc_experiment_run(const rc_corridor* c, const rc_roadset* r,
                            const char* scenario_json, rc_progress_fn progress,
                            void* user, rc_report** out) {
    if (out != nullptr) *out = nullptr;
    return guarded([&] {
        require(c != nullptr && r != nullptr && out != nullptr, "null argument");
        ExperimentScenario scenario =
            scenario_json != nullptr ? scenario_from_json(scenario_json)
                                     : ExperimentScenario{};
        scenario.corridor = c->corridor;
        scenario.roads = r->roads;
        ProgressFn cb;
        if (progress != nullptr)
            cb = [progress, user](const std::string& phase, int done, int total) {
                progress(phase.c_str(), done, total, user);
            };
        *out = make_report(run_experiment(scenario, cb));
    });
}

rc_status rc_report_parse(const char* json_text, rc_report** out) {
    if (out != nullptr) *out = nullptr;
    return guarded([&] {
        require(json_text != nullptr && out != nullptr, "null argument");
        *out = make_report(error_report_from_json(json_text));
    });
}

rc_status rc_report_merge(const rc_report* const* reports, int count, rc_report** out) {
    if (out != nullptr) *out = nullptr;
    return guarded([&] {
        require(reports != nullptr && out != nullptr, "null argument");
        require(count > 0, "need at least one report");
        std::vector<ErrorReport> list;
        for (int i = 0; i < count; ++i) {
            require(reports[i] != nullptr, "null report in list");
            list.push_back(reports[i]->report);
        }
        *out = make_report(merge_reports(list));
    });
}

rc_status rc_report_json(const rc_report* rep, char** out) {
    if (out != nullptr) *out = nullptr;
    return guarded([&] {
        require(rep != nullptr && out != nullptr, "null argument");
        if (to_out(error_report_json(rep->report), out) != RC_OK)
            fail(ErrKind::internal, g_last_error);
    });
}

rc_status rc_report_table(const rc_report* rep, char** out) {
    if (out != nullptr) *out = nullptr;
    return guarded([&] {
        require(rep != nullptr && out != nullptr, "null argument");
        if (to_out(error_report_table(rep->report), out) != RC_OK)
            fail(ErrKind::internal, g_last_error);
    });
}

int rc_report_plot_count(const rc_report* rep) {
    return rep == nullptr ? 0 : static_cast<int>(rep->plots.size());
}

rc_status rc_report_plot_name(const rc_report* rep, int index, char** out) {
    if (out != nullptr) *out = nullptr;
    return guarded([&] {
        require(rep != nullptr && out != nullptr, "null argument");
        require(index >= 0 && index < rc_report_plot_count(rep), "plot index out of range");
        if (to_out(rep->plots[static_cast<std::size_t>(index)].first, out) != RC_OK)
            fail(ErrKind::internal, g_last_error);
    });
}

rc_status rc_report_plot_csv(const rc_report* rep, int index, char** out) {
    if (out != nullptr) *out = nullptr;
    return guarded([&] {
        require(rep != nullptr && out != nullptr, "null argument");
        require(index >= 0 && index < rc_report_plot_count(rep), "plot index out of range");
        if (to_out(rep->plots[static_cast<std::size_t>(index)].second, out) != RC_OK)
            fail(ErrKind::internal, g_last_error);
    });
}

void rc_report_free(rc_report* rep) { delete rep; }

}  // extern "C"
