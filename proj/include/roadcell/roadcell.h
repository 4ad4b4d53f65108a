#ifndef ROADCELL_H
#define ROADCELL_H

/* C interface to the road-to-cellular traffic toolkit: synthetic or measured
 * detector data in, per-base-station call load out, plus the feature-set
 * prediction benchmark. All functions returning rc_status leave their output
 * parameters NULL on failure and describe the failure via rc_last_error(). */

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

/* Nonzero values match the toolkit's error categories; the first three double
 * as CLI exit codes. */
typedef enum rc_status {
    RC_OK = 0,
    RC_ERR_USAGE = 1,
    RC_ERR_VALIDATION = 2,
    RC_ERR_TRAINING = 3,
    RC_ERR_IO = 4,
    RC_ERR_INTERNAL = 5
} rc_status;

const char* rc_version(void);

/* Message of the last failing rc_* call on the calling thread; never NULL.
 * Valid until the next failing call on the same thread. */
const char* rc_last_error(void);

/* Frees any char* produced by this library. NULL is a no-op. */
void rc_string_free(char* s);

typedef struct rc_corridor rc_corridor; /* ordered list of sites */
typedef struct rc_roadset rc_roadset;   /* aligned road series, one per site */
typedef struct rc_dataset rc_dataset;   /* generated per-site call loads */
typedef struct rc_report rc_report;     /* benchmark results */

/* --- corridor ----------------------------------------------------------- */

/* CSV columns bs_id,detector_id,range_miles; row order is travel order. */
rc_status rc_corridor_load(const char* csv_path, rc_corridor** out);
int rc_corridor_site_count(const rc_corridor* c);
rc_status rc_corridor_site_id(const rc_corridor* c, int site, char** out);
rc_status rc_corridor_detector_id(const rc_corridor* c, int site, char** out);
void rc_corridor_free(rc_corridor* c);

/* --- road data ----------------------------------------------------------- */

/* Synthetic daily-profile knobs, as JSON, for a site at the given corridor
 * position (positions vary the defaults deterministically). */
rc_status rc_default_profile_json(int position, char** out);

/* Generation parameters with every default filled in. json_or_null carries
 * partial overrides; NULL echoes the pure defaults. */
rc_status rc_gen_params_json(const char* json_or_null, char** out);

/* One synthetic detector series as a timestamp,flow,speed CSV. profile_json
 * NULL means the position-0 default profile. */
rc_status rc_road_synth_csv(const char* profile_json, int weeks, uint64_t seed,
                            const char* detector_id, char** csv_out);

/* Validates one detector CSV: gaps of at most max_gap_slots are interpolated
 * within the day, days with longer holes are dropped. Outputs the repaired
 * CSV and a JSON report of every change; either output may be NULL. */
rc_status rc_road_validate_csv(const char* csv_path, const char* detector_id,
                               int max_gap_slots, char** filled_csv_out,
                               char** report_json_out);

/* Road series for every corridor site. _load reads <detector_id>.csv from
 * dir, validating and filling like rc_road_validate_csv, then aligns all
 * series onto one slot axis and keeps only slots covered everywhere. _synth
 * generates weeks of weekday data per site; profile_json NULL gives each
 * site its position default. */
rc_status rc_roadset_load(const rc_corridor* c, const char* dir, int max_gap_slots,
                          rc_roadset** out);
rc_status rc_roadset_synth(const rc_corridor* c, const char* profile_json, int weeks,
                           uint64_t seed, rc_roadset** out);
int rc_roadset_site_count(const rc_roadset* r);
rc_status rc_roadset_csv(const rc_roadset* r, int site, char** csv_out);
rc_status rc_roadset_fill_report(const rc_roadset* r, int site, char** json_out);
void rc_roadset_free(rc_roadset* r);

/* --- call load generation ------------------------------------------------- */

/* gen_params_json NULL means defaults. keep_call_log nonzero retains per-call
 * records for rc_dataset_call_log (memory scales with call count). */
rc_status rc_dataset_generate(const rc_corridor* c, const rc_roadset* r,
                              const char* gen_params_json, int keep_call_log,
                              rc_dataset** out);
int rc_dataset_site_count(const rc_dataset* d);
/* slot_index,new_calls,handover_calls,total_calls rows for one site. */
rc_status rc_dataset_cell_csv(const rc_dataset* d, int site, char** csv_out);
/* One JSON object per line, one line per call, when the log was kept. */
rc_status rc_dataset_call_log(const rc_dataset* d, char** jsonl_out);
void rc_dataset_free(rc_dataset* d);

/* --- benchmark ------------------------------------------------------------ */

typedef void (*rc_progress_fn)(const char* phase, int done, int total, void* user);

/* Runs the site x feature-set x seed grid described by scenario_json (keys
 * name, history, split_ratios, feature_sets, seeds, mape_floor, noise_sigma,
 * jobs, gen_params, train_config; all optional, NULL means all defaults).
 * progress may be NULL; it is called as cells finish, possibly from worker
 * threads but never concurrently. */
rc_status rc_experiment_run(const rc_corridor* c, const rc_roadset* r,
                            const char* scenario_json, rc_progress_fn progress,
                            void* user, rc_report** out);

rc_status rc_report_parse(const char* json_text, rc_report** out);
/* Merges reports produced with identical knobs over disjoint site sets. */
rc_status rc_report_merge(const rc_report* const* reports, int count, rc_report** out);
rc_status rc_report_json(const rc_report* rep, char** out);
rc_status rc_report_table(const rc_report* rep, char** out);
int rc_report_plot_count(const rc_report* rep);
rc_status rc_report_plot_name(const rc_report* rep, int index, char** out);
rc_status rc_report_plot_csv(const rc_report* rep, int index, char** out);
void rc_report_free(rc_report* rep);

#ifdef __cplusplus
}
#endif

#endif /* ROADCELL_H */
