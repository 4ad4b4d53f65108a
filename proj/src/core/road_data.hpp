#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "core/calendar.hpp"

namespace roadcell {

// One 5-minute detector sample. slot_index uses weekday-only arithmetic
// (288 per day, Monday..Friday); see Calendar.
struct RoadSlot {
    std::int64_t slot_index = 0;
    std::int64_t flow = 0;  // vehicles observed in the slot
    double speed = 0.0;     // mph, slot average
};

struct RoadSeries {
    std::string detector_id;
    Calendar calendar;
    std::vector<RoadSlot> slots;  // strictly increasing slot_index
};

struct CellSite {
    std::string bs_id;
    std::string detector_id;
    double range_miles = 0.0;
    int position = 0;  // 0-based index along the corridor; traffic moves 0 -> up
};

struct Corridor {
    std::vector<CellSite> sites;
};

struct NoiseConfig {
    double sigma_fraction = 0.0;  // per-slot noise std as a fraction of flow
    std::uint64_t seed = 0;
};

struct FilledSlot {
    std::int64_t slot_index = 0;
    std::int64_t flow = 0;
    double speed = 0.0;
};

struct ExcludedDay {
    std::int64_t day_index = 0;  // weekday-only day index (slot_index / 288)
    int missing_slots = 0;
};

struct ValidationReport {
    std::vector<FilledSlot> filled;
    std::vector<ExcludedDay> excluded_days;
};

// Diurnal synthetic detector profile: flow is Poisson around a two-peak day
// curve, speed dips toward congestion_speed_mph as the scaled mean flow
// approaches congestion_flow. Per-day scale and peak jitter make days differ,
// which is what gives the road features predictive value downstream.
struct SynthProfile {
    double base_flow = 40.0;         // off-peak mean vehicles per slot
    double am_peak_flow = 120.0;     // extra mean flow at the AM peak
    double pm_peak_flow = 140.0;     // extra mean flow at the PM peak
    double am_peak_hour = 8.0;
    double pm_peak_hour = 17.0;
    double peak_width_hours = 1.5;   // gaussian peak width
    double day_scale_min = 0.75;     // per-day uniform flow scale
    double day_scale_max = 1.30;
    double peak_jitter_hours = 0.5;  // per-day uniform peak-center shift
    double free_speed_mph = 65.0;
    double congestion_speed_mph = 25.0;
    double congestion_flow = 150.0;  // scaled mean flow where the dip is halfway
    double speed_jitter_mph = 1.5;   // per-slot gaussian speed jitter
};

// --- parsing and serialization ---------------------------------------------

// Reads a `timestamp,flow,speed` CSV. Weekend rows are skipped (the pipeline
// is weekday-only). The calendar epoch is the Monday of the earliest row's
// week unless `epoch` is supplied (must be a Monday on/before every row).
RoadSeries parse_road_csv(const std::string& path, const std::string& detector_id);
RoadSeries parse_road_csv(const std::string& path, const std::string& detector_id,
                          const CivilDate& epoch);

std::string road_csv_text(const RoadSeries& series);
void write_road_csv(const RoadSeries& series, const std::string& path);

// Rebase to an earlier Monday so several detectors share one slot axis.
RoadSeries rebase_epoch(const RoadSeries& series, const CivilDate& new_epoch);
// Rebases every series to the earliest epoch among them, in place.
void align_epochs(std::vector<RoadSeries>& series_list);

// --- validation -------------------------------------------------------------

// Fills gaps of at most max_gap_slots by linear interpolation inside each day
// (flow rounded; gaps touching a day edge extend the nearest sample). A day
// with a longer gap is excluded: flagged in the report and its slots dropped
// from the returned series. Present slots are never altered.
std::pair<RoadSeries, ValidationReport> validate_and_fill(const RoadSeries& series,
                                                          int max_gap_slots = 6);

std::string validation_report_json(const ValidationReport& report, const Calendar& calendar);

// --- transforms ---------------------------------------------------------------

// Slot t of the result carries the measurements of slot t-1 of the input (what
// a site observes one slot late). Slots whose predecessor is missing are
// dropped, so a gapless length-n series maps to length n-1.
RoadSeries lag_align(const RoadSeries& series);

// flow := round(flow + N(0, sigma_fraction*flow)) clamped at 0; speed kept.
RoadSeries add_flow_noise(const RoadSeries& series, const NoiseConfig& cfg);

// --- corridor -----------------------------------------------------------------

Corridor parse_corridor_csv(const std::string& path);
Corridor build_corridor(const std::vector<CellSite>& sites_in_travel_order);
std::string corridor_csv_text(const Corridor& corridor);
void write_corridor_csv(const Corridor& corridor, const std::string& path);

// --- synthesis ------------------------------------------------------------------

SynthProfile default_profile(int site_position);
SynthProfile synth_profile_from_json(const std::string& json_text);
std::string synth_profile_json(const SynthProfile& profile);

// Mean flow of the day curve at an hour of day, including per-day peak shifts
// but before the per-day scale.
double profile_mean_flow(const SynthProfile& profile, double hour_of_day, double am_shift,
                         double pm_shift);
double profile_mean_speed(const SynthProfile& profile, double scaled_mean_flow);

RoadSeries synth_road(const SynthProfile& profile, int weeks, std::uint64_t seed,
                      const std::string& detector_id, const CivilDate& epoch);

}  // namespace roadcell
