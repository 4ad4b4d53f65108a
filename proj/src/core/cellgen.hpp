#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "core/calendar.hpp"
#include "core/rng.hpp"
#include "core/road_data.hpp"

namespace roadcell {

struct DurationComponent {
    double weight = 0.0;
    double mean_min = 0.0;
    double var_min2 = 0.0;
};

struct GenParams {
    double lambda_per_min = 0.2;  // per-vehicle call rate while inside a cell
    std::vector<DurationComponent> duration_mix = {{0.5, 1.0, 3.0}, {0.5, 10.0, 30.0}};
    double speed_noise_std = 0.05;  // fractional speed perturbation per dwell
    std::uint64_t seed = 0;
};

void check_gen_params(const GenParams& params);
GenParams gen_params_from_json(const std::string& json_text);
std::string gen_params_json(const GenParams& params);

struct VehicleTransit {
    std::int64_t vehicle_id = 0;
    int cell_position = 0;
    double arrival_time = 0.0;  // minutes from calendar epoch
    double dwell_min = 0.0;
    double departure_time = 0.0;  // arrival + dwell
};

enum class SegKind { new_call, handover };

struct CallSegment {
    int cell_position = 0;
    double enter_time = 0.0;
    double end_time = 0.0;  // vehicle departure or call end, whichever first
    SegKind kind = SegKind::new_call;
};

struct CallRecord {
    std::int64_t call_id = 0;
    std::int64_t vehicle_id = 0;
    double start_time = 0.0;
    double total_duration_min = 0.0;
    std::vector<CallSegment> segments;
};

// Per-site per-slot call counts; arrays parallel the road series used for
// generation (same slot_index values, same length).
struct CellSeries {
    std::string bs_id;
    Calendar calendar;
    std::vector<std::int64_t> slot_index;
    std::vector<std::int64_t> new_calls;
    std::vector<std::int64_t> handover_calls;
    std::vector<std::int64_t> total_calls;
};

// --- elementary generation steps --------------------------------------------

// Exactly slot.flow arrival times inside the slot's 5-minute span: a Poisson
// process conditioned on its count, i.e. sorted i.i.d. uniforms.
std::vector<double> gen_arrivals(const RoadSlot& slot, Rng& rng);

// 60*range/(speed*(1+eta)), eta ~ N(0, speed_noise_std) clamped to +-0.9;
// result clamped to [0.05, 120] minutes.
double dwell_minutes(double range_miles, double speed_mph, const GenParams& params, Rng& rng);

// Mixture component by weight, then log-normal with moment-matched
// underlying parameters: sigma^2 = ln(1 + var/mean^2), mu = ln(mean) - sigma^2/2.
double sample_duration(const std::vector<DurationComponent>& mix, Rng& rng);

// Calls started during the transit: Poisson process of rate lambda_per_min on
// [arrival, departure); each stub carries its first (new) segment.
std::vector<CallRecord> gen_calls_for_transit(const VehicleTransit& transit,
                                              const GenParams& params, Rng& rng);

// Extends the call across cells while it outlives the vehicle's stay: each
// hop's dwell uses the next site's range and that site's speed at the slot
// containing the entry time. Stops at call end, corridor exit, or a slot the
// next site does not cover (horizon truncation).
CallRecord propagate_handovers(const CallRecord& call, const Corridor& corridor,
                               const std::vector<RoadSeries>& roads, const GenParams& params,
                               Rng& rng);

// Adjacent-detector flow reconciliation: a handover entering `down` during a
// slot where down's flow f_d is below up's flow f_u survives with probability
// f_d/f_u (f_u = 0 drops it outright); on a drop the handover segment and all
// later segments are removed. Slots with f_d >= f_u (and f_u > 0) pass through.
std::vector<CallRecord> reconcile_flows(const CellSite& up, const CellSite& down,
                                        const std::vector<CallRecord>& calls,
                                        const std::vector<RoadSeries>& roads, Rng& rng);

// --- whole-corridor generation -----------------------------------------------

struct GenResult {
    std::vector<CellSeries> series;   // one per corridor site, in order
    std::vector<CallRecord> calls;    // populated only when keep_call_log
};

// Requires roads[i] to belong to corridor.sites[i], all sharing one calendar
// and identical slot coverage, with positive speeds. New calls are counted in
// the slot of start_time at the origin site; handovers in the slot of segment
// enter_time at the receiving site. Reconciliation is applied at every cell
// boundary during propagation (per-call independent Bernoulli, identical in
// distribution to running reconcile_flows boundary by boundary). Deterministic
// for a given params.seed.
GenResult generate(const Corridor& corridor, const std::vector<RoadSeries>& roads,
                   const GenParams& params, bool keep_call_log = false);

// Drops slots not covered by every series (after which generate's identical-
// coverage precondition holds). Calendars must already agree.
void intersect_coverage(std::vector<RoadSeries>& roads);

// --- serialization --------------------------------------------------------------

std::string cell_csv_text(const CellSeries& series);
void write_cell_csv(const CellSeries& series, const std::string& path);
CellSeries parse_cell_csv(const std::string& path, const std::string& bs_id);

std::string call_log_jsonl(const std::vector<CallRecord>& calls);

}  // namespace roadcell
