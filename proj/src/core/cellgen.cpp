#include "core/cellgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <unordered_map>

#include "json.hpp"

#include "core/errors.hpp"
#include "core/textio.hpp"

namespace roadcell {

namespace {

using ordered_json = nlohmann::ordered_json;

// Slot-indexed view of one road series.
struct SiteLookup {
    const RoadSeries* road = nullptr;
    std::unordered_map<std::int64_t, std::size_t> offset;

    void build(const RoadSeries& r) {
        road = &r;
        offset.reserve(r.slots.size() * 2);
        for (std::size_t i = 0; i < r.slots.size(); ++i) offset.emplace(r.slots[i].slot_index, i);
    }
    const RoadSlot* at(std::int64_t slot) const {
        auto it = offset.find(slot);
        return it == offset.end() ? nullptr : &road->slots[it->second];
    }
};

std::int64_t slot_of_time(double minutes) {
    return static_cast<std::int64_t>(std::floor(minutes / kSlotMinutes));
}

// Core handover walk. When `reconcile` is true, each boundary crossing also
// faces the adjacent-flow Bernoulli drop, drawn from the same stream as the
// hop's dwell noise.
CallRecord propagate_impl(CallRecord call, const Corridor& corridor,
                          const std::vector<SiteLookup>& lookups, const GenParams& params,
                          Rng& rng, bool reconcile) {
    if (call.segments.empty()) fail(ErrKind::internal, "call without a first segment");
    const double call_end = call.start_time + call.total_duration_min;
    const int n = static_cast<int>(corridor.sites.size());
    while (true) {
        const CallSegment last = call.segments.back();
        if (!(call_end > last.end_time)) break;  // ended inside this cell (strict rule)
        const int next = last.cell_position + 1;
        if (next >= n) break;  // corridor exit cuts the call
        const double enter = last.end_time;
        const std::int64_t slot = slot_of_time(enter);
        const RoadSlot* down = lookups[static_cast<std::size_t>(next)].at(slot);
        if (down == nullptr) break;  // beyond covered horizon
        if (reconcile) {
            const RoadSlot* up =
                lookups[static_cast<std::size_t>(last.cell_position)].at(slot);
            const std::int64_t f_u = up == nullptr ? 0 : up->flow;
            if (f_u == 0) break;  // upstream recorded nothing: vehicle removed
            if (down->flow < f_u) {
                const double keep_p = static_cast<double>(down->flow) / static_cast<double>(f_u);
                if (rng.uniform01() >= keep_p) break;
            }
        }
        const double dwell = dwell_minutes(corridor.sites[static_cast<std::size_t>(next)].range_miles,
                                           down->speed, params, rng);
        CallSegment seg;
        seg.cell_position = next;
        seg.enter_time = enter;
        seg.end_time = std::min(call_end, enter + dwell);
        seg.kind = SegKind::handover;
        call.segments.push_back(seg);
    }
    return call;
}

}  // namespace

void check_gen_params(const GenParams& params) {
    if (!(params.lambda_per_min > 0.0))
        fail(ErrKind::validation, "lambda_per_min must be > 0");
    if (params.speed_noise_std < 0.0)
        fail(ErrKind::validation, "speed_noise_std must be >= 0");
    if (params.duration_mix.empty())
        fail(ErrKind::validation, "duration_mix must not be empty");
    double wsum = 0.0;
    for (const DurationComponent& c : params.duration_mix) {
        if (!(c.weight > 0.0) || c.weight > 1.0)
            fail(ErrKind::validation, "duration_mix weights must be in (0,1]");
        if (!(c.mean_min > 0.0)) fail(ErrKind::validation, "duration_mix means must be > 0");
        if (!(c.var_min2 > 0.0)) fail(ErrKind::validation, "duration_mix variances must be > 0");
        wsum += c.weight;
    }
    if (std::abs(wsum - 1.0) > 1e-9)
        fail(ErrKind::validation, "duration_mix weights must sum to 1");
}

GenParams gen_params_from_json(const std::string& json_text) {
    ordered_json j;
    try {
        j = ordered_json::parse(json_text);
    } catch (const std::exception& e) {
        fail(ErrKind::validation, std::string("bad generator params JSON: ") + e.what());
    }
    if (!j.is_object()) fail(ErrKind::validation, "generator params JSON must be an object");
    GenParams p;
    if (j.contains("lambda_per_min")) {
        p.lambda_per_min = j["lambda_per_min"].get<double>();
        j.erase("lambda_per_min");
    }
    if (j.contains("speed_noise_std")) {
        p.speed_noise_std = j["speed_noise_std"].get<double>();
        j.erase("speed_noise_std");
    }
    if (j.contains("seed")) {
        p.seed = j["seed"].get<std::uint64_t>();
        j.erase("seed");
    }
    if (j.contains("duration_mix")) {
        if (!j["duration_mix"].is_array())
            fail(ErrKind::validation, "duration_mix must be an array");
        p.duration_mix.clear();
        for (const auto& e : j["duration_mix"]) {
            DurationComponent c;
            c.weight = e.at("weight").get<double>();
            c.mean_min = e.at("mean_min").get<double>();
            c.var_min2 = e.at("var_min2").get<double>();
            p.duration_mix.push_back(c);
        }
        j.erase("duration_mix");
    }
    if (!j.empty())
        fail(ErrKind::validation, "unknown generator params field: " + j.begin().key());
    check_gen_params(p);
    return p;
}

std::string gen_params_json(const GenParams& params) {
    ordered_json j;
    j["lambda_per_min"] = params.lambda_per_min;
    j["duration_mix"] = ordered_json::array();
    for (const DurationComponent& c : params.duration_mix) {
        ordered_json e;
        e["weight"] = c.weight;
        e["mean_min"] = c.mean_min;
        e["var_min2"] = c.var_min2;
        j["duration_mix"].push_back(e);
    }
    j["speed_noise_std"] = params.speed_noise_std;
    j["seed"] = params.seed;
    return j.dump(2) + "\n";
}

std::vector<double> gen_arrivals(const RoadSlot& slot, Rng& rng) {
    std::vector<double> times(static_cast<std::size_t>(slot.flow < 0 ? 0 : slot.flow));
    const double base = static_cast<double>(slot.slot_index) * kSlotMinutes;
    for (double& t : times) t = base + rng.uniform01() * kSlotMinutes;
    std::sort(times.begin(), times.end());
    return times;
}

double dwell_minutes(double range_miles, double speed_mph, const GenParams& params, Rng& rng) {
    if (!(range_miles > 0.0)) fail(ErrKind::internal, "dwell needs a positive range");
    if (!(speed_mph > 0.0)) fail(ErrKind::validation, "dwell needs a positive speed");
    double eta = params.speed_noise_std > 0.0 ? rng.normal(0.0, params.speed_noise_std) : 0.0;
    eta = std::clamp(eta, -0.9, 0.9);
    const double minutes = 60.0 * range_miles / (speed_mph * (1.0 + eta));
    return std::clamp(minutes, 0.05, 120.0);
}

double sample_duration(const std::vector<DurationComponent>& mix, Rng& rng) {
    double u = rng.uniform01();
    std::size_t pick = mix.size() - 1;
    for (std::size_t i = 0; i < mix.size(); ++i) {
        if (u < mix[i].weight) {
            pick = i;
            break;
        }
        u -= mix[i].weight;
    }
    const DurationComponent& c = mix[pick];
    const double sigma2 = std::log(1.0 + c.var_min2 / (c.mean_min * c.mean_min));
    const double mu = std::log(c.mean_min) - 0.5 * sigma2;
    return rng.lognormal(mu, std::sqrt(sigma2));
}

std::vector<CallRecord> gen_calls_for_transit(const VehicleTransit& transit,
                                              const GenParams& params, Rng& rng) {
    std::vector<CallRecord> calls;
    double t = transit.arrival_time + rng.exponential(params.lambda_per_min);
    while (t < transit.departure_time) {
        CallRecord call;
        call.vehicle_id = transit.vehicle_id;
        call.start_time = t;
        call.total_duration_min = sample_duration(params.duration_mix, rng);
        CallSegment seg;
        seg.cell_position = transit.cell_position;
        seg.enter_time = t;
        seg.end_time = std::min(t + call.total_duration_min, transit.departure_time);
        seg.kind = SegKind::new_call;
        call.segments.push_back(seg);
        calls.push_back(std::move(call));
        t += rng.exponential(params.lambda_per_min);
    }
    return calls;
}

CallRecord propagate_handovers(const CallRecord& call, const Corridor& corridor,
                               const std::vector<RoadSeries>& roads, const GenParams& params,
                               Rng& rng) {
    std::vector<SiteLookup> lookups(roads.size());
    for (std::size_t i = 0; i < roads.size(); ++i) lookups[i].build(roads[i]);
    return propagate_impl(call, corridor, lookups, params, rng, /*reconcile=*/false);
}

std::vector<CallRecord> reconcile_flows(const CellSite& up, const CellSite& down,
                                        const std::vector<CallRecord>& calls,
                                        const std::vector<RoadSeries>& roads, Rng& rng) {
    if (down.position != up.position + 1)
        fail(ErrKind::internal, "reconciliation requires adjacent sites");
    SiteLookup up_look, down_look;
    up_look.build(roads[static_cast<std::size_t>(up.position)]);
    down_look.build(roads[static_cast<std::size_t>(down.position)]);

    std::vector<CallRecord> out;
    out.reserve(calls.size());
    for (const CallRecord& call : calls) {
        std::size_t seg_at = call.segments.size();
        for (std::size_t i = 0; i < call.segments.size(); ++i) {
            if (call.segments[i].cell_position == down.position &&
                call.segments[i].kind == SegKind::handover) {
                seg_at = i;
                break;
            }
        }
        if (seg_at == call.segments.size()) {
            out.push_back(call);
            continue;
        }
        const std::int64_t slot = slot_of_time(call.segments[seg_at].enter_time);
        const RoadSlot* u = up_look.at(slot);
        const RoadSlot* d = down_look.at(slot);
        if (u == nullptr || d == nullptr)
            fail(ErrKind::internal, "reconciliation slot missing from road coverage");
        bool keep = true;
        if (u->flow == 0) {
            keep = false;
        } else if (d->flow < u->flow) {
            keep = rng.uniform01() <
                   static_cast<double>(d->flow) / static_cast<double>(u->flow);
        }
        CallRecord kept = call;
        if (!keep) kept.segments.resize(seg_at);
        out.push_back(std::move(kept));
    }
    return out;
}

void intersect_coverage(std::vector<RoadSeries>& roads) {
    if (roads.size() < 2) return;
    for (std::size_t i = 1; i < roads.size(); ++i) {
        if (!(roads[i].calendar == roads[0].calendar))
            fail(ErrKind::validation, "road series calendars differ; align epochs first");
    }
    std::unordered_map<std::int64_t, std::size_t> count;
    for (const RoadSeries& r : roads)
        for (const RoadSlot& s : r.slots) ++count[s.slot_index];
    for (RoadSeries& r : roads) {
        std::vector<RoadSlot> kept;
        kept.reserve(r.slots.size());
        for (const RoadSlot& s : r.slots)
            if (count[s.slot_index] == roads.size()) kept.push_back(s);
        r.slots = std::move(kept);
    }
}

GenResult generate(const Corridor& corridor, const std::vector<RoadSeries>& roads,
                   const GenParams& params, bool keep_call_log) {
    check_gen_params(params);
    if (corridor.sites.empty()) fail(ErrKind::validation, "corridor has no sites");
    if (roads.size() != corridor.sites.size())
        fail(ErrKind::validation, "road series count does not match corridor sites");
    const std::size_t n = roads.size();
    for (std::size_t i = 0; i < n; ++i) {
        if (roads[i].slots.empty())
            fail(ErrKind::validation, "empty road series for detector " +
                                          corridor.sites[i].detector_id);
        if (!(roads[i].calendar == roads[0].calendar))
            fail(ErrKind::validation, "calendar mismatch across sites");
        if (roads[i].slots.size() != roads[0].slots.size())
            fail(ErrKind::validation, "calendar mismatch across sites: coverage differs");
        for (std::size_t k = 0; k < roads[i].slots.size(); ++k) {
            if (roads[i].slots[k].slot_index != roads[0].slots[k].slot_index)
                fail(ErrKind::validation, "calendar mismatch across sites: coverage differs");
            if (!(roads[i].slots[k].speed > 0.0))
                fail(ErrKind::validation,
                     "non-positive speed at detector " + corridor.sites[i].detector_id +
                         " slot " + std::to_string(roads[i].slots[k].slot_index) +
                         "; generation needs positive speeds");
        }
    }

    std::vector<SiteLookup> lookups(n);
    for (std::size_t i = 0; i < n; ++i) lookups[i].build(roads[i]);

    GenResult result;
    result.series.resize(n);
    const std::size_t len = roads[0].slots.size();
    for (std::size_t i = 0; i < n; ++i) {
        CellSeries& cs = result.series[i];
        cs.bs_id = corridor.sites[i].bs_id;
        cs.calendar = roads[i].calendar;
        cs.slot_index.reserve(len);
        for (const RoadSlot& s : roads[i].slots) cs.slot_index.push_back(s.slot_index);
        cs.new_calls.assign(len, 0);
        cs.handover_calls.assign(len, 0);
        cs.total_calls.assign(len, 0);
    }

    std::int64_t next_vehicle = 1;
    std::int64_t next_call = 1;
    for (std::size_t site = 0; site < n; ++site) {
        Rng veh_rng(stream_seed(params.seed, site, Stream::vehicles));
        Rng call_rng(stream_seed(params.seed, site, Stream::calls));
        Rng ho_rng(stream_seed(params.seed, site, Stream::handover));
        const double range = corridor.sites[site].range_miles;
        for (std::size_t k = 0; k < roads[site].slots.size(); ++k) {
            const RoadSlot& slot = roads[site].slots[k];
            const std::vector<double> arrivals = gen_arrivals(slot, veh_rng);
            for (double at : arrivals) {
                VehicleTransit transit;
                transit.vehicle_id = next_vehicle++;
                transit.cell_position = static_cast<int>(site);
                transit.arrival_time = at;
                transit.dwell_min = dwell_minutes(range, slot.speed, params, veh_rng);
                transit.departure_time = at + transit.dwell_min;
                std::vector<CallRecord> stubs =
                    gen_calls_for_transit(transit, params, call_rng);
                for (CallRecord& stub : stubs) {
                    const std::int64_t start_slot = slot_of_time(stub.start_time);
                    auto off = lookups[site].offset.find(start_slot);
                    if (off == lookups[site].offset.end()) continue;  // beyond coverage
                    stub.call_id = next_call++;
                    CallRecord full = propagate_impl(std::move(stub), corridor, lookups,
                                                     params, ho_rng, /*reconcile=*/true);
                    result.series[site].new_calls[off->second] += 1;
                    for (std::size_t si = 1; si < full.segments.size(); ++si) {
                        const CallSegment& seg = full.segments[si];
                        const std::size_t pos = static_cast<std::size_t>(seg.cell_position);
                        auto ho_off = lookups[pos].offset.find(slot_of_time(seg.enter_time));
                        if (ho_off == lookups[pos].offset.end())
                            fail(ErrKind::internal, "handover slot outside coverage");
                        result.series[pos].handover_calls[ho_off->second] += 1;
                    }
                    if (keep_call_log) result.calls.push_back(std::move(full));
                }
            }
        }
    }
    for (CellSeries& cs : result.series)
        for (std::size_t k = 0; k < cs.total_calls.size(); ++k)
            cs.total_calls[k] = cs.new_calls[k] + cs.handover_calls[k];
    return result;
}

std::string cell_csv_text(const CellSeries& series) {
    std::string out = "slot_index,new_calls,handover_calls,total_calls\n";
    char buf[96];
    for (std::size_t i = 0; i < series.slot_index.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%lld,%lld,%lld,%lld\n",
                      static_cast<long long>(series.slot_index[i]),
                      static_cast<long long>(series.new_calls[i]),
                      static_cast<long long>(series.handover_calls[i]),
                      static_cast<long long>(series.total_calls[i]));
        out += buf;
    }
    return out;
}

void write_cell_csv(const CellSeries& series, const std::string& path) {
    write_text_file(path, cell_csv_text(series));
}

CellSeries parse_cell_csv(const std::string& path, const std::string& bs_id) {
    const std::string text = read_text_file(path);
    CellSeries cs;
    cs.bs_id = bs_id;
    std::size_t pos = 0, line_no = 0;
    bool saw_header = false;
    while (pos < text.size()) {
        std::size_t nl = text.find('\n', pos);
        if (nl == std::string::npos) nl = text.size();
        const std::string line = text.substr(pos, nl - pos);
        pos = nl + 1;
        ++line_no;
        if (trim(line).empty()) continue;
        if (!saw_header) {
            if (trim(line) != "slot_index,new_calls,handover_calls,total_calls")
                fail(ErrKind::validation,
                     path + ":1: expected header 'slot_index,new_calls,handover_calls,total_calls'");
            saw_header = true;
            continue;
        }
        const std::vector<std::string> cells = split_csv_line(line);
        if (cells.size() != 4)
            fail(ErrKind::validation,
                 path + ":" + std::to_string(line_no) + ": expected 4 columns");
        std::int64_t v[4];
        for (int i = 0; i < 4; ++i) {
            if (!parse_int64(cells[static_cast<std::size_t>(i)], &v[i]) || v[i] < 0)
                fail(ErrKind::validation, path + ":" + std::to_string(line_no) +
                                              ": bad count '" +
                                              cells[static_cast<std::size_t>(i)] + "'");
        }
        if (!cs.slot_index.empty() && v[0] <= cs.slot_index.back())
            fail(ErrKind::validation, path + ":" + std::to_string(line_no) +
                                          ": slot_index not strictly increasing");
        if (v[3] != v[1] + v[2])
            fail(ErrKind::validation, path + ":" + std::to_string(line_no) +
                                          ": total_calls != new_calls + handover_calls");
        cs.slot_index.push_back(v[0]);
        cs.new_calls.push_back(v[1]);
        cs.handover_calls.push_back(v[2]);
        cs.total_calls.push_back(v[3]);
    }
    if (!saw_header) fail(ErrKind::validation, path + ": empty file");
    return cs;
}

std::string call_log_jsonl(const std::vector<CallRecord>& calls) {
    std::string out;
    out.reserve(calls.size() * 160);
    char buf[160];
    for (const CallRecord& c : calls) {
        std::snprintf(buf, sizeof(buf), "{\"call_id\":%lld,\"vehicle_id\":%lld,\"start_time\":%s,",
                      static_cast<long long>(c.call_id), static_cast<long long>(c.vehicle_id),
                      format_double(c.start_time).c_str());
        out += buf;
        out += "\"duration_min\":" + format_double(c.total_duration_min) + ",\"segments\":[";
        for (std::size_t i = 0; i < c.segments.size(); ++i) {
            const CallSegment& s = c.segments[i];
            if (i > 0) out += ",";
            std::snprintf(buf, sizeof(buf), "{\"cell\":%d,\"enter\":%s,\"end\":%s,\"kind\":\"%s\"}",
                          s.cell_position, format_double(s.enter_time).c_str(),
                          format_double(s.end_time).c_str(),
                          s.kind == SegKind::new_call ? "new" : "handover");
            out += buf;
        }
        out += "]}\n";
    }
    return out;
}

}  // namespace roadcell
