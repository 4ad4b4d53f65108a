#include "core/road_data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "json.hpp"

#include "core/errors.hpp"
#include "core/rng.hpp"
#include "core/textio.hpp"

namespace roadcell {

namespace {

using ordered_json = nlohmann::ordered_json;

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::string cur;
    for (char c : text) {
        if (c == '\n') {
            lines.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) lines.push_back(cur);
    return lines;
}

[[noreturn]] void fail_at(const std::string& path, std::size_t line_no, const std::string& msg) {
    fail(ErrKind::validation, path + ":" + std::to_string(line_no) + ": " + msg);
}

}  // namespace

RoadSeries parse_road_csv(const std::string& path, const std::string& detector_id) {
    return parse_road_csv(path, detector_id, CivilDate{0, 0, 0});
}

RoadSeries parse_road_csv(const std::string& path, const std::string& detector_id,
                          const CivilDate& epoch) {
    const std::string text = read_text_file(path);
    const std::vector<std::string> lines = split_lines(text);
    if (lines.empty()) fail(ErrKind::validation, path + ": empty file");

    const std::vector<std::string> header = split_csv_line(lines[0]);
    if (header.size() != 3 || header[0] != "timestamp" || header[1] != "flow" ||
        header[2] != "speed")
        fail_at(path, 1, "expected header 'timestamp,flow,speed'");

    struct Row {
        std::int64_t days;
        int hour;
        int minute;
        std::int64_t flow;
        double speed;
        std::size_t line_no;
        std::string ts;
    };
    std::vector<Row> rows;
    rows.reserve(lines.size());

    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (trim(lines[i]).empty()) continue;
        const std::vector<std::string> cells = split_csv_line(lines[i]);
        const std::size_t ln = i + 1;
        if (cells.size() != 3) fail_at(path, ln, "expected 3 columns, got " +
                                                    std::to_string(cells.size()));
        int y, mo, d, h, mi;
        if (!parse_iso_timestamp(cells[0], &y, &mo, &d, &h, &mi))
            fail_at(path, ln, "bad timestamp '" + cells[0] + "'");
        const CivilDate date{y, mo, d};
        const std::int64_t days = days_from_civil(date);
        const CivilDate back = civil_from_days(days);
        if (back.year != y || back.month != mo || back.day != d)
            fail_at(path, ln, "invalid calendar date '" + cells[0] + "'");
        if (h < 0 || h > 23 || mi < 0 || mi > 59)
            fail_at(path, ln, "bad time of day '" + cells[0] + "'");
        if (mi % 5 != 0) fail_at(path, ln, "timestamp not on a 5-minute boundary: '" +
                                               cells[0] + "'");
        std::int64_t flow;
        if (!parse_int64(cells[1], &flow)) fail_at(path, ln, "bad flow '" + cells[1] + "'");
        if (flow < 0) fail_at(path, ln, "negative flow " + cells[1]);
        double speed;
        if (!parse_double(cells[2], &speed)) fail_at(path, ln, "bad speed '" + cells[2] + "'");
        if (!(speed >= 0.0)) fail_at(path, ln, "negative speed " + cells[2]);
        if (weekday_mon0(days) >= kWeekdaysPerWeek) continue;  // weekday-only pipeline
        rows.push_back({days, h, mi, flow, speed, ln, cells[0]});
    }
    if (rows.empty()) fail(ErrKind::validation, path + ": no weekday rows");

    std::int64_t epoch_days;
    if (epoch.year == 0) {
        std::int64_t min_days = rows[0].days;
        for (const Row& r : rows) min_days = std::min(min_days, r.days);
        epoch_days = min_days - weekday_mon0(min_days);
    } else {
        epoch_days = days_from_civil(epoch);
        if (weekday_mon0(epoch_days) != 0)
            fail(ErrKind::validation, path + ": requested series epoch is not a Monday");
    }

    RoadSeries series;
    series.detector_id = detector_id;
    series.calendar = Calendar(epoch_days);
    series.slots.reserve(rows.size());

    struct Indexed {
        std::int64_t slot;
        const Row* row;
    };
    std::vector<Indexed> indexed;
    indexed.reserve(rows.size());
    for (const Row& r : rows) {
        std::int64_t slot;
        if (!series.calendar.slot_of(civil_from_days(r.days), r.hour, r.minute, &slot))
            fail_at(path, r.line_no, "weekend timestamp '" + r.ts + "'");
        if (slot < 0)
            fail_at(path, r.line_no, "timestamp '" + r.ts + "' precedes the series epoch");
        indexed.push_back({slot, &r});
    }
    std::sort(indexed.begin(), indexed.end(),
              [](const Indexed& a, const Indexed& b) { return a.slot < b.slot; });
    for (std::size_t i = 1; i < indexed.size(); ++i) {
        if (indexed[i].slot == indexed[i - 1].slot)
            fail_at(path, indexed[i].row->line_no,
                    "duplicate timestamp '" + indexed[i].row->ts + "'");
    }
    for (const Indexed& ix : indexed)
        series.slots.push_back({ix.slot, ix.row->flow, ix.row->speed});
    return series;
}

std::string road_csv_text(const RoadSeries& series) {
    std::string out = "timestamp,flow,speed\n";
    char buf[96];
    for (const RoadSlot& s : series.slots) {
        const std::string ts = series.calendar.timestamp_of_slot(s.slot_index);
        std::snprintf(buf, sizeof(buf), "%s,%lld,%s\n", ts.c_str(),
                      static_cast<long long>(s.flow), format_double(s.speed).c_str());
        out += buf;
    }
    return out;
}

void write_road_csv(const RoadSeries& series, const std::string& path) {
    write_text_file(path, road_csv_text(series));
}

RoadSeries rebase_epoch(const RoadSeries& series, const CivilDate& new_epoch) {
    const std::int64_t new_days = days_from_civil(new_epoch);
    if (weekday_mon0(new_days) != 0) fail(ErrKind::internal, "rebase target is not a Monday");
    const std::int64_t diff = series.calendar.epoch_days() - new_days;
    if (diff < 0 || diff % 7 != 0)
        fail(ErrKind::internal, "rebase target must be an earlier Monday");
    const std::int64_t slot_shift = (diff / 7) * kWeekdaysPerWeek * kSlotsPerDay;
    RoadSeries out;
    out.detector_id = series.detector_id;
    out.calendar = Calendar(new_days);
    out.slots = series.slots;
    for (RoadSlot& s : out.slots) s.slot_index += slot_shift;
    return out;
}

void align_epochs(std::vector<RoadSeries>& series_list) {
    if (series_list.empty()) return;
    std::int64_t min_days = series_list[0].calendar.epoch_days();
    for (const RoadSeries& s : series_list)
        min_days = std::min(min_days, s.calendar.epoch_days());
    const CivilDate target = civil_from_days(min_days);
    for (RoadSeries& s : series_list) {
        if (s.calendar.epoch_days() != min_days) s = rebase_epoch(s, target);
    }
}

std::pair<RoadSeries, ValidationReport> validate_and_fill(const RoadSeries& series,
                                                          int max_gap_slots) {
    if (series.slots.empty()) fail(ErrKind::validation, "empty road series");
    if (max_gap_slots < 0) fail(ErrKind::validation, "max gap must be non-negative");

    // Group present slots by weekday-only day index.
    std::map<std::int64_t, std::vector<const RoadSlot*>> by_day;
    for (const RoadSlot& s : series.slots) by_day[s.slot_index / kSlotsPerDay].push_back(&s);

    RoadSeries out;
    out.detector_id = series.detector_id;
    out.calendar = series.calendar;
    ValidationReport report;

    const std::int64_t first_day = by_day.begin()->first;
    const std::int64_t last_day = by_day.rbegin()->first;
    for (std::int64_t day = first_day; day <= last_day; ++day) {
        auto it = by_day.find(day);
        if (it == by_day.end()) {
            report.excluded_days.push_back({day, kSlotsPerDay});
            continue;
        }
        const std::vector<const RoadSlot*>& present = it->second;
        std::vector<const RoadSlot*> at_tod(kSlotsPerDay, nullptr);
        for (const RoadSlot* s : present) at_tod[s->slot_index % kSlotsPerDay] = s;

        // Find the longest missing run to decide fill vs exclude.
        int longest = 0, run = 0, missing = 0;
        for (int tod = 0; tod < kSlotsPerDay; ++tod) {
            if (at_tod[tod] == nullptr) {
                ++run;
                ++missing;
                longest = std::max(longest, run);
            } else {
                run = 0;
            }
        }
        if (longest > max_gap_slots) {
            report.excluded_days.push_back({day, missing});
            continue;
        }

        const std::int64_t day_base = day * kSlotsPerDay;
        for (int tod = 0; tod < kSlotsPerDay; ++tod) {
            if (at_tod[tod] != nullptr) {
                out.slots.push_back(*at_tod[tod]);
                continue;
            }
            int left = tod - 1;
            while (left >= 0 && at_tod[left] == nullptr) --left;
            int right = tod + 1;
            while (right < kSlotsPerDay && at_tod[right] == nullptr) ++right;
            RoadSlot filled;
            filled.slot_index = day_base + tod;
            if (left >= 0 && right < kSlotsPerDay) {
                const double frac = static_cast<double>(tod - left) / (right - left);
                const RoadSlot* a = at_tod[left];
                const RoadSlot* b = at_tod[right];
                filled.flow = std::llround(static_cast<double>(a->flow) +
                                           frac * static_cast<double>(b->flow - a->flow));
                filled.speed = a->speed + frac * (b->speed - a->speed);
            } else if (left >= 0) {
                filled.flow = at_tod[left]->flow;
                filled.speed = at_tod[left]->speed;
            } else {
                filled.flow = at_tod[right]->flow;
                filled.speed = at_tod[right]->speed;
            }
            out.slots.push_back(filled);
            report.filled.push_back({filled.slot_index, filled.flow, filled.speed});
        }
    }
    return {std::move(out), std::move(report)};
}

std::string validation_report_json(const ValidationReport& report, const Calendar& calendar) {
    ordered_json j;
    j["filled"] = ordered_json::array();
    for (const FilledSlot& f : report.filled) {
        ordered_json e;
        e["slot_index"] = f.slot_index;
        e["timestamp"] = calendar.timestamp_of_slot(f.slot_index);
        e["flow"] = f.flow;
        e["speed"] = f.speed;
        j["filled"].push_back(e);
    }
    j["excluded_days"] = ordered_json::array();
    for (const ExcludedDay& d : report.excluded_days) {
        ordered_json e;
        e["day_index"] = d.day_index;
        e["date"] = calendar.date_string_of_day(d.day_index);
        e["missing_slots"] = d.missing_slots;
        j["excluded_days"].push_back(e);
    }
    return j.dump(2) + "\n";
}

RoadSeries lag_align(const RoadSeries& series) {
    if (series.slots.size() < 2) fail(ErrKind::validation, "lag alignment needs at least 2 slots");
    RoadSeries out;
    out.detector_id = series.detector_id;
    out.calendar = series.calendar;
    out.slots.reserve(series.slots.size() - 1);
    for (std::size_t i = 1; i < series.slots.size(); ++i) {
        const RoadSlot& prev = series.slots[i - 1];
        const RoadSlot& cur = series.slots[i];
        if (cur.slot_index != prev.slot_index + 1) continue;  // predecessor missing
        out.slots.push_back({cur.slot_index, prev.flow, prev.speed});
    }
    return out;
}

RoadSeries add_flow_noise(const RoadSeries& series, const NoiseConfig& cfg) {
    if (cfg.sigma_fraction < 0.0) fail(ErrKind::validation, "sigma_fraction must be >= 0");
    RoadSeries out = series;
    Rng rng(stream_seed(cfg.seed, fnv1a64(series.detector_id), Stream::flow_noise));
    for (RoadSlot& s : out.slots) {
        const double eps = rng.normal() * cfg.sigma_fraction * static_cast<double>(s.flow);
        const double noisy = std::round(static_cast<double>(s.flow) + eps);
        s.flow = noisy < 0.0 ? 0 : static_cast<std::int64_t>(noisy);
    }
    return out;
}

Corridor build_corridor(const std::vector<CellSite>& sites_in_travel_order) {
    if (sites_in_travel_order.empty()) fail(ErrKind::validation, "corridor has no sites");
    std::set<std::string> detectors, bs_ids;
    Corridor c;
    c.sites = sites_in_travel_order;
    for (std::size_t i = 0; i < c.sites.size(); ++i) {
        CellSite& s = c.sites[i];
        s.position = static_cast<int>(i);
        if (s.bs_id.empty()) fail(ErrKind::validation, "corridor site with empty bs_id");
        if (s.detector_id.empty())
            fail(ErrKind::validation, "corridor site with empty detector_id");
        if (!(s.range_miles > 0.0))
            fail(ErrKind::validation, "non-positive range for bs " + s.bs_id);
        if (!detectors.insert(s.detector_id).second)
            fail(ErrKind::validation, "duplicate detector " + s.detector_id);
        if (!bs_ids.insert(s.bs_id).second)
            fail(ErrKind::validation, "duplicate bs_id " + s.bs_id);
    }
    return c;
}

Corridor parse_corridor_csv(const std::string& path) {
    const std::string text = read_text_file(path);
    const std::vector<std::string> lines = split_lines(text);
    if (lines.empty()) fail(ErrKind::validation, path + ": empty file");
    const std::vector<std::string> header = split_csv_line(lines[0]);
    if (header.size() != 3 || header[0] != "bs_id" || header[1] != "detector_id" ||
        header[2] != "range_miles")
        fail(ErrKind::validation, path + ":1: expected header 'bs_id,detector_id,range_miles'");
    std::vector<CellSite> sites;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (trim(lines[i]).empty()) continue;
        const std::vector<std::string> cells = split_csv_line(lines[i]);
        if (cells.size() != 3) fail_at(path, i + 1, "expected 3 columns");
        CellSite s;
        s.bs_id = cells[0];
        s.detector_id = cells[1];
        if (!parse_double(cells[2], &s.range_miles))
            fail_at(path, i + 1, "bad range_miles '" + cells[2] + "'");
        sites.push_back(s);
    }
    if (sites.empty()) fail(ErrKind::validation, path + ": no corridor sites");
    return build_corridor(sites);
}

std::string corridor_csv_text(const Corridor& corridor) {
    std::string out = "bs_id,detector_id,range_miles\n";
    for (const CellSite& s : corridor.sites)
        out += s.bs_id + "," + s.detector_id + "," + format_double(s.range_miles) + "\n";
    return out;
}

void write_corridor_csv(const Corridor& corridor, const std::string& path) {
    write_text_file(path, corridor_csv_text(corridor));
}

SynthProfile default_profile(int site_position) {
    const int i = site_position < 0 ? 0 : site_position;
    SynthProfile p;
    p.base_flow = 30.0 + 6.0 * (i % 5);
    p.am_peak_flow = 100.0 + 20.0 * ((i * 3) % 4);
    p.pm_peak_flow = 120.0 + 15.0 * ((i * 5) % 5);
    p.am_peak_hour = 7.5 + 0.25 * (i % 3);
    p.pm_peak_hour = 16.75 + 0.25 * (i % 4);
    p.peak_width_hours = 1.3 + 0.1 * (i % 3);
    p.free_speed_mph = 62.0 + 2.0 * (i % 4);
    p.congestion_speed_mph = 22.0 + 2.0 * (i % 3);
    p.congestion_flow = 140.0 + 15.0 * (i % 4);
    return p;
}

namespace {

void check_profile(const SynthProfile& p) {
    if (p.base_flow < 0 || p.am_peak_flow < 0 || p.pm_peak_flow < 0)
        fail(ErrKind::validation, "profile flow levels must be >= 0");
    if (!(p.peak_width_hours > 0)) fail(ErrKind::validation, "peak_width_hours must be > 0");
    if (!(p.day_scale_min > 0) || p.day_scale_max < p.day_scale_min)
        fail(ErrKind::validation, "day scale range must satisfy 0 < min <= max");
    if (p.peak_jitter_hours < 0) fail(ErrKind::validation, "peak_jitter_hours must be >= 0");
    if (!(p.free_speed_mph > 0) || !(p.congestion_speed_mph > 0))
        fail(ErrKind::validation, "speeds must be > 0");
    if (p.congestion_flow < 0) fail(ErrKind::validation, "congestion_flow must be >= 0");
    if (p.speed_jitter_mph < 0) fail(ErrKind::validation, "speed_jitter_mph must be >= 0");
}

}  // namespace

SynthProfile synth_profile_from_json(const std::string& json_text) {
    ordered_json j;
    try {
        j = ordered_json::parse(json_text);
    } catch (const std::exception& e) {
        fail(ErrKind::validation, std::string("bad profile JSON: ") + e.what());
    }
    if (!j.is_object()) fail(ErrKind::validation, "profile JSON must be an object");
    SynthProfile p;
    auto take = [&](const char* key, double* out) {
        if (j.contains(key)) {
            if (!j[key].is_number()) fail(ErrKind::validation,
                                          std::string("profile field not a number: ") + key);
            *out = j[key].get<double>();
            j.erase(key);
        }
    };
    take("base_flow", &p.base_flow);
    take("am_peak_flow", &p.am_peak_flow);
    take("pm_peak_flow", &p.pm_peak_flow);
    take("am_peak_hour", &p.am_peak_hour);
    take("pm_peak_hour", &p.pm_peak_hour);
    take("peak_width_hours", &p.peak_width_hours);
    take("day_scale_min", &p.day_scale_min);
    take("day_scale_max", &p.day_scale_max);
    take("peak_jitter_hours", &p.peak_jitter_hours);
    take("free_speed_mph", &p.free_speed_mph);
    take("congestion_speed_mph", &p.congestion_speed_mph);
    take("congestion_flow", &p.congestion_flow);
    take("speed_jitter_mph", &p.speed_jitter_mph);
    if (!j.empty())
        fail(ErrKind::validation, "unknown profile field: " + j.begin().key());
    check_profile(p);
    return p;
}

std::string synth_profile_json(const SynthProfile& p) {
    ordered_json j;
    j["base_flow"] = p.base_flow;
    j["am_peak_flow"] = p.am_peak_flow;
    j["pm_peak_flow"] = p.pm_peak_flow;
    j["am_peak_hour"] = p.am_peak_hour;
    j["pm_peak_hour"] = p.pm_peak_hour;
    j["peak_width_hours"] = p.peak_width_hours;
    j["day_scale_min"] = p.day_scale_min;
    j["day_scale_max"] = p.day_scale_max;
    j["peak_jitter_hours"] = p.peak_jitter_hours;
    j["free_speed_mph"] = p.free_speed_mph;
    j["congestion_speed_mph"] = p.congestion_speed_mph;
    j["congestion_flow"] = p.congestion_flow;
    j["speed_jitter_mph"] = p.speed_jitter_mph;
    return j.dump(2) + "\n";
}

double profile_mean_flow(const SynthProfile& p, double hour_of_day, double am_shift,
                         double pm_shift) {
    const double w2 = 2.0 * p.peak_width_hours * p.peak_width_hours;
    const double da = hour_of_day - (p.am_peak_hour + am_shift);
    const double dp = hour_of_day - (p.pm_peak_hour + pm_shift);
    return p.base_flow + p.am_peak_flow * std::exp(-da * da / w2) +
           p.pm_peak_flow * std::exp(-dp * dp / w2);
}

double profile_mean_speed(const SynthProfile& p, double scaled_mean_flow) {
    if (!(p.congestion_flow > 0.0)) return p.free_speed_mph;
    const double r = scaled_mean_flow / p.congestion_flow;
    const double x = r * r * r * r;  // quartic dip: gentle off-peak, sharp at the knee
    return p.congestion_speed_mph +
           (p.free_speed_mph - p.congestion_speed_mph) / (1.0 + x);
}

RoadSeries synth_road(const SynthProfile& profile, int weeks, std::uint64_t seed,
                      const std::string& detector_id, const CivilDate& epoch) {
    check_profile(profile);
    if (weeks < 1) fail(ErrKind::validation, "weeks must be >= 1");
    const std::uint64_t site_h = fnv1a64(detector_id);
    RoadSeries series;
    series.detector_id = detector_id;
    series.calendar = Calendar::from_monday(epoch);
    const int days = weeks * kWeekdaysPerWeek;
    series.slots.reserve(static_cast<std::size_t>(days) * kSlotsPerDay);
    for (int day = 0; day < days; ++day) {
        Rng day_rng(mix_seed(stream_seed(seed, site_h, Stream::synth_day),
                             static_cast<std::uint64_t>(day)));
        const double scale = day_rng.uniform(profile.day_scale_min, profile.day_scale_max);
        const double am_shift =
            day_rng.uniform(-profile.peak_jitter_hours, profile.peak_jitter_hours);
        const double pm_shift =
            day_rng.uniform(-profile.peak_jitter_hours, profile.peak_jitter_hours);
        Rng flow_rng(mix_seed(stream_seed(seed, site_h, Stream::synth_flow),
                              static_cast<std::uint64_t>(day)));
        Rng speed_rng(mix_seed(stream_seed(seed, site_h, Stream::synth_speed),
                               static_cast<std::uint64_t>(day)));
        for (int tod = 0; tod < kSlotsPerDay; ++tod) {
            const double hour = (tod + 0.5) * kSlotMinutes / 60.0;  // slot center
            const double mean = scale * profile_mean_flow(profile, hour, am_shift, pm_shift);
            RoadSlot s;
            s.slot_index = static_cast<std::int64_t>(day) * kSlotsPerDay + tod;
            s.flow = flow_rng.poisson(mean);
            double speed =
                speed_rng.normal(profile_mean_speed(profile, mean), profile.speed_jitter_mph);
            speed = std::round(speed * 10.0) / 10.0;  // detector exports carry 0.1 mph
            s.speed = speed < 5.0 ? 5.0 : speed;
            series.slots.push_back(s);
        }
    }
    return series;
}

}  // namespace roadcell
