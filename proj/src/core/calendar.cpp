#include "core/calendar.hpp"

#include <cstdio>

#include "core/errors.hpp"

namespace roadcell {

std::int64_t days_from_civil(const CivilDate& d) {
    int y = d.year;
    const int m = d.month;
    const int day = d.day;
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * (m > 2 ? m - 3 : m + 9) + 2) / 5 + day - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

CivilDate civil_from_days(std::int64_t z) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    const unsigned day = doy - (153 * mp + 2) / 5 + 1;
    const unsigned m = mp < 10 ? mp + 3 : mp - 9;
    return {static_cast<int>(y + (m <= 2)), static_cast<int>(m), static_cast<int>(day)};
}

int weekday_mon0(std::int64_t days) {
    // 1970-01-01 is a Thursday.
    return static_cast<int>(((days + 3) % 7 + 7) % 7);
}

Calendar::Calendar(std::int64_t epoch_monday_days) : epoch_days_(epoch_monday_days) {
    if (weekday_mon0(epoch_days_) != 0) fail(ErrKind::internal, "calendar epoch is not a Monday");
}

Calendar Calendar::from_monday(const CivilDate& monday) {
    return Calendar(days_from_civil(monday));
}

SlotStamp Calendar::stamp(std::int64_t slot_index) const {
    const std::int64_t day = slot_index / kSlotsPerDay;
    SlotStamp s;
    s.week = static_cast<int>(day / kWeekdaysPerWeek);
    s.weekday = static_cast<int>(day % kWeekdaysPerWeek);
    s.tod = static_cast<int>(slot_index % kSlotsPerDay);
    return s;
}

CivilDate Calendar::date_of_day(std::int64_t day_index) const {
    const std::int64_t week = day_index / kWeekdaysPerWeek;
    const std::int64_t wd = day_index % kWeekdaysPerWeek;
    return civil_from_days(epoch_days_ + week * 7 + wd);
}

CivilDate Calendar::date_of_slot(std::int64_t slot_index) const {
    return date_of_day(slot_index / kSlotsPerDay);
}

std::string Calendar::timestamp_of_slot(std::int64_t slot_index) const {
    const CivilDate d = date_of_slot(slot_index);
    const int tod = static_cast<int>(slot_index % kSlotsPerDay);
    const int minutes = tod * 5;
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:00", d.year, d.month, d.day,
                  minutes / 60, minutes % 60);
    return buf;
}

std::string Calendar::date_string_of_day(std::int64_t day_index) const {
    const CivilDate d = date_of_day(day_index);
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", d.year, d.month, d.day);
    return buf;
}

bool Calendar::slot_of(const CivilDate& date, int hour, int minute, std::int64_t* out) const {
    const std::int64_t days = days_from_civil(date);
    const int dow = weekday_mon0(days);
    if (dow >= kWeekdaysPerWeek) return false;  // weekend
    const std::int64_t delta = days - epoch_days_;
    std::int64_t week = delta / 7;
    if (delta % 7 < 0) week -= 1;  // floor for dates before the epoch
    const std::int64_t day_index = week * kWeekdaysPerWeek + dow;
    *out = day_index * kSlotsPerDay + (hour * 60 + minute) / 5;
    return true;
}

}  // namespace roadcell
