#pragma once

#include <cstdint>
#include <string>

namespace roadcell {

// Series model: 288 five-minute slots per day, weekdays only. Slot indices
// run Mon..Fri consecutively; weekends do not exist in the index space.
inline constexpr int kSlotsPerDay = 288;
inline constexpr int kWeekdaysPerWeek = 5;
inline constexpr double kSlotMinutes = 5.0;

struct CivilDate {
    int year = 1970;
    int month = 1;  // 1..12
    int day = 1;    // 1..31
};

// Days since 1970-01-01 (negative before). Howard Hinnant's algorithm.
std::int64_t days_from_civil(const CivilDate& d);
CivilDate civil_from_days(std::int64_t z);

// 0 = Monday .. 6 = Sunday
int weekday_mon0(std::int64_t days);

struct SlotStamp {
    int week = 0;     // 0-based week of the series
    int weekday = 0;  // 0 = Mon .. 4 = Fri
    int tod = 0;      // slot within day, 0..287
};

// Maps weekday-only slot indices to civil dates and back. Anchored at a
// Monday; slot 0 is that Monday 00:00.
class Calendar {
public:
    Calendar() : epoch_days_(days_from_civil({2022, 3, 28})) {}
    explicit Calendar(std::int64_t epoch_monday_days);

    static Calendar from_monday(const CivilDate& monday);

    std::int64_t epoch_days() const { return epoch_days_; }

    SlotStamp stamp(std::int64_t slot_index) const;
    CivilDate date_of_day(std::int64_t day_index) const;
    CivilDate date_of_slot(std::int64_t slot_index) const;
    std::string timestamp_of_slot(std::int64_t slot_index) const;  // ISO-8601, seconds = 00
    std::string date_string_of_day(std::int64_t day_index) const;  // YYYY-MM-DD

    // Weekday timestamps at 5-minute boundaries map to a slot; weekend
    // timestamps return false. Timestamps before the epoch are an error the
    // caller reports.
    bool slot_of(const CivilDate& date, int hour, int minute, std::int64_t* out) const;

    bool operator==(const Calendar& other) const { return epoch_days_ == other.epoch_days_; }

private:
    std::int64_t epoch_days_;
};

}  // namespace roadcell
