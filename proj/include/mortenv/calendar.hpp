#pragma once

// ISO 8601 week-date arithmetic on the proleptic Gregorian calendar.
// Weeks run Monday (1) to Sunday (7); week 1 of an ISO year is the week
// containing January 4, equivalently the week whose Thursday falls in
// that calendar year.

#include <compare>
#include <cstdint>
#include <cstdio>
#include <string>

#include "mortenv/errors.hpp"

namespace mortenv {

struct Date {
    int year = 0;
    int month = 0;  // 1..12
    int day = 0;    // 1..31

    auto operator<=>(const Date&) const = default;
};

constexpr bool is_leap_year(int y) {
    return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
}

constexpr int days_in_month(int y, int m) {
    constexpr int lengths[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    if (m == 2 && is_leap_year(y)) return 29;
    return lengths[m - 1];
}

constexpr bool valid_date(const Date& d) {
    return d.month >= 1 && d.month <= 12 && d.day >= 1 &&
           d.day <= days_in_month(d.year, d.month);
}

// Days since 1970-01-01 (Howard Hinnant's civil-days algorithm).
constexpr std::int64_t serial_day(const Date& d) {
    const int y = d.year - (d.month <= 2);
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy =
        (153u * static_cast<unsigned>(d.month + (d.month > 2 ? -3 : 9)) + 2u) / 5u +
        static_cast<unsigned>(d.day) - 1u;
    const unsigned doe = yoe * 365u + yoe / 4u - yoe / 100u + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

constexpr Date date_from_serial(std::int64_t z) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    const unsigned day = doy - (153 * mp + 2) / 5 + 1;
    const unsigned month = mp + (mp < 10 ? 3 : -9);
    return Date{static_cast<int>(y + (month <= 2)), static_cast<int>(month),
                static_cast<int>(day)};
}

// ISO weekday, 1 = Monday .. 7 = Sunday. Serial day 0 (1970-01-01) is a Thursday.
constexpr int iso_weekday_of_serial(std::int64_t serial) {
    const std::int64_t r = (serial + 3) % 7;
    return static_cast<int>(r >= 0 ? r : r + 7) + 1;
}

constexpr int day_of_year(const Date& d) {
    return static_cast<int>(serial_day(d) - serial_day(Date{d.year, 1, 1})) + 1;
}

struct IsoWeek {
    int year = 0;
    int week = 0;  // 1..52 or 1..53

    auto operator<=>(const IsoWeek&) const = default;
};

struct IsoDate {
    int year = 0;
    int week = 0;
    int weekday = 0;  // 1 = Monday .. 7 = Sunday
};

// 53 iff January 1 or December 31 of the year is a Thursday.
constexpr int weeks_in_iso_year(int year) {
    const std::int64_t jan1 = serial_day(Date{year, 1, 1});
    const std::int64_t dec31 = serial_day(Date{year, 12, 31});
    return (iso_weekday_of_serial(jan1) == 4 || iso_weekday_of_serial(dec31) == 4)
               ? 53
               : 52;
}

inline IsoDate iso_week_of(const Date& d) {
    if (!valid_date(d))
        throw ValidationError("invalid date " + std::to_string(d.year) + "-" +
                              std::to_string(d.month) + "-" + std::to_string(d.day));
    const int wd = iso_weekday_of_serial(serial_day(d));
    const int week = (day_of_year(d) - wd + 10) / 7;
    if (week < 1) return IsoDate{d.year - 1, weeks_in_iso_year(d.year - 1), wd};
    if (week > weeks_in_iso_year(d.year)) return IsoDate{d.year + 1, 1, wd};
    return IsoDate{d.year, week, wd};
}

// Serial day of the Monday opening a given ISO week. January 4 is in week 1.
constexpr std::int64_t monday_of(const IsoWeek& w) {
    const std::int64_t jan4 = serial_day(Date{w.year, 1, 4});
    const std::int64_t week1_monday = jan4 - (iso_weekday_of_serial(jan4) - 1);
    return week1_monday + static_cast<std::int64_t>(w.week - 1) * 7;
}

constexpr Date date_of(const IsoWeek& w, int weekday) {
    return date_from_serial(monday_of(w) + weekday - 1);
}

constexpr IsoWeek next_week(const IsoWeek& w) {
    if (w.week < weeks_in_iso_year(w.year)) return IsoWeek{w.year, w.week + 1};
    return IsoWeek{w.year + 1, 1};
}

constexpr IsoWeek prev_week(const IsoWeek& w) {
    if (w.week > 1) return IsoWeek{w.year, w.week - 1};
    return IsoWeek{w.year - 1, weeks_in_iso_year(w.year - 1)};
}

// Strict YYYY-MM-DD.
inline Date parse_date(const std::string& s) {
    int y = 0, m = 0, d = 0;
    char tail = 0;
    if (std::sscanf(s.c_str(), "%d-%d-%d%c", &y, &m, &d, &tail) != 3 ||
        !valid_date(Date{y, m, d}))
        throw ValidationError("invalid date '" + s + "', expected YYYY-MM-DD");
    return Date{y, m, d};
}

inline std::string format_date(const Date& d) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", d.year, d.month, d.day);
    return buf;
}

}  // namespace mortenv
