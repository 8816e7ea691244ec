#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace adoptkit {

// Dates are civil days since 1970-01-01, times are minutes since midnight.
using Date = std::int32_t;
using MinuteOfDay = std::int32_t;

constexpr Date kDateNone = INT32_MIN;

// Days-from-civil / civil-from-days after Howard Hinnant's public-domain
// chrono algorithms; exact over the full int range we care about.
constexpr Date days_from_civil(int y, unsigned m, unsigned d) noexcept {
    y -= m <= 2;
    const int era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<int>(doe) - 719468;
}

struct CivilDate {
    int year;
    unsigned month;
    unsigned day;
};

constexpr CivilDate civil_from_days(Date z) noexcept {
    z += 719468;
    const int era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const int y = static_cast<int>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    const unsigned d = doy - (153 * mp + 2) / 5 + 1;
    const unsigned m = mp + (mp < 10 ? 3 : -9);
    return {y + (m <= 2), m, d};
}

// "YYYY-MM-DD" -> days; rejects bad shapes and impossible calendar dates.
std::optional<Date> parse_date(std::string_view s);

// "HH:MM" -> minutes since midnight in [0, 1440).
std::optional<MinuteOfDay> parse_time(std::string_view s);

std::string format_date(Date d);
std::string format_time(MinuteOfDay m);

} // namespace adoptkit
