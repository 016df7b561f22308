#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace irradcast {

/// UTC instant at one-minute resolution, counted from 1970-01-01T00:00Z.
struct Timestamp {
    std::int64_t minutes = 0;

    auto operator<=>(const Timestamp&) const = default;

    Timestamp plus_minutes(std::int64_t m) const { return Timestamp{minutes + m}; }
    Timestamp plus_hours(std::int64_t h) const { return Timestamp{minutes + 60 * h}; }
};

struct CivilTime {
    int year = 1970;
    int month = 1;
    int day = 1;
    int hour = 0;
    int minute = 0;
};

/// Throws DateError for impossible calendar fields.
Timestamp make_timestamp(int year, int month, int day, int hour = 0, int minute = 0);
CivilTime to_civil(Timestamp t);

int year_of(Timestamp t);
int day_of_year(Timestamp t);
/// Fractional UTC hour of day in [0, 24).
double utc_hour(Timestamp t);

/// Smallest whole hour >= t: the label of the hour window ending at or after t.
Timestamp ceil_hour(Timestamp t);

/// "YYYY-MM-DDTHH:MMZ"
std::string to_iso8601(Timestamp t);
/// Accepts "YYYY-MM-DDTHH:MM[:SS][Z]" and "YYYY-MM-DD". Throws DateError.
Timestamp parse_iso8601(std::string_view text);

}  // namespace irradcast
