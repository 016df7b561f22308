#include "irradcast/time.hpp"

#include <charconv>
#include <chrono>
#include <cstdio>

#include "irradcast/error.hpp"

namespace irradcast {

namespace {

using namespace std::chrono;

constexpr std::int64_t kMinutesPerDay = 24 * 60;

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
    std::int64_t q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}

int parse_int(std::string_view text, std::size_t pos, std::size_t len) {
    if (pos + len > text.size()) throw DateError("truncated timestamp '" + std::string(text) + "'");
    int v = 0;
    auto first = text.data() + pos;
    auto [ptr, ec] = std::from_chars(first, first + len, v);
    if (ec != std::errc{} || ptr != first + len)
        throw DateError("malformed timestamp '" + std::string(text) + "'");
    return v;
}

}  // namespace

Timestamp make_timestamp(int year, int month, int day, int hour, int minute) {
    year_month_day ymd{std::chrono::year{year}, std::chrono::month{static_cast<unsigned>(month)},
                       std::chrono::day{static_cast<unsigned>(day)}};
    if (month < 1 || month > 12 || day < 1 || !ymd.ok())
        throw DateError("invalid calendar date " + std::to_string(year) + "-" + std::to_string(month) +
                        "-" + std::to_string(day));
    if (hour < 0 || hour > 23 || minute < 0 || minute > 59)
        throw DateError("invalid time of day " + std::to_string(hour) + ":" + std::to_string(minute));
    const auto days = sys_days{ymd}.time_since_epoch().count();
    return Timestamp{days * kMinutesPerDay + hour * 60 + minute};
}

CivilTime to_civil(Timestamp t) {
    const std::int64_t days = floor_div(t.minutes, kMinutesPerDay);
    const std::int64_t rem = t.minutes - days * kMinutesPerDay;
    const year_month_day ymd{sys_days{std::chrono::days{days}}};
    return CivilTime{static_cast<int>(ymd.year()), static_cast<int>(static_cast<unsigned>(ymd.month())),
                     static_cast<int>(static_cast<unsigned>(ymd.day())), static_cast<int>(rem / 60),
                     static_cast<int>(rem % 60)};
}

int year_of(Timestamp t) { return to_civil(t).year; }

int day_of_year(Timestamp t) {
    const CivilTime c = to_civil(t);
    const year_month_day jan1{std::chrono::year{c.year}, January, std::chrono::day{1}};
    const std::int64_t days = floor_div(t.minutes, kMinutesPerDay);
    return static_cast<int>(days - sys_days{jan1}.time_since_epoch().count()) + 1;
}

double utc_hour(Timestamp t) {
    const std::int64_t rem = t.minutes - floor_div(t.minutes, kMinutesPerDay) * kMinutesPerDay;
    return static_cast<double>(rem) / 60.0;
}

Timestamp ceil_hour(Timestamp t) { return Timestamp{-floor_div(-t.minutes, 60) * 60}; }

std::string to_iso8601(Timestamp t) {
    const CivilTime c = to_civil(t);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02dZ", c.year, c.month, c.day, c.hour, c.minute);
    return buf;
}

Timestamp parse_iso8601(std::string_view text) {
    // YYYY-MM-DD[THH:MM[:SS]][Z]
    if (text.size() < 10 || text[4] != '-' || text[7] != '-')
        throw DateError("malformed timestamp '" + std::string(text) + "'");
    const int y = parse_int(text, 0, 4);
    const int mo = parse_int(text, 5, 2);
    const int d = parse_int(text, 8, 2);
    int h = 0, mi = 0;
    std::size_t pos = 10;
    if (pos < text.size() && (text[pos] == 'T' || text[pos] == ' ')) {
        h = parse_int(text, pos + 1, 2);
        if (pos + 3 >= text.size() || text[pos + 3] != ':')
            throw DateError("malformed timestamp '" + std::string(text) + "'");
        mi = parse_int(text, pos + 4, 2);
        pos += 6;
        if (pos < text.size() && text[pos] == ':') {
            if (parse_int(text, pos + 1, 2) != 0)
                throw DateError("sub-minute timestamp '" + std::string(text) + "'");
            pos += 3;
        }
    }
    if (pos < text.size() && text[pos] == 'Z') ++pos;
    if (pos != text.size()) throw DateError("trailing characters in timestamp '" + std::string(text) + "'");
    return make_timestamp(y, mo, d, h, mi);
}

}  // namespace irradcast
