#include "irradcast/surfrad.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "irradcast/error.hpp"
#include "irradcast/text.hpp"

namespace irradcast::surfrad {

namespace {

struct ChannelInfo {
    std::string_view name;
    std::string_view unit;
};

constexpr std::array<ChannelInfo, kChannelCount> kChannels{{
    {"dw_solar", "W/m^2"},
    {"uw_solar", "W/m^2"},
    {"direct_n", "W/m^2"},
    {"diffuse", "W/m^2"},
    {"dw_ir", "W/m^2"},
    {"dw_casetemp", "K"},
    {"dw_dometemp", "K"},
    {"uw_ir", "W/m^2"},
    {"uw_casetemp", "K"},
    {"uw_dometemp", "K"},
    {"uvb", "mW/m^2"},
    {"par", "W/m^2"},
    {"netsolar", "W/m^2"},
    {"netir", "W/m^2"},
    {"netrad", "W/m^2"},
    {"air_temp_10m", "C"},
    {"rh", "%"},
    {"windspd", "m/s"},
    {"winddir", "deg"},
    {"pressure", "mb"},
}};

// year jday month day hour minute dt zenith, then value/qc per channel
constexpr std::size_t kLeadingFields = 8;
constexpr std::size_t kRowFields = kLeadingFields + 2 * kChannelCount;

bool iequals(std::string_view a, std::string_view b) {
    return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
               return std::tolower(static_cast<unsigned char>(x)) == std::tolower(static_cast<unsigned char>(y));
           });
}

std::optional<ObservationRecord> parse_row(std::string_view line, std::string& why) {
    const auto fields = text::split_whitespace(line);
    if (fields.size() != kRowFields) {
        why = "expected " + std::to_string(kRowFields) + " fields, found " + std::to_string(fields.size());
        return std::nullopt;
    }
    std::array<long long, 6> ints{};
    for (std::size_t i = 0; i < ints.size(); ++i) {
        auto v = text::parse_int(fields[i]);
        if (!v) {
            why = "field " + std::to_string(i + 1) + " is not an integer: '" + std::string(fields[i]) + "'";
            return std::nullopt;
        }
        ints[i] = *v;
    }
    long long year = ints[0];
    if (year >= 0 && year < 100) year += (year >= 50) ? 1900 : 2000;
    if (year < 1900 || year > 2200) {
        why = "year out of range: " + std::to_string(ints[0]);
        return std::nullopt;
    }
    for (std::size_t i = 1; i < ints.size(); ++i) {
        if (ints[i] < 0 || ints[i] > 366) {
            why = "date/time field " + std::to_string(i + 1) + " out of range";
            return std::nullopt;
        }
    }

    ObservationRecord rec;
    try {
        rec.timestamp = make_timestamp(static_cast<int>(year), static_cast<int>(ints[2]), static_cast<int>(ints[3]),
                                       static_cast<int>(ints[4]), static_cast<int>(ints[5]));
    } catch (const Error& e) {
        why = e.what();
        return std::nullopt;
    }
    if (day_of_year(rec.timestamp) != ints[1]) {
        why = "julian day " + std::to_string(ints[1]) + " disagrees with calendar date";
        return std::nullopt;
    }
    auto zenith = text::parse_double(fields[7]);
    if (!zenith || !std::isfinite(*zenith) || *zenith < 0.0 || *zenith > 180.0) {
        why = "zenith out of range: '" + std::string(fields[7]) + "'";
        return std::nullopt;
    }
    rec.zenith = *zenith;
    for (std::size_t c = 0; c < kChannelCount; ++c) {
        const auto vfield = fields[kLeadingFields + 2 * c];
        const auto qfield = fields[kLeadingFields + 2 * c + 1];
        auto v = text::parse_double(vfield);
        auto q = text::parse_int(qfield);
        if (!v || !std::isfinite(*v) || !q) {
            why = std::string(kChannels[c].name) + " value/qc pair is malformed: '" + std::string(vfield) + " " +
                  std::string(qfield) + "'";
            return std::nullopt;
        }
        rec.channels[c] = make_reading(channel_at(c), *v, static_cast<int>(*q));
    }
    return rec;
}

}  // namespace

std::string_view channel_name(Channel c) { return kChannels[index(c)].name; }
std::string_view channel_unit(Channel c) { return kChannels[index(c)].unit; }

std::optional<Channel> channel_from_name(std::string_view name) {
    for (std::size_t i = 0; i < kChannelCount; ++i)
        if (kChannels[i].name == name) return channel_at(i);
    return std::nullopt;
}

void StationMeta::validate() const {
    if (!(latitude >= -90.0 && latitude <= 90.0)) throw ConfigError("station latitude out of [-90, 90]");
    if (!(longitude >= -180.0 && longitude <= 180.0)) throw ConfigError("station longitude out of [-180, 180]");
    if (!(elevation >= -100.0) || !std::isfinite(elevation)) throw ConfigError("station elevation below -100 m");
}

bool out_of_range(Channel c, double raw) {
    if (raw <= kMissingThreshold) return false;
    switch (c) {
        case Channel::rh: return raw < 0.0 || raw > 100.0;
        case Channel::winddir: return raw < 0.0 || raw > 360.0;
        default: return false;
    }
}

ChannelReading make_reading(Channel c, double raw, int qc) {
    return ChannelReading{raw, qc, raw <= kMissingThreshold || out_of_range(c, raw)};
}

std::optional<double> ObservationRecord::value(Channel c) const {
    const ChannelReading& r = reading(c);
    if (r.missing) return std::nullopt;
    if (c == Channel::dw_solar) return std::max(0.0, r.raw);
    if (c == Channel::winddir && r.raw == 360.0) return 0.0;
    return r.raw;
}

bool ObservationRecord::clamped(Channel c) const {
    const ChannelReading& r = reading(c);
    return c == Channel::dw_solar && !r.missing && r.raw < 0.0;
}

ParsedDay parse_daily_file(std::string_view bytes) {
    const auto all = text::lines(bytes);
    if (all.empty() || std::all_of(all.begin(), all.end(), [](auto l) { return text::trim(l).empty(); }))
        throw ParseError(1, "empty file");

    ParsedDay out;
    out.station.name = std::string(text::trim(all[0]));
    if (out.station.name.empty()) throw ParseError(1, "missing station name");
    if (all.size() < 2) throw ParseError(2, "missing latitude/longitude/elevation line");

    const auto geo = text::split_whitespace(all[1]);
    if (geo.size() < 3) throw ParseError(2, "expected latitude, longitude and elevation");
    auto lat = text::parse_double(geo[0]);
    auto lon = text::parse_double(geo[1]);
    auto elev = text::parse_double(geo[2]);
    if (!lat || !lon || !elev) throw ParseError(2, "non-numeric station coordinates");
    out.station.latitude = *lat;
    out.station.longitude = *lon;
    out.station.elevation = *elev;
    try {
        out.station.validate();
    } catch (const ConfigError& e) {
        throw ParseError(2, e.what());
    }

    std::size_t row = 0;
    for (std::size_t i = 2; i < all.size(); ++i) {
        if (text::trim(all[i]).empty()) continue;
        std::string why;
        if (auto rec = parse_row(all[i], why))
            out.records.push_back(*rec);
        else
            out.row_errors.push_back(RowError{row, i + 1, std::move(why)});
        ++row;
    }
    return out;
}

ObservationSeries merge_series(std::vector<std::pair<StationMeta, std::vector<ObservationRecord>>> parts) {
    if (parts.empty()) throw EmptyInput("merge_series called with no parts");
    ObservationSeries out;
    out.station = parts.front().first;
    std::size_t total = 0;
    for (const auto& [meta, recs] : parts) {
        if (meta.name != out.station.name)
            throw StationMismatch("cannot merge '" + meta.name + "' into '" + out.station.name + "'");
        total += recs.size();
    }
    out.records.reserve(total);
    for (auto& part : parts)
        out.records.insert(out.records.end(), std::make_move_iterator(part.second.begin()),
                           std::make_move_iterator(part.second.end()));
    std::stable_sort(out.records.begin(), out.records.end(),
                     [](const ObservationRecord& a, const ObservationRecord& b) { return a.timestamp < b.timestamp; });
    auto last = std::unique(out.records.begin(), out.records.end(),
                            [](const ObservationRecord& a, const ObservationRecord& b) {
                                return a.timestamp == b.timestamp;
                            });
    out.records.erase(last, out.records.end());
    return out;
}

QcReport qc_summary(const ObservationSeries& series) {
    QcReport rep;
    rep.rows = series.records.size();
    std::size_t complete = 0;
    for (const auto& rec : series.records) {
        bool all_present = true;
        for (std::size_t c = 0; c < kChannelCount; ++c) {
            const Channel ch = channel_at(c);
            const ChannelReading& r = rec.channels[c];
            ChannelQc& q = rep.channels[c];
            if (r.missing) {
                ++q.missing;
                all_present = false;
            }
            if (rec.clamped(ch)) ++q.clamped;
            if (out_of_range(ch, r.raw)) ++q.out_of_range;
            if (r.qc != 0) ++q.qc_flagged;
        }
        if (all_present) ++complete;
    }
    if (rep.rows > 0) {
        const double n = static_cast<double>(rep.rows);
        for (auto& q : rep.channels) q.usable_fraction = static_cast<double>(rep.rows - q.missing) / n;
        rep.usable_row_fraction = static_cast<double>(complete) / n;
    }
    return rep;
}

std::string format_qc_report(const QcReport& report) {
    std::ostringstream os;
    os << "channel,missing,clamped,out_of_range,qc_flagged,usable_fraction\n";
    for (std::size_t c = 0; c < kChannelCount; ++c) {
        const auto& q = report.channels[c];
        os << channel_name(channel_at(c)) << ',' << q.missing << ',' << q.clamped << ',' << q.out_of_range << ','
           << q.qc_flagged << ',' << text::format_fixed(q.usable_fraction, 6) << '\n';
    }
    os << "rows," << report.rows << ",,,," << text::format_fixed(report.usable_row_fraction, 6) << '\n';
    return os.str();
}

std::string canonical_csv_header() {
    std::string h = "timestamp,zenith";
    for (const auto& ch : kChannels) h += "," + std::string(ch.name);
    for (const auto& ch : kChannels) h += ",qc_" + std::string(ch.name);
    for (const auto& ch : kChannels) h += ",missing_" + std::string(ch.name);
    return h;
}

std::string to_canonical_csv(const std::vector<ObservationRecord>& records) {
    std::string out = canonical_csv_header();
    out += '\n';
    for (const auto& rec : records) {
        out += to_iso8601(rec.timestamp);
        out += ',';
        out += text::format_double(rec.zenith);
        for (const auto& r : rec.channels) {
            out += ',';
            out += text::format_double(r.raw);
        }
        for (const auto& r : rec.channels) {
            out += ',';
            out += std::to_string(r.qc);
        }
        for (const auto& r : rec.channels) out += r.missing ? ",1" : ",0";
        out += '\n';
    }
    return out;
}

std::vector<ObservationRecord> from_canonical_csv(std::string_view csv) {
    const auto all = text::lines(csv);
    if (all.empty()) throw ParseError(1, "empty canonical CSV");
    if (all[0] != canonical_csv_header()) throw ParseError(1, "unexpected canonical CSV header");
    std::vector<ObservationRecord> out;
    out.reserve(all.size() - 1);
    for (std::size_t i = 1; i < all.size(); ++i) {
        const auto f = text::split(all[i], ',');
        if (f.size() != 2 + 3 * kChannelCount)
            throw ParseError(i + 1, "expected " + std::to_string(2 + 3 * kChannelCount) + " columns");
        ObservationRecord rec;
        try {
            rec.timestamp = parse_iso8601(f[0]);
        } catch (const DateError& e) {
            throw ParseError(i + 1, e.what());
        }
        auto z = text::parse_double(f[1]);
        if (!z) throw ParseError(i + 1, "bad zenith");
        rec.zenith = *z;
        for (std::size_t c = 0; c < kChannelCount; ++c) {
            auto v = text::parse_double(f[2 + c]);
            auto q = text::parse_int(f[2 + kChannelCount + c]);
            const auto m = f[2 + 2 * kChannelCount + c];
            if (!v || !q || (m != "0" && m != "1")) throw ParseError(i + 1, "bad channel column");
            rec.channels[c] = ChannelReading{*v, static_cast<int>(*q), m == "1"};
        }
        if (!out.empty() && !(out.back().timestamp < rec.timestamp))
            throw ParseError(i + 1, "timestamps not strictly increasing");
        out.push_back(rec);
    }
    return out;
}

std::string to_station_text(const StationMeta& meta) {
    return "name = " + meta.name + "\nlatitude = " + text::format_double(meta.latitude) +
           "\nlongitude = " + text::format_double(meta.longitude) +
           "\nelevation = " + text::format_double(meta.elevation) + "\n";
}

StationMeta from_station_text(std::string_view body) {
    StationMeta meta;
    bool have[4] = {false, false, false, false};
    std::size_t n = 0;
    for (auto line : text::lines(body)) {
        ++n;
        line = text::trim(line);
        if (line.empty() || line.front() == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw ParseError(n, "expected key = value");
        const auto key = text::trim(line.substr(0, eq));
        const auto val = text::trim(line.substr(eq + 1));
        if (key == "name") {
            meta.name = std::string(val);
            have[0] = true;
            continue;
        }
        auto num = text::parse_double(val);
        if (!num) throw ParseError(n, "non-numeric value for '" + std::string(key) + "'");
        if (key == "latitude") meta.latitude = *num, have[1] = true;
        else if (key == "longitude") meta.longitude = *num, have[2] = true;
        else if (key == "elevation") meta.elevation = *num, have[3] = true;
    }
    if (!(have[0] && have[1] && have[2] && have[3])) throw ParseError(n, "station text is incomplete");
    meta.validate();
    return meta;
}

const std::vector<KnownStation>& known_stations() {
    static const std::vector<KnownStation> stations{
        {"bon", "Bondville_IL", {"Bondville", 40.05, -88.37, 213.0}},
        {"tbl", "Boulder_CO", {"Boulder", 40.13, -105.24, 1689.0}},
        {"dra", "Desert_Rock_NV", {"Desert Rock", 36.62, -116.02, 1007.0}},
        {"fpk", "Fort_Peck_MT", {"Fort Peck", 48.31, -105.10, 634.0}},
        {"gwn", "Goodwin_Creek_MS", {"Goodwin Creek", 34.25, -89.87, 98.0}},
        {"psu", "Penn_State_PA", {"Penn State", 40.72, -77.93, 376.0}},
        {"sxf", "Sioux_Falls_SD", {"Sioux Falls", 43.73, -96.62, 473.0}},
    };
    return stations;
}

std::optional<KnownStation> find_station(std::string_view code_or_name) {
    for (const auto& s : known_stations())
        if (iequals(s.code, code_or_name) || iequals(s.meta.name, code_or_name)) return s;
    return std::nullopt;
}

std::string daily_file_name(std::string_view code, int year, int doy) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3s%02d%03d.dat", std::string(code).c_str(), year % 100, doy);
    return buf;
}

}  // namespace irradcast::surfrad
