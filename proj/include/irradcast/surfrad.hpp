#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "irradcast/time.hpp"

namespace irradcast::surfrad {

/// The twenty measured channels, in SURFRAD daily-file column order.
enum class Channel : std::size_t {
    dw_solar,
    uw_solar,
    direct_n,
    diffuse,
    dw_ir,
    dw_casetemp,
    dw_dometemp,
    uw_ir,
    uw_casetemp,
    uw_dometemp,
    uvb,
    par,
    netsolar,
    netir,
    netrad,
    air_temp_10m,
    rh,
    windspd,
    winddir,
    pressure,
};

inline constexpr std::size_t kChannelCount = 20;

std::string_view channel_name(Channel c);
std::string_view channel_unit(Channel c);
std::optional<Channel> channel_from_name(std::string_view name);
constexpr std::size_t index(Channel c) { return static_cast<std::size_t>(c); }
constexpr Channel channel_at(std::size_t i) { return static_cast<Channel>(i); }

/// Values at or below this are SURFRAD missing-data sentinels (-9999.9 family).
inline constexpr double kMissingThreshold = -9000.0;

struct StationMeta {
    std::string name;
    double latitude = 0.0;   // degrees north
    double longitude = 0.0;  // degrees east
    double elevation = 0.0;  // meters

    /// Throws ConfigError if a field is outside its physical range.
    void validate() const;
    bool operator==(const StationMeta&) const = default;
};

/// One channel reading. `raw` is kept verbatim for audit; consumers read value().
struct ChannelReading {
    double raw = 0.0;
    int qc = 0;
    bool missing = false;

    bool operator==(const ChannelReading&) const = default;
};

struct ObservationRecord {
    Timestamp timestamp;
    double zenith = 0.0;
    std::array<ChannelReading, kChannelCount> channels{};

    const ChannelReading& reading(Channel c) const { return channels[index(c)]; }
    ChannelReading& reading(Channel c) { return channels[index(c)]; }

    /// Usable value, or nullopt when missing. dw_solar is clamped at zero.
    std::optional<double> value(Channel c) const;
    /// True when dw_solar was negative and value() reports the clamped zero.
    bool clamped(Channel c) const;

    bool operator==(const ObservationRecord&) const = default;
};

struct ObservationSeries {
    StationMeta station;
    std::vector<ObservationRecord> records;  // strictly increasing timestamps
};

/// A data row that could not be decoded. Parsing continues past it.
struct RowError {
    std::size_t row_index = 0;  // zero-based index among data rows
    std::size_t line = 0;       // one-based line number in the file
    std::string message;
};

struct ParsedDay {
    StationMeta station;
    std::vector<ObservationRecord> records;
    std::vector<RowError> row_errors;
};

/// Builds a reading from a raw value, applying sentinel and range rules.
ChannelReading make_reading(Channel c, double raw, int qc);
/// True when a non-sentinel value is outside the channel's physical domain.
bool out_of_range(Channel c, double raw);

/// Parses a SURFRAD 1-minute daily ASCII file. Throws ParseError on an
/// empty file or malformed header; malformed data rows land in row_errors.
ParsedDay parse_daily_file(std::string_view bytes);

/// Merges per-file parses of one station into a strictly increasing series,
/// keeping the first occurrence of duplicated timestamps.
ObservationSeries merge_series(std::vector<std::pair<StationMeta, std::vector<ObservationRecord>>> parts);

struct ChannelQc {
    std::size_t missing = 0;
    std::size_t clamped = 0;
    std::size_t out_of_range = 0;
    std::size_t qc_flagged = 0;
    double usable_fraction = 0.0;
};

struct QcReport {
    std::size_t rows = 0;
    std::array<ChannelQc, kChannelCount> channels{};
    /// Fraction of rows with every channel present.
    double usable_row_fraction = 0.0;
};

QcReport qc_summary(const ObservationSeries& series);
std::string format_qc_report(const QcReport& report);

/// Canonical columnar CSV: timestamp, zenith, 20 channel values, 20 qc
/// columns, 20 missing booleans. Channel columns hold the raw reading so the
/// round trip is lossless.
std::string canonical_csv_header();
std::string to_canonical_csv(const std::vector<ObservationRecord>& records);
std::vector<ObservationRecord> from_canonical_csv(std::string_view csv);

/// key = value text used next to canonical CSVs.
std::string to_station_text(const StationMeta& meta);
StationMeta from_station_text(std::string_view text);

/// Published SURFRAD stations.
struct KnownStation {
    std::string_view code;
    std::string_view archive_dir;
    StationMeta meta;
};
const std::vector<KnownStation>& known_stations();
/// Looks up by three-letter code or by station name (case-insensitive).
std::optional<KnownStation> find_station(std::string_view code_or_name);

/// Daily file name as published, e.g. "psu09001.dat".
std::string daily_file_name(std::string_view code, int year, int day_of_year);

}  // namespace irradcast::surfrad
