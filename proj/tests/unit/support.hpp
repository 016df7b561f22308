#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "irradcast/dataset.hpp"
#include "irradcast/surfrad.hpp"
#include "irradcast/synthetic.hpp"
#include "irradcast/text.hpp"
#include "irradcast/time.hpp"

namespace irradcast::testing {

inline std::string fixture(const std::string& name) { return text::read_file(std::string(IRRADCAST_FIXTURE_DIR) + "/" + name); }
inline std::string data_file(const std::string& name) { return text::read_file(std::string(IRRADCAST_DATA_DIR) + "/" + name); }

/// Gap-free daylit hourly table; feature c of row r is `value(r, c)`.
template <typename F>
dataset::HourlyTable make_table(std::size_t rows, Timestamp start, F value) {
    dataset::HourlyTable t;
    for (std::size_t r = 0; r < rows; ++r) {
        dataset::HourlyRow row;
        row.hour = start.plus_hours(static_cast<std::int64_t>(r));
        for (std::size_t c = 0; c < dataset::kFeatureCount; ++c) row.values[c] = value(r, c);
        row.kt = row.values[dataset::kKtColumn];
        row.kt_valid = true;
        row.ghi_clear = 600.0;
        row.zenith = 40.0;
        t.rows.push_back(row);
    }
    return t;
}

/// Smooth values in physically plausible ranges, distinct per row and column.
inline double plausible(std::size_t r, std::size_t c) {
    const double phase = 0.37 * static_cast<double>(r) + 0.91 * static_cast<double>(c);
    if (c == dataset::kKtColumn) return 0.6 + 0.3 * std::sin(phase);
    if (c == dataset::kCosZenithColumn) return 0.5 + 0.3 * std::cos(phase);
    const auto [lo, hi] = dataset::OutlierConfig::default_bounds()[c];
    return 0.5 * (lo + hi) + 0.1 * (hi - lo) * std::sin(phase);
}

/// Parsed and merged synthetic station covering `days` whole UTC days.
inline surfrad::ObservationSeries synthetic_series(Timestamp first_day, int days, double missing_rate = 0.0,
                                                   std::uint64_t seed = 20240601) {
    synthetic::StationModel model;
    model.missing_rate = missing_rate;
    model.seed = seed;
    std::vector<std::pair<surfrad::StationMeta, std::vector<surfrad::ObservationRecord>>> parts;
    for (int d = 0; d < days; ++d) {
        const CivilTime c = to_civil(first_day.plus_hours(24LL * d));
        auto day = surfrad::parse_daily_file(synthetic::daily_file(model, c.year, c.month, c.day));
        parts.emplace_back(day.station, std::move(day.records));
    }
    return surfrad::merge_series(std::move(parts));
}

/// Twenty synthetic days around a new year: train 2010, test 2009, 6-hour windows.
inline const dataset::PreparedDataset& small_prepared() {
    static const dataset::PreparedDataset prepared = [] {
        dataset::PrepareConfig cfg;
        cfg.seq_len = 6;
        cfg.train_years = {2010};
        cfg.test_years = {2009};
        return dataset::prepare(synthetic_series(make_timestamp(2009, 12, 22), 20, 0.01), cfg);
    }();
    return prepared;
}

}  // namespace irradcast::testing
