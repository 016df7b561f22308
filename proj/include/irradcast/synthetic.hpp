#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "irradcast/surfrad.hpp"
#include "irradcast/time.hpp"

namespace irradcast::synthetic {

/// Deterministic stand-in for a SURFRAD station: a Bird clear sky modulated
/// by a cloud process that humidity and pressure anticipate by ~1-2 hours.
struct StationModel {
    surfrad::StationMeta station{"Synthetic", 40.72, -77.93, 376.0};
    std::uint64_t seed = 20240601;
    /// Probability that any single channel reading is replaced by -9999.9.
    double missing_rate = 0.0;
};

/// Full 1440-row daily file in SURFRAD layout for the given UTC day.
std::string daily_file(const StationModel& model, int year, int month, int day);

/// Writes one daily file per day in [first, last] to dir using published
/// file names; returns the written paths.
std::vector<std::string> write_daily_files(const StationModel& model, const std::string& code, Timestamp first,
                                           Timestamp last, const std::string& dir);

}  // namespace irradcast::synthetic
