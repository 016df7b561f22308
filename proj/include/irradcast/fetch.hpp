#pragma once

#include <string>
#include <vector>

#include "irradcast/time.hpp"

namespace irradcast::surfrad {

inline constexpr const char* kDefaultArchiveUrl = "https://gml.noaa.gov/aftp/data/radiation/surfrad";

struct FetchResult {
    std::string file_name;
    std::string local_path;
    bool ok = false;
    std::string error;
};

/// Downloads one daily file per day in [first_day, last_day] for a known
/// station into dest_dir. A failed download is reported in its result and
/// never aborts the batch.
std::vector<FetchResult> fetch_daily_files(const std::string& station_code, Timestamp first_day, Timestamp last_day,
                                           const std::string& dest_dir,
                                           const std::string& base_url = kDefaultArchiveUrl, long timeout_s = 60);

}  // namespace irradcast::surfrad
