#include "irradcast/fetch.hpp"

#include <curl/curl.h>

#include <filesystem>
#include <memory>

#include "irradcast/error.hpp"
#include "irradcast/surfrad.hpp"
#include "irradcast/text.hpp"

namespace irradcast::surfrad {

namespace {

std::size_t append_body(char* data, std::size_t size, std::size_t nmemb, void* user) {
    static_cast<std::string*>(user)->append(data, size * nmemb);
    return size * nmemb;
}

struct CurlGlobal {
    CurlGlobal() { curl_global_init(CURL_GLOBAL_DEFAULT); }
    ~CurlGlobal() { curl_global_cleanup(); }
};

}  // namespace

std::vector<FetchResult> fetch_daily_files(const std::string& station_code, Timestamp first_day, Timestamp last_day,
                                           const std::string& dest_dir, const std::string& base_url,
                                           long timeout_s) {
    const auto station = find_station(station_code);
    if (!station) throw ConfigError("unknown SURFRAD station '" + station_code + "'");
    static CurlGlobal global;
    std::filesystem::create_directories(dest_dir);

    std::unique_ptr<CURL, decltype(&curl_easy_cleanup)> handle(curl_easy_init(), &curl_easy_cleanup);
    if (!handle) throw IoError("curl_easy_init failed");

    std::vector<FetchResult> results;
    for (Timestamp day{first_day.minutes - first_day.minutes % 1440}; day <= last_day; day = day.plus_hours(24)) {
        const int year = year_of(day);
        FetchResult r;
        r.file_name = daily_file_name(station->code, year, day_of_year(day));
        r.local_path = (std::filesystem::path(dest_dir) / r.file_name).string();
        const std::string url =
            base_url + "/" + std::string(station->archive_dir) + "/" + std::to_string(year) + "/" + r.file_name;

        std::string body;
        curl_easy_reset(handle.get());
        curl_easy_setopt(handle.get(), CURLOPT_URL, url.c_str());
        curl_easy_setopt(handle.get(), CURLOPT_FOLLOWLOCATION, 1L);
        curl_easy_setopt(handle.get(), CURLOPT_TIMEOUT, timeout_s);
        curl_easy_setopt(handle.get(), CURLOPT_FAILONERROR, 1L);
        curl_easy_setopt(handle.get(), CURLOPT_WRITEFUNCTION, &append_body);
        curl_easy_setopt(handle.get(), CURLOPT_WRITEDATA, &body);
        const CURLcode rc = curl_easy_perform(handle.get());
        if (rc != CURLE_OK) {
            r.error = std::string(curl_easy_strerror(rc)) + " (" + url + ")";
        } else {
            try {
                text::write_file(r.local_path, body);
                r.ok = true;
            } catch (const Error& e) {
                r.error = e.what();
            }
        }
        results.push_back(std::move(r));
    }
    return results;
}

}  // namespace irradcast::surfrad
