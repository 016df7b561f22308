#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <iterator>
#include <map>
#include <mutex>
#include <optional>
#include <regex>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "irradcast/archive.hpp"
#include "irradcast/checkpoint.hpp"
#include "irradcast/clearsky.hpp"
#include "irradcast/dataset.hpp"
#include "irradcast/error.hpp"
#include "irradcast/evaluate.hpp"
#include "irradcast/fetch.hpp"
#include "irradcast/gradcheck.hpp"
#include "irradcast/surfrad.hpp"
#include "irradcast/synthetic.hpp"
#include "irradcast/text.hpp"
#include "irradcast/trainer.hpp"

#ifndef IRRADCAST_DATA_DIR
#define IRRADCAST_DATA_DIR "data"
#endif

namespace fs = std::filesystem;
using namespace irradcast;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFatal = 1;
constexpr int kExitPartial = 2;

std::mutex log_mutex;
bool quiet = false;

// Every diagnostic line: irradcast|<level>|<command>|key=value ...
void log(std::string_view level, std::string_view cmd, const std::string& message) {
    if (quiet && level == "info") return;
    std::lock_guard lock(log_mutex);
    std::cerr << "irradcast|" << level << '|' << cmd << '|' << message << '\n';
}

std::string quote(std::string_view s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"' || c == '\\') out += '\\';
        out += c == '\n' ? ' ' : c;
    }
    return out + '"';
}

/// Short directory key for a site: the station code when known.
std::string site_key(std::string_view site) {
    if (auto s = surfrad::find_station(site)) return std::string(s->code);
    std::string key;
    for (char c : site) key += std::isalnum(static_cast<unsigned char>(c)) ? static_cast<char>(std::tolower(c)) : '_';
    return key;
}

std::vector<std::string> split_sites(const std::string& list) {
    std::vector<std::string> out;
    for (auto s : text::split(list, ','))
        if (!text::trim(s).empty()) out.emplace_back(text::trim(s));
    return out;
}

Timestamp parse_date(const std::string& s, const char* key) {
    static const std::regex re(R"((\d{4})-(\d{2})-(\d{2}))");
    std::smatch m;
    if (!std::regex_match(s, m, re)) throw ConfigError(std::string(key) + ": expected YYYY-MM-DD, got '" + s + "'");
    return make_timestamp(std::stoi(m[1]), std::stoi(m[2]), std::stoi(m[3]));
}

std::string mode_tag(const trainer::HorizonMode& m) {
    return m.multi ? "multi" : "fixed" + std::to_string(m.fixed_horizon);
}

void write_invocation(const CLI::App& app, const fs::path& dir) {
    fs::create_directories(dir);
    text::write_file((dir / "invocation.ini").string(), app.get_parent()->config_to_str(true, false));
}

// Canonical per-year files written by ingest: <key>_<year>.csv
std::map<int, fs::path> canonical_files(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw IoError("ingest directory " + dir.string() + " does not exist");
    static const std::regex re(R"(.+_(\d{4})\.csv)");
    std::map<int, fs::path> out;
    for (const auto& e : fs::directory_iterator(dir)) {
        std::smatch m;
        const std::string name = e.path().filename().string();
        if (e.is_regular_file() && std::regex_match(name, m, re)) out[std::stoi(m[1])] = e.path();
    }
    if (out.empty()) throw IoError("no canonical station files in " + dir.string());
    return out;
}

struct AtmosphereOptions {
    double aod = 0.1, ozone = 0.3, water = 1.5, albedo = 0.2, pressure = 1013.25;
    bool static_pressure = false;

    void add(CLI::App* cmd) {
        cmd->add_option("--aod", aod, "Broadband aerosol optical depth")->capture_default_str();
        cmd->add_option("--ozone", ozone, "Ozone column, atm-cm")->capture_default_str();
        cmd->add_option("--water", water, "Precipitable water, cm")->capture_default_str();
        cmd->add_option("--albedo", albedo, "Ground albedo")->capture_default_str();
        cmd->add_option("--pressure", pressure, "Fallback surface pressure, mb")->capture_default_str();
        cmd->add_flag("--static-pressure", static_pressure, "Ignore the station's measured pressure");
    }
    clearsky::AtmosphericParams params() const {
        clearsky::AtmosphericParams a;
        a.aerosol_optical_depth = aod;
        a.ozone = ozone;
        a.precipitable_water = water;
        a.ground_albedo = albedo;
        a.surface_pressure = pressure;
        a.validate();
        return a;
    }
};

// --- ingest -------------------------------------------------------------------

struct IngestOptions {
    std::string site;
    std::string src;
    bool fetch = false;
    std::vector<int> years;
    std::string from, to;
    std::string base_url = surfrad::kDefaultArchiveUrl;
};

std::optional<std::pair<Timestamp, Timestamp>> ingest_range(const IngestOptions& o) {
    if (!o.from.empty() || !o.to.empty()) {
        if (o.from.empty() || o.to.empty()) throw ConfigError("from/to: both ends of the date range are required");
        const Timestamp a = parse_date(o.from, "from"), b = parse_date(o.to, "to");
        if (b < a) throw ConfigError("to: range ends before it starts");
        return std::pair{a, b.plus_minutes(1439)};
    }
    if (!o.years.empty()) {
        const auto [lo, hi] = std::minmax_element(o.years.begin(), o.years.end());
        return std::pair{make_timestamp(*lo, 1, 1), make_timestamp(*hi, 12, 31, 23, 59)};
    }
    return std::nullopt;
}

bool in_request(const IngestOptions& o, const std::optional<std::pair<Timestamp, Timestamp>>& range, Timestamp t) {
    if (!range) return true;
    if (t < range->first || range->second < t) return false;
    return o.years.empty() || std::find(o.years.begin(), o.years.end(), year_of(t)) != o.years.end();
}

int cmd_ingest(const CLI::App& app, const IngestOptions& o, const fs::path& out_root) {
    const char* cmd = "ingest";
    if (o.src.empty() == !o.fetch) throw ConfigError("src: give exactly one of --src or --fetch");
    const auto range = ingest_range(o);
    const std::string key = site_key(o.site);
    const fs::path out = out_root / "ingest" / key;
    const auto known = surfrad::find_station(o.site);

    std::size_t failed = 0;
    std::vector<std::string> failed_files;
    fs::path src = o.src;
    if (o.fetch) {
        if (!known) throw ConfigError("site: '" + o.site + "' is not a known SURFRAD station, cannot fetch");
        if (!range) throw ConfigError("years: --fetch needs --years or --from/--to");
        src = out / "raw";
        for (const auto& r : surfrad::fetch_daily_files(std::string(known->code), range->first, range->second,
                                                        src.string(), o.base_url)) {
            if (r.ok) continue;
            ++failed;
            failed_files.push_back(r.file_name);
            log("warn", cmd, "file=" + r.file_name + " error=" + quote(r.error));
        }
    }
    if (!fs::is_directory(src)) throw IoError("src: directory " + src.string() + " does not exist");

    static const std::regex daily(R"(([a-z]{3})(\d{2})(\d{3})\.dat)");
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(src)) {
        if (!e.is_regular_file() || e.path().extension() != ".dat") continue;
        const std::string name = e.path().filename().string();
        std::smatch m;
        if (std::regex_match(name, m, daily)) {
            if (known && m[1].str() != known->code) continue;
            const int yy = std::stoi(m[2]);
            const int year = yy < 50 ? 2000 + yy : 1900 + yy;
            const Timestamp day = make_timestamp(year, 1, 1).plus_minutes((std::stoll(m[3]) - 1) * 1440);
            if (range && (day.plus_minutes(1439) < range->first || range->second < day)) continue;
        }
        files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());

    std::vector<std::pair<surfrad::StationMeta, std::vector<surfrad::ObservationRecord>>> parts;
    std::size_t row_errors = 0;
    std::string hash_input;
    for (const auto& f : files) {
        try {
            const std::string bytes = text::read_file(f.string());
            auto day = surfrad::parse_daily_file(bytes);
            row_errors += day.row_errors.size();
            for (const auto& e : day.row_errors)
                log("warn", cmd, "file=" + f.filename().string() + " line=" + std::to_string(e.line) +
                                     " error=" + quote(e.message));
            hash_input += f.filename().string() + ":" + archive::hex32(text::crc32(bytes)) + "\n";
            parts.emplace_back(day.station, std::move(day.records));
        } catch (const Error& e) {
            ++failed;
            failed_files.push_back(f.filename().string());
            log("error", cmd, "file=" + f.filename().string() + " kind=" + e.kind() + " error=" + quote(e.what()));
        }
    }
    if (parts.empty()) throw EmptyInput("src: no readable SURFRAD daily files in " + src.string());

    surfrad::ObservationSeries series = surfrad::merge_series(std::move(parts));
    std::erase_if(series.records, [&](const auto& r) { return !in_request(o, range, r.timestamp); });
    if (series.records.empty()) throw EmptyInput("years: no records inside the requested range");

    fs::create_directories(out);
    std::map<int, std::vector<surfrad::ObservationRecord>> by_year;
    for (const auto& r : series.records) by_year[year_of(r.timestamp)].push_back(r);
    for (const auto& [year, recs] : by_year)
        text::write_file((out / (key + "_" + std::to_string(year) + ".csv")).string(), surfrad::to_canonical_csv(recs));
    text::write_file((out / "station.txt").string(), surfrad::to_station_text(series.station));
    text::write_file((out / "qc.txt").string(), surfrad::format_qc_report(surfrad::qc_summary(series)));

    archive::KeyValues m;
    m.set("site", key);
    m.set("station", series.station.name);
    m.set("files_read", std::to_string(files.size() - (o.fetch ? 0 : failed)));
    m.set("files_failed", text::join(failed_files, ","));
    m.set("row_errors", std::to_string(row_errors));
    m.set("records", std::to_string(series.records.size()));
    m.set("source_hash", archive::hex32(text::crc32(hash_input)));
    text::write_file((out / "manifest.txt").string(), m.to_text());
    write_invocation(app, out);

    log("info", cmd, "site=" + key + " files=" + std::to_string(files.size()) + " failed=" + std::to_string(failed) +
                         " records=" + std::to_string(series.records.size()) + " out=" + out.string());
    return failed ? kExitPartial : kExitOk;
}

// --- clearsky -------------------------------------------------------------------

struct SourceOptions {
    std::string site;
    std::string ingest_dir;
    fs::path ingest(const fs::path& root) const {
        return ingest_dir.empty() ? root / "ingest" / site_key(site) : fs::path(ingest_dir);
    }
};

surfrad::StationMeta read_station(const fs::path& ingest) {
    return surfrad::from_station_text(text::read_file((ingest / "station.txt").string()));
}

int cmd_clearsky(const CLI::App& app, const SourceOptions& src, const AtmosphereOptions& atmo_opts,
                 const std::vector<int>& years, const fs::path& root) {
    const char* cmd = "clearsky";
    const fs::path ingest = src.ingest(root);
    const auto station = read_station(ingest);
    const auto atmo = atmo_opts.params();
    const fs::path out = root / "clearsky" / site_key(src.site);
    fs::create_directories(out);
    std::size_t samples = 0;
    for (const auto& [year, path] : canonical_files(ingest)) {
        if (!years.empty() && std::find(years.begin(), years.end(), year) == years.end()) continue;
        const auto records = surfrad::from_canonical_csv(text::read_file(path.string()));
        if (records.empty()) continue;
        std::map<std::int64_t, double> pressure;
        if (!atmo_opts.static_pressure)
            for (const auto& r : records)
                if (auto p = r.value(surfrad::Channel::pressure); p && *p > 0.0) pressure[r.timestamp.minutes] = *p;
        const clearsky::PressureLookup lookup = [&](Timestamp t) -> std::optional<double> {
            auto it = pressure.find(t.minutes);
            return it == pressure.end() ? std::nullopt : std::optional<double>(it->second);
        };
        const auto series =
            clearsky::clear_sky_series(station, atmo, records.front().timestamp, records.back().timestamp, lookup);
        samples += series.size();
        text::write_file((out / ("clearsky_" + std::to_string(year) + ".csv")).string(), clearsky::to_csv(series));
    }
    write_invocation(app, out);
    log("info", cmd, "site=" + site_key(src.site) + " samples=" + std::to_string(samples) + " out=" + out.string());
    return kExitOk;
}

// --- prepare ----------------------------------------------------------------------

struct PrepareOptions {
    SourceOptions src;
    AtmosphereOptions atmo;
    std::size_t seq_len = 12;
    std::vector<int> horizons{1, 2, 3, 4};
    std::vector<int> train_years{2010, 2011};
    std::vector<int> test_years{2009};
    int max_missing = 30;
    std::string qc = "keep";
    double eps_clear = 20.0;
    double zenith_max = 85.0;
    int max_gap = 3;
    double z_max = 6.0;
    double kt_cap = 2.0;
    std::string scheme = "zscore";
    std::vector<std::string> exclude;
    bool use_clearsky = false;
};

int cmd_prepare(const CLI::App& app, const PrepareOptions& o, const fs::path& root) {
    const char* cmd = "prepare";
    dataset::PrepareConfig cfg;
    cfg.seq_len = o.seq_len;
    cfg.horizons = o.horizons;
    cfg.train_years = o.train_years;
    cfg.test_years = o.test_years;
    cfg.aggregate.max_missing_minutes = o.max_missing;
    if (o.qc != "keep" && o.qc != "drop_flagged") throw ConfigError("qc: expected keep or drop_flagged");
    cfg.aggregate.qc = o.qc == "keep" ? dataset::QcPolicy::keep : dataset::QcPolicy::drop_flagged;
    cfg.aggregate.eps_clear = o.eps_clear;
    cfg.aggregate.zenith_max = o.zenith_max;
    cfg.aggregate.atmosphere = o.atmo.params();
    cfg.aggregate.use_measured_pressure = !o.atmo.static_pressure;
    cfg.max_interp_gap = o.max_gap;
    cfg.outliers.z_max = o.z_max;
    cfg.outliers.kt_cap = o.kt_cap;
    cfg.scheme = dataset::parse_scheme(o.scheme);
    cfg.exclude_features = o.exclude;

    const fs::path ingest = o.src.ingest(root);
    const auto station = read_station(ingest);
    const std::string key = site_key(o.src.site);

    std::vector<clearsky::ClearSkySample> precomputed;
    if (o.use_clearsky) {
        const fs::path cs = root / "clearsky" / key;
        if (!fs::is_directory(cs)) throw ConfigError("use-clearsky: no clear-sky series at " + cs.string());
        std::vector<fs::path> paths;
        for (const auto& e : fs::directory_iterator(cs))
            if (e.path().extension() == ".csv") paths.push_back(e.path());
        std::sort(paths.begin(), paths.end());
        for (const auto& p : paths) {
            auto part = clearsky::from_csv(text::read_file(p.string()));
            precomputed.insert(precomputed.end(), part.begin(), part.end());
        }
    }

    dataset::HourlyAggregator agg(station, cfg.aggregate, o.use_clearsky ? &precomputed : nullptr);
    std::string hash_input;
    for (const auto& [year, path] : canonical_files(ingest)) {
        const bool wanted = std::count(cfg.train_years.begin(), cfg.train_years.end(), year) ||
                            std::count(cfg.test_years.begin(), cfg.test_years.end(), year);
        if (!wanted) continue;
        const std::string bytes = text::read_file(path.string());
        hash_input += path.filename().string() + ":" + archive::hex32(text::crc32(bytes)) + "\n";
        for (const auto& r : surfrad::from_canonical_csv(bytes)) agg.add(r);
    }
    const auto hourly = agg.finish();
    archive::DatasetArchive a;
    a.data = dataset::prepare_from_hourly(hourly, cfg);
    a.station = station;
    a.source_hash = archive::hex32(text::crc32(hash_input));
    a.config_fingerprint = cfg.fingerprint();
    a.config_text = cfg.to_text();
    const fs::path out = root / "dataset" / key;
    archive::write_dataset(out, a);
    write_invocation(app, out);
    const auto& r = a.data.report;
    log("info", cmd, "site=" + key + " hourly_rows=" + std::to_string(r.hourly_rows) +
                         " train_windows=" + std::to_string(a.data.train.size()) +
                         " test_windows=" + std::to_string(a.data.test.size()) +
                         " outliers=" + std::to_string(r.outliers_dropped_train + r.outliers_dropped_test) +
                         " out=" + out.string());
    return kExitOk;
}

// --- train ------------------------------------------------------------------------

struct TrainOptions {
    std::string sites;
    std::string dataset_dir;
    std::string arch = "lstm";
    std::string mode = "multi";
    std::size_t epochs = 1000;
    std::size_t batch = 100;
    std::size_t seq_len = 0;
    std::size_t hidden = 32;
    std::size_t layers = 1;
    double lr = 1e-3;
    std::string optimizer = "adam";
    double clip = 5.0;
    std::uint64_t seed = 42;
    double target_loss = 0.0;
    std::size_t log_every = 50;
    std::size_t jobs = 1;
};

fs::path run_dir(const fs::path& root, const std::string& key, nn::Arch arch, const trainer::HorizonMode& mode) {
    return root / "runs" / (key + "_" + std::string(nn::to_string(arch)) + "_" + mode_tag(mode));
}

void train_site(const CLI::App& app, const TrainOptions& o, const std::string& site, const fs::path& root) {
    const char* cmd = "train";
    const std::string key = site_key(site);
    const fs::path dir = o.dataset_dir.empty() ? root / "dataset" / key : fs::path(o.dataset_dir);
    if (!fs::exists(dir / "manifest.txt"))
        throw ConfigError("dataset: no prepared dataset at " + dir.string() + " (run prepare or pass --dataset)");
    const auto data = archive::read_dataset(dir);

    trainer::TrainConfig cfg;
    cfg.arch = nn::parse_arch(o.arch);
    cfg.mode = trainer::HorizonMode::parse(o.mode);
    cfg.epochs = o.epochs;
    cfg.batch_size = o.batch;
    cfg.seq_len = o.seq_len ? o.seq_len : data.data.train.seq_len;
    cfg.hidden_dim = o.hidden;
    cfg.num_layers = o.layers;
    cfg.optimizer.kind = nn::parse_optimizer(o.optimizer);
    cfg.optimizer.learning_rate = o.lr;
    cfg.optimizer.clip_norm = o.clip;
    cfg.seed = o.seed;
    cfg.target_loss = o.target_loss;
    cfg.site = key;
    const auto kv = archive::KeyValues::parse(data.config_text);
    auto years = [&](const char* k) {
        std::vector<int> v;
        for (auto p : text::split(kv.get(k), ',')) v.push_back(static_cast<int>(text::parse_int(p).value_or(0)));
        return v;
    };
    cfg.train_years = years("train_years");
    cfg.test_years = years("test_years");
    cfg.validate();

    const fs::path out = run_dir(root, key, cfg.arch, cfg.mode);
    fs::create_directories(out);
    log("info", cmd, "site=" + key + " arch=" + o.arch + " mode=" + cfg.mode.to_string() +
                         " train_windows=" + std::to_string(data.data.train.size()) +
                         " test_windows=" + std::to_string(data.data.test.size()));
    const auto result = trainer::train(cfg, data.data.train, data.data.test, data.data.stats,
                                       [&](const trainer::EpochRecord& e) {
                                           if (o.log_every && (e.epoch % o.log_every == 0 || e.epoch == 1))
                                               log("info", cmd, "site=" + key + " epoch=" + std::to_string(e.epoch) +
                                                                    " train_mse=" + text::format_double(e.train_mse) +
                                                                    " test_mse=" + text::format_double(e.test_mse));
                                       });

    checkpoint::ModelManifest m;
    m.arch = cfg.arch;
    m.mode = cfg.mode;
    m.seq_len = cfg.seq_len;
    m.hidden_dim = cfg.hidden_dim;
    m.num_layers = cfg.num_layers;
    m.dataset_horizons = data.data.train.horizons;
    m.feature_names = data.data.train.feature_names;
    m.stats = data.data.stats;
    m.station = data.station;
    m.train_years = cfg.train_years;
    m.test_years = cfg.test_years;
    m.seed = cfg.seed;
    m.config_fingerprint = cfg.fingerprint();
    m.dataset_hash = data.source_hash;

    m.epoch = result.record.best_epoch;
    m.test_mse = result.record.best_test_mse;
    checkpoint::save_checkpoint(out / "best.ckpt", {result.best, m});
    m.epoch = result.record.epochs.back().epoch;
    m.test_mse = result.record.final_test_mse;
    checkpoint::save_checkpoint(out / "final.ckpt", {result.final, m});
    text::write_file((out / "run.csv").string(), result.record.to_csv());

    archive::KeyValues rm;
    rm.set("config_fingerprint", archive::hex32(cfg.fingerprint()));
    rm.set("dataset", dir.string());
    rm.set("dataset_hash", data.source_hash);
    rm.set("best_epoch", std::to_string(result.record.best_epoch));
    rm.set("best_test_mse", text::format_double(result.record.best_test_mse));
    rm.set("final_test_mse", text::format_double(result.record.final_test_mse));
    rm.set("final_train_mse", text::format_double(result.record.final_train_mse));
    rm.set("nonfinite_events", std::to_string(result.record.nonfinite_events));
    rm.set("early_stopped", result.record.early_stopped ? "true" : "false");
    text::write_file((out / "manifest.txt").string(), rm.to_text() + cfg.to_text());
    write_invocation(app, out);
    log("info", cmd, "site=" + key + " best_epoch=" + std::to_string(result.record.best_epoch) +
                         " best_test_mse=" + text::format_double(result.record.best_test_mse) +
                         " wall_s=" + text::format_fixed(result.record.wall_time.count(), 3) + " out=" + out.string());
}

int cmd_train(const CLI::App& app, const TrainOptions& o, const fs::path& root) {
    const auto sites = split_sites(o.sites);
    if (sites.empty()) throw ConfigError("site: at least one site is required");
    if (sites.size() > 1 && !o.dataset_dir.empty()) throw ConfigError("dataset: only valid with a single site");
    if (o.jobs < 1) throw ConfigError("jobs: must be at least 1");
    std::vector<std::function<void()>> jobs;
    for (const auto& s : sites) jobs.push_back([&, s] { train_site(app, o, s, root); });
    const auto errors = trainer::run_jobs(jobs, o.jobs);
    int code = kExitOk;
    for (std::size_t i = 0; i < errors.size(); ++i) {
        if (!errors[i]) continue;
        if (sites.size() == 1) std::rethrow_exception(errors[i]);
        try {
            std::rethrow_exception(errors[i]);
        } catch (const Error& e) {
            log("error", "train", "site=" + sites[i] + " kind=" + e.kind() + " error=" + quote(e.what()));
        } catch (const std::exception& e) {
            log("error", "train", "site=" + sites[i] + " error=" + quote(e.what()));
        }
        code = kExitPartial;
    }
    return code;
}

// --- predict / window ---------------------------------------------------------------

struct ModelRef {
    std::string checkpoint;
    std::string site;
    std::string arch = "lstm";
    std::string mode = "multi";

    fs::path path(const fs::path& root) const {
        if (!checkpoint.empty()) return checkpoint;
        if (site.empty()) throw ConfigError("checkpoint: give --checkpoint or --site");
        return run_dir(root, site_key(site), nn::parse_arch(arch), trainer::HorizonMode::parse(mode)) / "best.ckpt";
    }
};

double hour_clear_ghi(const surfrad::StationMeta& station, const clearsky::AtmosphericParams& atmo, Timestamp end) {
    double sum = 0.0;
    for (int m = 59; m >= 0; --m) {
        const auto pos = clearsky::solar_position(end.plus_minutes(-m), station);
        sum += clearsky::bird_clear_sky(pos, atmo).ghi;
    }
    return sum / 60.0;
}

int cmd_predict(const CLI::App& app, const ModelRef& ref, const std::string& window_path, const fs::path& root) {
    const auto model = checkpoint::load_checkpoint(ref.path(root));
    std::string csv;
    if (window_path == "-") csv.assign(std::istreambuf_iterator<char>(std::cin), {});
    else csv = text::read_file(window_path);
    const nn::Tensor window = checkpoint::parse_window_csv(csv, model.manifest);

    const auto started = std::chrono::steady_clock::now();
    const auto kt = checkpoint::predict(model, window);
    const double latency_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();

    std::vector<std::string_view> rows;
    for (auto l : text::lines(csv))
        if (!text::trim(l).empty()) rows.push_back(l);
    const Timestamp last = parse_iso8601(text::trim(text::split(rows.back(), ',')[0]));
    clearsky::AtmosphericParams atmo;
    const auto& names = model.manifest.feature_names;
    if (auto it = std::find(names.begin(), names.end(), "pressure"); it != names.end()) {
        const double p = window.at(window.rows() - 1, static_cast<std::size_t>(it - names.begin()));
        if (p > 0.0) atmo.surface_pressure = p;
    }

    std::string out = "horizon_h,target_time,kt,ghi_clear,ghi\n";
    const auto horizons = model.manifest.output_horizons();
    for (std::size_t j = 0; j < horizons.size(); ++j) {
        const Timestamp target = last.plus_hours(horizons[j]);
        const double clear = hour_clear_ghi(model.manifest.station, atmo, target);
        out += std::to_string(horizons[j]) + "," + to_iso8601(target) + "," + text::format_fixed(kt[j], 6) + "," +
               text::format_fixed(clear, 3) + "," + text::format_fixed(evaluate::kt_to_ghi(kt[j], clear), 3) + "\n";
    }
    std::cout << out;
    write_invocation(app, root / "invocations" / "predict");
    log("info", "predict", "outputs=" + std::to_string(horizons.size()) + " latency_ms=" + text::format_fixed(latency_ms, 4));
    return kExitOk;
}

int cmd_window(const std::string& site, const std::string& dataset_dir, const std::string& split, std::size_t sample,
               const fs::path& root) {
    const fs::path dir = dataset_dir.empty() ? root / "dataset" / site_key(site) : fs::path(dataset_dir);
    if (site.empty() && dataset_dir.empty()) throw ConfigError("dataset: give --dataset or --site");
    if (split != "train" && split != "test") throw ConfigError("split: expected train or test");
    const auto a = archive::read_dataset(dir);
    std::cout << checkpoint::window_csv(split == "train" ? a.data.train : a.data.test, a.data.stats, sample);
    return kExitOk;
}

// --- evaluate -----------------------------------------------------------------------

struct EvaluateOptions {
    std::string sites;
    std::string arch = "lstm";
    std::string mode = "multi";
    std::string literature = std::string(IRRADCAST_DATA_DIR) + "/literature_table2.csv";
    std::string name;
    bool plot = false;
};

int cmd_evaluate(const CLI::App& app, const EvaluateOptions& o, const fs::path& root) {
    const auto sites = split_sites(o.sites);
    if (sites.empty()) throw ConfigError("site: at least one site is required");
    const auto arch = nn::parse_arch(o.arch);
    const auto mode = trainer::HorizonMode::parse(o.mode);

    std::optional<evaluate::LiteratureTable> lit;
    if (!o.literature.empty()) lit = evaluate::parse_literature_table(text::read_file(o.literature));

    std::vector<archive::DatasetArchive> datasets;
    datasets.reserve(sites.size());
    std::vector<evaluate::BenchmarkInput> inputs;
    for (const auto& s : sites) {
        const std::string key = site_key(s);
        evaluate::BenchmarkInput in;
        in.site = key;
        const fs::path run = run_dir(root, key, arch, mode);
        const fs::path ds = root / "dataset" / key;
        if (fs::exists(run / "best.ckpt") && fs::exists(ds / "manifest.txt")) {
            in.best = checkpoint::load_checkpoint(run / "best.ckpt");
            if (fs::exists(run / "final.ckpt")) in.final = checkpoint::load_checkpoint(run / "final.ckpt");
            datasets.push_back(archive::read_dataset(ds));
            in.test = &datasets.back().data.test;
        }
        inputs.push_back(std::move(in));
    }
    const auto summary = evaluate::benchmark_report(inputs, lit ? &*lit : nullptr);
    const fs::path out = root / "reports" / (o.name.empty() ? o.arch + "_" + mode_tag(mode) : o.name);
    fs::create_directories(out);
    text::write_file((out / "report.csv").string(), evaluate::to_csv(summary));
    text::write_file((out / "summary.txt").string(), evaluate::summary_text(summary));
    if (o.plot) text::write_file((out / "plot.csv").string(), evaluate::plot_csv(summary));
    write_invocation(app, out);
    for (const auto& r : summary.reports)
        if (r.below_baseline)
            log("warn", "evaluate", "site=" + r.site + " year=" + std::to_string(r.test_year) + " below_baseline=true");
    log("info", "evaluate", "reports=" + std::to_string(summary.reports.size()) +
                                " overall_mean_rmse_wm2=" + text::format_fixed(summary.overall_mean_rmse_wm2, 4) +
                                " out=" + out.string());
    return kExitOk;
}

// --- gradcheck / synth ---------------------------------------------------------------

int cmd_gradcheck(std::size_t configs, std::uint64_t seed, std::size_t max_hidden, std::size_t max_seq) {
    const auto suite = nn::run_gradcheck_suite(configs, seed, max_hidden, max_seq);
    std::cout << "configurations=" << suite.cases.size() << " kink_redraws=" << suite.kink_redraws << "\n";
    std::cout << "max_relative_error=" << text::format_double(suite.max_relative_error) << "\n";
    std::cout << (suite.passed ? "PASS" : "FAIL") << "\n";
    return suite.passed ? kExitOk : kExitFatal;
}

int cmd_synth(const CLI::App& app, const std::string& code, const std::string& start, std::size_t days,
              std::uint64_t seed, double missing_rate, const fs::path& root) {
    if (days < 1) throw ConfigError("days: must be at least 1");
    synthetic::StationModel model;
    model.seed = seed;
    model.missing_rate = missing_rate;
    const Timestamp first = parse_date(start, "start");
    const Timestamp last = first.plus_minutes(static_cast<std::int64_t>(days - 1) * 1440);
    const fs::path out = root / "synthetic" / code;
    fs::create_directories(out);
    const auto files = synthetic::write_daily_files(model, code, first, last, out.string());
    write_invocation(app, out);
    log("info", "synth", "files=" + std::to_string(files.size()) + " out=" + out.string());
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Solar irradiance nowcasting with recurrent networks on SURFRAD data", "irradcast"};
    app.set_config("--config", "", "INI file; [section] per subcommand, flags override");
    app.allow_config_extras(CLI::config_extras_mode::error);
    app.require_subcommand(1);
    std::string out_dir = "out";
    app.add_option("--out", out_dir, "Output directory")->capture_default_str();
    app.add_flag("-q,--quiet", quiet, "Only warnings and errors on stderr");

    IngestOptions ingest;
    auto* c_ingest = app.add_subcommand("ingest", "Parse SURFRAD daily files into canonical station-year CSV");
    c_ingest->add_option("--site", ingest.site, "Station code or name")->required();
    c_ingest->add_option("--src", ingest.src, "Directory of daily .dat files");
    c_ingest->add_flag("--fetch", ingest.fetch, "Download from the NOAA archive");
    c_ingest->add_option("--years", ingest.years, "Years to keep")->delimiter(',');
    c_ingest->add_option("--from", ingest.from, "First day, YYYY-MM-DD");
    c_ingest->add_option("--to", ingest.to, "Last day, YYYY-MM-DD");
    c_ingest->add_option("--base-url", ingest.base_url, "Archive root for --fetch")->capture_default_str();

    SourceOptions cs_src;
    AtmosphereOptions cs_atmo;
    std::vector<int> cs_years;
    auto* c_clear = app.add_subcommand("clearsky", "Minute clear-sky series for an ingested station");
    c_clear->add_option("--site", cs_src.site, "Station code or name")->required();
    c_clear->add_option("--ingest", cs_src.ingest_dir, "Ingest directory (default <out>/ingest/<site>)");
    c_clear->add_option("--years", cs_years, "Years to compute")->delimiter(',');
    cs_atmo.add(c_clear);

    PrepareOptions prep;
    auto* c_prep = app.add_subcommand("prepare", "Hourly features, Kt targets and windowed tensors");
    c_prep->add_option("--site", prep.src.site, "Station code or name")->required();
    c_prep->add_option("--ingest", prep.src.ingest_dir, "Ingest directory (default <out>/ingest/<site>)");
    c_prep->add_option("--seq-len", prep.seq_len, "Hours of history per window")->capture_default_str();
    c_prep->add_option("--horizons", prep.horizons, "Forecast horizons in hours")->delimiter(',')->capture_default_str();
    c_prep->add_option("--train-years", prep.train_years, "Training years")->delimiter(',')->capture_default_str();
    c_prep->add_option("--test-years", prep.test_years, "Test years")->delimiter(',')->capture_default_str();
    c_prep->add_option("--max-missing", prep.max_missing, "Missing minutes tolerated per hour")->capture_default_str();
    c_prep->add_option("--qc", prep.qc, "keep or drop_flagged")->capture_default_str();
    c_prep->add_option("--eps-clear", prep.eps_clear, "Night threshold on clear-sky GHI, W/m^2")->capture_default_str();
    c_prep->add_option("--zenith-max", prep.zenith_max, "Night threshold on zenith, degrees")->capture_default_str();
    c_prep->add_option("--max-gap", prep.max_gap, "Longest gap (hours) filled by interpolation")->capture_default_str();
    c_prep->add_option("--z-max", prep.z_max, "Outlier z-score limit")->capture_default_str();
    c_prep->add_option("--kt-cap", prep.kt_cap, "Largest admissible Kt")->capture_default_str();
    c_prep->add_option("--scheme", prep.scheme, "zscore or minmax")->capture_default_str();
    c_prep->add_option("--exclude", prep.exclude, "Features left out of the inputs")->delimiter(',');
    c_prep->add_flag("--use-clearsky", prep.use_clearsky, "Use the clearsky subcommand's series");
    prep.atmo.add(c_prep);

    TrainOptions tr;
    auto* c_train = app.add_subcommand("train", "Train a forecaster per site");
    c_train->add_option("--site", tr.sites, "Station code(s), comma separated")->required();
    c_train->add_option("--dataset", tr.dataset_dir, "Prepared dataset directory (default <out>/dataset/<site>)");
    c_train->add_option("--arch", tr.arch, "rnn or lstm")->check(CLI::IsMember({"rnn", "lstm"}))->capture_default_str();
    c_train->add_option("--mode", tr.mode, "fixed:N or multi")->capture_default_str();
    c_train->add_option("--epochs", tr.epochs, "Training epochs")->capture_default_str();
    c_train->add_option("--batch", tr.batch, "Mini-batch size")->capture_default_str();
    c_train->add_option("--seq-len", tr.seq_len, "Must match the dataset; 0 takes the dataset's");
    c_train->add_option("--hidden", tr.hidden, "Hidden units per layer")->capture_default_str();
    c_train->add_option("--layers", tr.layers, "Stacked recurrent layers")->capture_default_str();
    c_train->add_option("--lr", tr.lr, "Learning rate")->capture_default_str();
    c_train->add_option("--optimizer", tr.optimizer, "sgd or adam")->capture_default_str();
    c_train->add_option("--clip", tr.clip, "Global gradient-norm clip, 0 disables")->capture_default_str();
    c_train->add_option("--seed", tr.seed, "Initialization and shuffle seed")->capture_default_str();
    c_train->add_option("--target-loss", tr.target_loss, "Stop when train MSE reaches this")->capture_default_str();
    c_train->add_option("--log-every", tr.log_every, "Epochs between progress lines")->capture_default_str();
    c_train->add_option("--jobs", tr.jobs, "Sites trained in parallel")->capture_default_str();
    c_train->add_option("--train-years", "Taken from the dataset; accepted for config symmetry")->delimiter(',');
    c_train->add_option("--test-years", "Taken from the dataset; accepted for config symmetry")->delimiter(',');

    ModelRef pref;
    std::string window_path = "-";
    auto* c_pred = app.add_subcommand("predict", "Forecast from one window of hourly measurements");
    c_pred->add_option("--checkpoint", pref.checkpoint, "Checkpoint file");
    c_pred->add_option("--site", pref.site, "Use <out>/runs/<site>_<arch>_<mode>/best.ckpt");
    c_pred->add_option("--arch", pref.arch, "rnn or lstm")->capture_default_str();
    c_pred->add_option("--mode", pref.mode, "fixed:N or multi")->capture_default_str();
    c_pred->add_option("--window", window_path, "Window CSV, - for stdin")->capture_default_str();

    std::string w_site, w_dataset, w_split = "test";
    std::size_t w_sample = 0;
    auto* c_win = app.add_subcommand("window", "Print a dataset sample as a raw window CSV");
    c_win->add_option("--site", w_site, "Station code or name");
    c_win->add_option("--dataset", w_dataset, "Prepared dataset directory");
    c_win->add_option("--split", w_split, "train or test")->capture_default_str();
    c_win->add_option("--sample", w_sample, "Sample index")->capture_default_str();

    EvaluateOptions ev;
    auto* c_eval = app.add_subcommand("evaluate", "Benchmark report against persistence and literature values");
    c_eval->add_option("--site", ev.sites, "Station code(s), comma separated")->required();
    c_eval->add_option("--arch", ev.arch, "rnn or lstm")->capture_default_str();
    c_eval->add_option("--mode", ev.mode, "fixed:N or multi")->capture_default_str();
    c_eval->add_option("--literature", ev.literature, "Literature table CSV, empty to skip")->capture_default_str();
    c_eval->add_option("--name", ev.name, "Report directory name (default <arch>_<mode>)");
    c_eval->add_flag("--plot", ev.plot, "Also write long-format plot data");

    std::size_t g_configs = 50, g_hidden = 8, g_seq = 5;
    std::uint64_t g_seed = 1;
    auto* c_grad = app.add_subcommand("gradcheck", "Finite-difference check of the analytic gradients");
    c_grad->add_option("--configs", g_configs, "Random configurations")->capture_default_str();
    c_grad->add_option("--seed", g_seed, "Seed")->capture_default_str();
    c_grad->add_option("--hidden", g_hidden, "Largest hidden width")->capture_default_str();
    c_grad->add_option("--seq-len", g_seq, "Longest sequence")->capture_default_str();

    std::string s_code = "syn", s_start = "2009-01-01";
    std::size_t s_days = 60;
    std::uint64_t s_seed = 20240601;
    double s_missing = 0.0;
    auto* c_synth = app.add_subcommand("synth", "Write a deterministic synthetic station in SURFRAD layout");
    c_synth->add_option("--code", s_code, "File name prefix")->capture_default_str();
    c_synth->add_option("--start", s_start, "First day, YYYY-MM-DD")->capture_default_str();
    c_synth->add_option("--days", s_days, "Number of days")->capture_default_str();
    c_synth->add_option("--seed", s_seed, "Seed")->capture_default_str();
    c_synth->add_option("--missing-rate", s_missing, "Probability of a sentinel reading")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitFatal;
    }

    const fs::path root = out_dir;
    std::string cmd = app.get_subcommands().front()->get_name();
    try {
        if (*c_ingest) return cmd_ingest(*c_ingest, ingest, root);
        if (*c_clear) return cmd_clearsky(*c_clear, cs_src, cs_atmo, cs_years, root);
        if (*c_prep) return cmd_prepare(*c_prep, prep, root);
        if (*c_train) return cmd_train(*c_train, tr, root);
        if (*c_pred) return cmd_predict(*c_pred, pref, window_path, root);
        if (*c_win) return cmd_window(w_site, w_dataset, w_split, w_sample, root);
        if (*c_eval) return cmd_evaluate(*c_eval, ev, root);
        if (*c_grad) return cmd_gradcheck(g_configs, g_seed, g_hidden, g_seq);
        if (*c_synth) return cmd_synth(*c_synth, s_code, s_start, s_days, s_seed, s_missing, root);
    } catch (const Error& e) {
        log("error", cmd, std::string("kind=") + e.kind() + " error=" + quote(e.what()));
        return kExitFatal;
    } catch (const std::exception& e) {
        log("error", cmd, "kind=Exception error=" + quote(e.what()));
        return kExitFatal;
    }
    return kExitFatal;
}
