// Acceptance run: one PASS/FAIL/SKIPPED line per criterion.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <functional>
#include <limits>
#include <random>
#include <optional>
#include <regex>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "irradcast/archive.hpp"
#include "irradcast/checkpoint.hpp"
#include "irradcast/clearsky.hpp"
#include "irradcast/dataset.hpp"
#include "irradcast/evaluate.hpp"
#include "irradcast/gradcheck.hpp"
#include "irradcast/network.hpp"
#include "irradcast/surfrad.hpp"
#include "irradcast/synthetic.hpp"
#include "irradcast/text.hpp"
#include "irradcast/trainer.hpp"

using namespace irradcast;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

enum class Status { pass, fail, skipped };

struct Outcome {
    Status status = Status::fail;
    std::string details;
};

Outcome pass_if(bool ok, std::string details) { return {ok ? Status::pass : Status::fail, std::move(details)}; }

std::string fmt(double v, int decimals = 4) { return text::format_fixed(v, decimals); }

std::string sci(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", v);
    return buf;
}

// --- 1 -----------------------------------------------------------------------

Outcome gradient_oracle() {
    const auto suite = nn::run_gradcheck_suite(60, 7, 8, 5, 4);
    std::size_t elements = 0;
    for (const auto& c : suite.cases) elements += c.result.elements_checked;
    const bool ok = suite.cases.size() >= 50 && suite.passed && suite.max_relative_error <= 1e-4;
    return pass_if(ok, std::to_string(suite.cases.size()) + " configurations, " + std::to_string(elements) +
                           " elements, max relative error " + sci(suite.max_relative_error) + " (limit 1e-4)");
}

// --- 2 -----------------------------------------------------------------------

nn::Tensor uniform(std::vector<std::size_t> shape, std::mt19937_64& rng, double lo, double hi) {
    nn::Tensor t(std::move(shape));
    std::uniform_real_distribution<double> u(lo, hi);
    for (double& v : t.values()) v = u(rng);
    return t;
}

nn::LstmCell random_cell(std::size_t hidden, std::size_t input, std::mt19937_64& rng, double w) {
    const std::size_t cols = hidden + input;
    return {uniform({hidden, cols}, rng, -w, w), uniform({hidden, cols}, rng, -w, w),
            uniform({hidden, cols}, rng, -w, w), uniform({hidden, cols}, rng, -w, w),
            uniform({hidden}, rng, -w, w),       uniform({hidden}, rng, -w, w),
            uniform({hidden}, rng, -w, w),       uniform({hidden}, rng, -w, w)};
}

Outcome lstm_algebra() {
    std::mt19937_64 rng(2024);
    std::size_t gate_values = 0, gate_violations = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t hidden = 1 + trial % 8, input = 1 + trial % 5;
        const auto cell = random_cell(hidden, input, rng, 3.0);
        nn::Tensor h = uniform({hidden}, rng, -1, 1), c = uniform({hidden}, rng, -2, 2);
        for (int t = 0; t < 6; ++t) {
            const auto r = nn::lstm_step(cell, uniform({input}, rng, -3, 3), h, c);
            for (const nn::Tensor* g : {&r.gates.forget, &r.gates.input, &r.gates.output})
                for (double v : g->values()) {
                    ++gate_values;
                    if (!(v > 0.0 && v < 1.0)) ++gate_violations;
                }
            for (double v : r.gates.candidate.values())
                if (!(v >= -1.0 && v <= 1.0)) ++gate_violations;
            h = r.h;
            c = r.c;
        }
    }

    // Forget gate saturated at one, input gate at zero: the cell state is carried unchanged.
    std::size_t hold_mismatches = 0;
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t hidden = 1 + trial % 8, input = 1 + trial % 4;
        auto cell = random_cell(hidden, input, rng, 1.0);
        cell.w_f = nn::Tensor::matrix(hidden, hidden + input);
        cell.w_i = nn::Tensor::matrix(hidden, hidden + input);
        cell.b_f = nn::Tensor::vector(hidden, 800.0);
        cell.b_i = nn::Tensor::vector(hidden, -800.0);
        const nn::Tensor c0 = uniform({hidden}, rng, -5, 5);
        nn::Tensor h = uniform({hidden}, rng, -1, 1), c = c0;
        for (int t = 0; t < 20; ++t) {
            auto r = nn::lstm_step(cell, uniform({input}, rng, -3, 3), h, c);
            h = std::move(r.h);
            c = std::move(r.c);
        }
        for (std::size_t k = 0; k < hidden; ++k)
            if (c[k] != c0[k]) ++hold_mismatches;
    }

    // All-zero parameters.
    std::size_t zero_mismatches = 0;
    for (std::size_t hidden : {1u, 3u, 8u}) {
        const std::size_t input = 4;
        const nn::LstmCell zero{nn::Tensor::matrix(hidden, hidden + input), nn::Tensor::matrix(hidden, hidden + input),
                                nn::Tensor::matrix(hidden, hidden + input), nn::Tensor::matrix(hidden, hidden + input),
                                nn::Tensor::vector(hidden), nn::Tensor::vector(hidden), nn::Tensor::vector(hidden),
                                nn::Tensor::vector(hidden)};
        nn::Tensor h = nn::Tensor::vector(hidden), c = nn::Tensor::vector(hidden);
        for (int t = 0; t < 5; ++t) {
            const auto r = nn::lstm_step(zero, uniform({input}, rng, -3, 3), h, c);
            for (std::size_t k = 0; k < hidden; ++k)
                if (r.gates.forget[k] != 0.5 || r.gates.input[k] != 0.5 || r.gates.output[k] != 0.5 || r.h[k] != 0.0)
                    ++zero_mismatches;
            h = r.h;
            c = r.c;
        }
    }
    return pass_if(gate_violations == 0 && hold_mismatches == 0 && zero_mismatches == 0,
                   std::to_string(gate_values) + " gate values, " + std::to_string(gate_violations) +
                       " out of range; memory hold mismatches " + std::to_string(hold_mismatches) +
                       "; zero-parameter trace mismatches " + std::to_string(zero_mismatches));
}

// --- 3 -----------------------------------------------------------------------

Outcome overfit_capacity() {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> x(-1.5, 1.5), kt(0.2, 1.0);
    dataset::WindowedDataset d;
    d.seq_len = 4;
    d.horizons = {1, 2, 3, 4};
    d.feature_names = {"dw_solar", "rh", "kt"};
    d.inputs = nn::Tensor({10, 4, 3});
    for (double& v : d.inputs.values()) v = x(rng);
    d.targets = nn::Tensor::matrix(10, 4);
    for (double& v : d.targets.values()) v = kt(rng);
    d.ghi_clear = nn::Tensor::matrix(10, 4, 700.0);
    for (std::size_t i = 0; i < 10; ++i) {
        d.window_end.push_back(make_timestamp(2010, 6, 1).plus_hours(static_cast<std::int64_t>(i)));
        d.last_kt.push_back(0.6);
    }
    dataset::NormalizationStats stats;
    stats.names = d.feature_names;
    stats.location = {0.0, 0.0, 0.0};
    stats.scale = {1.0, 1.0, 1.0};
    stats.target_location = 0.6;
    stats.target_scale = 0.25;

    bool ok = true;
    std::string details;
    for (const nn::Arch arch : {nn::Arch::rnn, nn::Arch::lstm})
        for (const char* mode : {"multi", "fixed:2"}) {
            trainer::TrainConfig c;
            c.arch = arch;
            c.mode = trainer::HorizonMode::parse(mode);
            c.seq_len = 4;
            c.hidden_dim = 16;
            c.batch_size = 10;
            c.epochs = 2000;
            c.optimizer.learning_rate = 1e-2;
            c.target_loss = 1e-3;
            c.seed = 5;
            const auto res = trainer::train(c, d, d, stats);
            const double mse = trainer::evaluate_mse(res.final, trainer::training_tensors(d, stats, c.mode),
                                                     c.mode.output_mode());
            const bool this_ok = mse < 1e-3 && res.record.epochs.size() <= 2000;
            ok = ok && this_ok;
            if (!details.empty()) details += "; ";
            details += std::string(nn::to_string(arch)) + "/" + mode + " mse " + sci(mse) + " after " +
                       std::to_string(res.record.epochs.size()) + " epochs";
        }
    return pass_if(ok, details);
}

// --- 4 -----------------------------------------------------------------------

Outcome clear_sky_fidelity(const fs::path& fixtures) {
    const std::string csv = text::read_file((fixtures / "bird_reference.csv").string());
    double worst = 0.0;
    std::size_t rows = 0;
    bool header = true;
    for (auto line : text::lines(csv)) {
        if (text::trim(line).empty() || line[0] == '#') continue;
        if (header) {
            header = false;
            continue;
        }
        std::vector<double> f;
        for (auto cell : text::split(line, ',')) f.push_back(text::parse_double(text::trim(cell)).value());
        clearsky::SolarPosition pos;
        pos.zenith = f[0];
        pos.sun_altitude = 90.0 - f[0];
        pos.air_mass = clearsky::relative_air_mass(f[0]);
        pos.earth_sun_distance_factor = clearsky::earth_sun_distance_factor(static_cast<int>(f[1]));
        clearsky::AtmosphericParams a;
        a.surface_pressure = f[2];
        a.ozone = f[3];
        a.precipitable_water = f[4];
        a.aerosol_optical_depth = f[5];
        a.ground_albedo = f[6];
        const auto cs = clearsky::bird_clear_sky(pos, a);
        worst = std::max({worst, std::abs(cs.dni - f[7]), std::abs(cs.dhi - f[8]), std::abs(cs.ghi - f[9])});
        ++rows;
    }

    std::mt19937_64 rng(99);
    std::uniform_int_distribution<int> year(1995, 2030), month(1, 12), day(1, 28), hour(0, 23), minute(0, 59);
    std::uniform_real_distribution<double> lat(-66.0, 66.0), lon(-180.0, 180.0);
    std::size_t night = 0, nonzero = 0, draws = 0;
    while (night < 10000) {
        ++draws;
        const surfrad::StationMeta site{"random", lat(rng), lon(rng), 0.0};
        const auto pos = clearsky::solar_position(
            make_timestamp(year(rng), month(rng), day(rng), hour(rng), minute(rng)), site);
        if (pos.zenith < 90.0) continue;
        ++night;
        const auto cs = clearsky::bird_clear_sky(pos, {});
        if (cs.dni != 0.0 || cs.dhi != 0.0 || cs.ghi != 0.0) ++nonzero;
    }
    return pass_if(rows >= 10 && worst <= 1.0 && nonzero == 0,
                   std::to_string(rows) + " reference rows, worst deviation " + sci(worst) + " W/m^2 (limit 1); " +
                       std::to_string(night) + " below-horizon positions, " + std::to_string(nonzero) + " nonzero");
}

// --- 5 -----------------------------------------------------------------------

Outcome literature_arithmetic(const fs::path& data) {
    const auto t = evaluate::parse_literature_table(text::read_file((data / "literature_table2.csv").string()));
    double ml = 0.0;
    for (int h = 1; h <= 4; ++h) ml += t.find("bon", 2009, h)->ml_wm2;
    ml /= 4.0;
    const auto agg = evaluate::literature_aggregates(t, 2009);
    const bool ok = std::abs(ml - 99.25) < 0.005 && std::abs(agg.rnn_average - 26.31) < 0.005 &&
                    std::abs(agg.ml_average - 92.36) < 0.005 && std::abs(agg.improvement - 0.715) <= 0.001;
    return pass_if(ok, "Bondville ML mean " + fmt(ml, 2) + ", RNN average " + fmt(agg.rnn_average, 3) +
                           ", ML average " + fmt(agg.ml_average, 3) + ", improvement " +
                           fmt(100.0 * agg.improvement, 2) + "%");
}

// --- 6 -----------------------------------------------------------------------

std::vector<fs::path> daily_files(const fs::path& dir, const std::string& code) {
    std::vector<fs::path> out;
    if (!fs::is_directory(dir)) return out;
    const std::regex name(code + R"(\d{5}\.dat)");
    for (const auto& e : fs::recursive_directory_iterator(dir))
        if (e.is_regular_file() && std::regex_match(e.path().filename().string(), name)) out.push_back(e.path());
    std::sort(out.begin(), out.end(), [](const fs::path& a, const fs::path& b) { return a.filename() < b.filename(); });
    return out;
}

/// Streams daily files into an hourly table.
dataset::HourlyTable hourly_from_files(const std::vector<fs::path>& files, const dataset::AggregateOptions& opts,
                                       surfrad::StationMeta& station) {
    std::optional<dataset::HourlyAggregator> agg;
    for (const auto& f : files) {
        auto day = surfrad::parse_daily_file(text::read_file(f.string()));
        if (!agg) {
            station = day.station;
            agg.emplace(station, opts);
        }
        for (const auto& r : day.records) agg->add(r);
    }
    return agg->finish();
}

std::string pipeline_run(const fs::path& dir) {
    fs::remove_all(dir);
    fs::create_directories(dir / "raw");
    synthetic::StationModel model;
    model.missing_rate = 0.002;
    synthetic::write_daily_files(model, "syn", make_timestamp(2009, 12, 1), make_timestamp(2010, 1, 29),
                                 (dir / "raw").string());

    dataset::PrepareConfig cfg;
    cfg.train_years = {2010};
    cfg.test_years = {2009};
    surfrad::StationMeta station;
    archive::DatasetArchive a;
    a.data = dataset::prepare_from_hourly(hourly_from_files(daily_files(dir / "raw", "syn"), cfg.aggregate, station),
                                          cfg);
    a.station = station;
    a.source_hash = "00000000";
    a.config_fingerprint = cfg.fingerprint();
    a.config_text = cfg.to_text();
    archive::write_dataset(dir / "dataset", a);
    const auto data = archive::read_dataset(dir / "dataset");

    trainer::TrainConfig tc;
    tc.epochs = 20;
    tc.seq_len = data.data.train.seq_len;
    tc.batch_size = 32;
    tc.train_years = cfg.train_years;
    tc.test_years = cfg.test_years;
    tc.site = "syn";
    const auto res = trainer::train(tc, data.data.train, data.data.test, data.data.stats);

    checkpoint::ModelManifest m;
    m.arch = tc.arch;
    m.mode = tc.mode;
    m.seq_len = tc.seq_len;
    m.hidden_dim = tc.hidden_dim;
    m.num_layers = tc.num_layers;
    m.dataset_horizons = data.data.train.horizons;
    m.feature_names = data.data.train.feature_names;
    m.stats = data.data.stats;
    m.station = data.station;
    m.train_years = tc.train_years;
    m.test_years = tc.test_years;
    m.seed = tc.seed;
    m.config_fingerprint = tc.fingerprint();
    m.dataset_hash = data.source_hash;
    m.epoch = res.record.best_epoch;
    m.test_mse = res.record.best_test_mse;
    checkpoint::save_checkpoint(dir / "best.ckpt", {res.best, m});
    m.epoch = res.record.epochs.back().epoch;
    m.test_mse = res.record.final_test_mse;
    checkpoint::save_checkpoint(dir / "final.ckpt", {res.final, m});

    const auto summary = evaluate::benchmark_report({evaluate::BenchmarkInput{
        "syn", checkpoint::load_checkpoint(dir / "best.ckpt"), checkpoint::load_checkpoint(dir / "final.ckpt"),
        &data.data.test}});
    const std::string report = evaluate::to_csv(summary) + evaluate::summary_text(summary) + evaluate::plot_csv(summary);
    text::write_file((dir / "report.csv").string(), evaluate::to_csv(summary));
    return report + res.record.to_csv();
}

Outcome pipeline_determinism(const fs::path& work) {
    const std::string a = pipeline_run(work / "run_a");
    const std::string b = pipeline_run(work / "run_b");
    const std::string ra = text::read_file((work / "run_a" / "report.csv").string());
    const std::string rb = text::read_file((work / "run_b" / "report.csv").string());
    const bool ok = !ra.empty() && a == b && ra == rb;
    return pass_if(ok, "60-day synthetic station, 20 epochs; report " + std::to_string(ra.size()) + " bytes, " +
                           (a == b ? "identical" : "different"));
}

// --- 7 -----------------------------------------------------------------------

Outcome desk_scale_run(const std::string& surfrad_dir) {
    if (surfrad_dir.empty()) return {Status::skipped, "no SURFRAD directory (set IRRADCAST_SURFRAD_DIR)"};
    const auto files = daily_files(surfrad_dir, "psu");
    std::vector<fs::path> wanted;
    std::set<int> years;
    for (const auto& f : files) {
        const int yy = std::stoi(f.filename().string().substr(3, 2));
        const int year = yy < 50 ? 2000 + yy : 1900 + yy;
        if (year >= 2009 && year <= 2011) {
            wanted.push_back(f);
            years.insert(year);
        }
    }
    if (years.size() < 3) return {Status::skipped, "Penn State 2009-2011 daily files not found under " + surfrad_dir};

    dataset::PrepareConfig cfg;
    cfg.train_years = {2010, 2011};
    cfg.test_years = {2009};
    surfrad::StationMeta station;
    const auto prepared = dataset::prepare_from_hourly(hourly_from_files(wanted, cfg.aggregate, station), cfg);

    trainer::TrainConfig tc;
    tc.arch = nn::Arch::lstm;
    tc.mode = trainer::HorizonMode::parse("multi");
    tc.epochs = 200;
    tc.seq_len = cfg.seq_len;
    tc.hidden_dim = 32;
    tc.batch_size = 100;
    tc.optimizer.learning_rate = 1e-3;
    const auto res = trainer::train(tc, prepared.train, prepared.test, prepared.stats);

    // Final weights: choosing the best epoch would select on the test year.
    checkpoint::Forecaster f;
    f.params = res.final;
    f.manifest.arch = tc.arch;
    f.manifest.mode = tc.mode;
    f.manifest.seq_len = tc.seq_len;
    f.manifest.hidden_dim = tc.hidden_dim;
    f.manifest.dataset_horizons = prepared.test.horizons;
    f.manifest.feature_names = prepared.test.feature_names;
    f.manifest.stats = prepared.stats;
    const auto reports = evaluate::evaluate_model(f, prepared.test, "psu");
    if (reports.empty()) return {Status::fail, "no test report"};
    const auto& rep = reports.front();
    double persistence = 0.0;
    for (const auto& r : rep.horizons) persistence += r.persistence_rmse_kt;
    persistence /= static_cast<double>(rep.horizons.size());
    const double one_hour = rep.horizons.front().rmse_wm2;
    return pass_if(rep.mean.rmse_kt < persistence && one_hour < 67.0,
                   "mean Kt RMSE " + fmt(rep.mean.rmse_kt) + " vs persistence " + fmt(persistence) +
                       "; 1-h RMSE " + fmt(one_hour, 2) + " W/m^2 (limit 67) after " +
                       std::to_string(res.record.epochs.size()) + " epochs");
}

// --- 8 -----------------------------------------------------------------------

Outcome inference_latency() {
    constexpr std::size_t hidden = 128, seq = 12, features = dataset::kFeatureCount;
    checkpoint::Forecaster f;
    f.params = nn::make_initialized_params({nn::Arch::lstm, features, hidden, 4, 1}, 3);
    auto& m = f.manifest;
    m.arch = nn::Arch::lstm;
    m.mode = trainer::HorizonMode::parse("multi");
    m.seq_len = seq;
    m.hidden_dim = hidden;
    m.dataset_horizons = {1, 2, 3, 4};
    m.feature_names = dataset::feature_names();
    m.stats.names = m.feature_names;
    m.stats.location.assign(features, 0.0);
    m.stats.scale.assign(features, 1.0);
    std::mt19937_64 rng(8);
    const nn::Tensor window = uniform({seq, features}, rng, 0.0, 500.0);

    std::vector<double> ms;
    double sink = 0.0;
    for (int i = 0; i < 100; ++i) {
        const auto t0 = Clock::now();
        sink += checkpoint::predict(f, window)[0];
        ms.push_back(std::chrono::duration<double, std::milli>(Clock::now() - t0).count());
    }
    std::sort(ms.begin(), ms.end());
    const double median = 0.5 * (ms[49] + ms[50]);
    return pass_if(median <= 10.0 && std::isfinite(sink),
                   "LSTM hidden 128, seq 12, 22 features: median " + fmt(median, 3) + " ms over 100 calls (limit 10)");
}

struct Criterion {
    int id;
    const char* name;
    double budget_s;
    std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"irradcast acceptance criteria"};
    std::string work = (fs::temp_directory_path() / "irradcast_acceptance").string();
    std::string fixtures = IRRADCAST_FIXTURE_DIR, data = IRRADCAST_DATA_DIR, surfrad_dir;
    std::vector<int> only;
    app.add_option("--work", work, "Scratch directory")->capture_default_str();
    app.add_option("--fixtures", fixtures, "Test fixture directory")->capture_default_str();
    app.add_option("--data", data, "Literature table directory")->capture_default_str();
    app.add_option("--surfrad-dir", surfrad_dir, "SURFRAD daily files (default $IRRADCAST_SURFRAD_DIR)");
    app.add_option("--only", only, "Run only these criteria")->delimiter(',');
    CLI11_PARSE(app, argc, argv);
    if (surfrad_dir.empty())
        if (const char* env = std::getenv("IRRADCAST_SURFRAD_DIR")) surfrad_dir = env;
    fs::create_directories(work);

    const std::vector<Criterion> criteria{
        {1, "gradient oracle", 60, gradient_oracle},
        {2, "LSTM algebra", 5, lstm_algebra},
        {3, "overfit capacity", 60, overfit_capacity},
        {4, "clear-sky fidelity", 10, [&] { return clear_sky_fidelity(fixtures); }},
        {5, "literature arithmetic", 1, [&] { return literature_arithmetic(data); }},
        {6, "pipeline determinism", 300, [&] { return pipeline_determinism(work); }},
        {7, "desk-scale data run", 1800, [&] { return desk_scale_run(surfrad_dir); }},
        {8, "inference latency", 10, inference_latency},
    };

    int failures = 0;
    for (const auto& c : criteria) {
        if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
        const auto t0 = Clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {Status::fail, std::string("error: ") + e.what()};
        }
        const double s = std::chrono::duration<double>(Clock::now() - t0).count();
        if (o.status == Status::pass && s > c.budget_s) {
            o.status = Status::fail;
            o.details += "; over the " + fmt(c.budget_s, 0) + " s budget";
        }
        const char* label = o.status == Status::pass ? "PASS" : o.status == Status::skipped ? "SKIPPED" : "FAIL";
        if (o.status == Status::fail) ++failures;
        std::printf("criterion %d %s %s: %s (%.2f s)\n", c.id, label, c.name, o.details.c_str(), s);
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
