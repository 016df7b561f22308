#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "irradcast/archive.hpp"
#include "irradcast/checkpoint.hpp"
#include "irradcast/clearsky.hpp"
#include "irradcast/dataset.hpp"
#include "irradcast/error.hpp"
#include "irradcast/evaluate.hpp"
#include "irradcast/gradcheck.hpp"
#include "irradcast/surfrad.hpp"
#include "irradcast/synthetic.hpp"
#include "irradcast/text.hpp"
#include "irradcast/trainer.hpp"

namespace py = pybind11;
using namespace irradcast;

namespace {

py::array_t<double> to_array(const nn::Tensor& t) {
    std::vector<py::ssize_t> shape(t.shape().begin(), t.shape().end());
    py::array_t<double> a(shape);
    std::copy_n(t.data(), t.size(), a.mutable_data());
    return a;
}

py::array_t<double> to_array(const std::vector<double>& v) {
    py::array_t<double> a(static_cast<py::ssize_t>(v.size()));
    std::copy(v.begin(), v.end(), a.mutable_data());
    return a;
}

nn::Tensor from_array(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
    std::vector<std::size_t> shape(a.shape(), a.shape() + a.ndim());
    return nn::Tensor(shape, std::vector<double>(a.data(), a.data() + a.size()));
}

py::dict station_dict(const surfrad::StationMeta& s) {
    py::dict d;
    d["name"] = s.name;
    d["latitude"] = s.latitude;
    d["longitude"] = s.longitude;
    d["elevation"] = s.elevation;
    return d;
}

py::dict parsed_day(const std::string& text) {
    const auto day = surfrad::parse_daily_file(text);
    std::vector<std::string> stamps;
    std::vector<double> zenith;
    py::dict channels;
    for (const auto& r : day.records) {
        stamps.push_back(to_iso8601(r.timestamp));
        zenith.push_back(r.zenith);
    }
    for (std::size_t c = 0; c < surfrad::kChannelCount; ++c) {
        std::vector<double> v;
        for (const auto& r : day.records) v.push_back(r.value(surfrad::channel_at(c)).value_or(std::nan("")));
        channels[py::str(std::string(surfrad::channel_name(surfrad::channel_at(c))))] = to_array(v);
    }
    py::list errors;
    for (const auto& e : day.row_errors) errors.append(py::make_tuple(e.line, e.message));
    py::dict d;
    d["station"] = day.station;
    d["timestamps"] = stamps;
    d["zenith"] = to_array(zenith);
    d["channels"] = channels;
    d["row_errors"] = errors;
    return d;
}

archive::DatasetArchive prepare_dataset(const std::vector<std::string>& daily_files, const std::vector<int>& train_years,
                                        const std::vector<int>& test_years, std::size_t seq_len,
                                        const std::vector<int>& horizons) {
    std::vector<std::pair<surfrad::StationMeta, std::vector<surfrad::ObservationRecord>>> parts;
    std::string hash;
    for (const auto& f : daily_files) {
        auto day = surfrad::parse_daily_file(f);
        parts.emplace_back(day.station, std::move(day.records));
        hash += archive::hex32(text::crc32(f));
    }
    const auto series = surfrad::merge_series(std::move(parts));
    dataset::PrepareConfig cfg;
    cfg.seq_len = seq_len;
    cfg.horizons = horizons;
    cfg.train_years = train_years;
    cfg.test_years = test_years;
    archive::DatasetArchive a;
    a.data = dataset::prepare(series, cfg);
    a.station = series.station;
    a.source_hash = archive::hex32(text::crc32(hash));
    a.config_fingerprint = cfg.fingerprint();
    a.config_text = cfg.to_text();
    return a;
}

const dataset::WindowedDataset& split_of(const archive::DatasetArchive& a, const std::string& split) {
    if (split == "train") return a.data.train;
    if (split == "test") return a.data.test;
    throw ConfigError("split must be 'train' or 'test'");
}

std::pair<checkpoint::Forecaster, py::dict> train(const archive::DatasetArchive& data, const std::string& arch,
                                                  const std::string& mode, std::size_t epochs, std::size_t batch,
                                                  std::size_t hidden, std::size_t layers, double lr,
                                                  std::uint64_t seed, const std::string& optimizer) {
    trainer::TrainConfig cfg;
    cfg.arch = nn::parse_arch(arch);
    cfg.mode = trainer::HorizonMode::parse(mode);
    cfg.epochs = epochs;
    cfg.batch_size = batch;
    cfg.seq_len = data.data.train.seq_len;
    cfg.hidden_dim = hidden;
    cfg.num_layers = layers;
    cfg.optimizer.learning_rate = lr;
    cfg.optimizer.kind = nn::parse_optimizer(optimizer);
    cfg.seed = seed;
    cfg.site = data.station.name;
    trainer::TrainResult result;
    {
        py::gil_scoped_release release;
        result = trainer::train(cfg, data.data.train, data.data.test, data.data.stats);
    }
    checkpoint::Forecaster f;
    f.params = result.best;
    auto& m = f.manifest;
    m.arch = cfg.arch;
    m.mode = cfg.mode;
    m.seq_len = cfg.seq_len;
    m.hidden_dim = hidden;
    m.num_layers = layers;
    m.dataset_horizons = data.data.train.horizons;
    m.feature_names = data.data.train.feature_names;
    m.stats = data.data.stats;
    m.station = data.station;
    m.seed = seed;
    m.config_fingerprint = cfg.fingerprint();
    m.dataset_hash = data.source_hash;
    m.epoch = result.record.best_epoch;
    m.test_mse = result.record.best_test_mse;

    std::vector<double> train_mse, test_mse;
    for (const auto& e : result.record.epochs) {
        train_mse.push_back(e.train_mse);
        test_mse.push_back(e.test_mse);
    }
    py::dict rec;
    rec["train_mse"] = train_mse;
    rec["test_mse"] = test_mse;
    rec["best_epoch"] = result.record.best_epoch;
    rec["best_test_mse"] = result.record.best_test_mse;
    return {std::move(f), rec};
}

py::list report_rows(const std::vector<evaluate::ForecastReport>& reports) {
    py::list out;
    for (const auto& rep : reports)
        for (const auto& r : rep.horizons) {
            py::dict d;
            d["test_year"] = rep.test_year;
            d["horizon_h"] = r.horizon_h;
            d["rmse_kt"] = r.rmse_kt;
            d["rmse_wm2"] = r.rmse_wm2;
            d["persistence_rmse_kt"] = r.persistence_rmse_kt;
            d["persistence_rmse_wm2"] = r.persistence_rmse_wm2;
            out.append(d);
        }
    return out;
}

}  // namespace

PYBIND11_MODULE(_irradcast, m) {
    m.doc() = "Solar irradiance nowcasting with recurrent networks on SURFRAD data";

    auto base = py::register_exception<Error>(m, "IrradcastError", PyExc_RuntimeError);
    py::register_exception<ParseError>(m, "ParseError", base.ptr());
    py::register_exception<SchemaError>(m, "SchemaError", base.ptr());
    py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
    py::register_exception<ChecksumError>(m, "ChecksumError", base.ptr());
    py::register_exception<VersionError>(m, "VersionError", base.ptr());
    py::register_exception<InsufficientData>(m, "InsufficientData", base.ptr());
    py::register_exception<DateError>(m, "DateError", base.ptr());
    py::register_exception<ShapeError>(m, "ShapeError", base.ptr());

    py::class_<surfrad::StationMeta>(m, "StationMeta")
        .def(py::init<>())
        .def(py::init([](std::string name, double lat, double lon, double elev) {
                 surfrad::StationMeta s{std::move(name), lat, lon, elev};
                 s.validate();
                 return s;
             }),
             py::arg("name"), py::arg("latitude"), py::arg("longitude"), py::arg("elevation"))
        .def_readwrite("name", &surfrad::StationMeta::name)
        .def_readwrite("latitude", &surfrad::StationMeta::latitude)
        .def_readwrite("longitude", &surfrad::StationMeta::longitude)
        .def_readwrite("elevation", &surfrad::StationMeta::elevation)
        .def("__repr__", [](const surfrad::StationMeta& s) {
            return "StationMeta(" + py::repr(station_dict(s)).cast<std::string>() + ")";
        });

    m.def("parse_daily_file", &parsed_day, py::arg("text"),
          "Parse a SURFRAD daily file; channel arrays hold NaN where missing.");

    m.def(
        "solar_position",
        [](const std::string& iso, double lat, double lon, double elev) {
            const auto p = clearsky::solar_position(parse_iso8601(iso), {"site", lat, lon, elev});
            py::dict d;
            d["zenith"] = p.zenith;
            d["azimuth"] = p.azimuth;
            d["sun_altitude"] = p.sun_altitude;
            d["air_mass"] = p.air_mass ? py::cast(*p.air_mass) : py::none();
            d["earth_sun_distance_factor"] = p.earth_sun_distance_factor;
            return d;
        },
        py::arg("timestamp"), py::arg("latitude"), py::arg("longitude"), py::arg("elevation") = 0.0);

    m.def(
        "bird_clear_sky",
        [](double zenith, int day_of_year, double pressure, double ozone, double water, double aod, double albedo) {
            clearsky::SolarPosition pos;
            pos.zenith = zenith;
            pos.sun_altitude = 90.0 - zenith;
            pos.air_mass = clearsky::relative_air_mass(zenith);
            pos.earth_sun_distance_factor = clearsky::earth_sun_distance_factor(day_of_year);
            clearsky::AtmosphericParams atmo;
            atmo.surface_pressure = pressure;
            atmo.ozone = ozone;
            atmo.precipitable_water = water;
            atmo.aerosol_optical_depth = aod;
            atmo.ground_albedo = albedo;
            atmo.validate();
            const auto cs = clearsky::bird_clear_sky(pos, atmo);
            return py::make_tuple(cs.dni, cs.dhi, cs.ghi);
        },
        py::arg("zenith"), py::arg("day_of_year"), py::arg("pressure") = 1013.25, py::arg("ozone") = 0.3,
        py::arg("water") = 1.5, py::arg("aod") = 0.1, py::arg("albedo") = 0.2,
        "Clear-sky (dni, dhi, ghi) in W/m^2.");

    m.def("total_irradiance", py::overload_cast<double, double, double, double, double>(&clearsky::total_irradiance),
          py::arg("dni"), py::arg("dhi"), py::arg("reflected"), py::arg("incidence"), py::arg("tilt"));
    m.def("compute_kt", &dataset::compute_kt, py::arg("ghi_obs"), py::arg("ghi_clear"), py::arg("eps_clear") = 20.0,
          "Clear-sky index, or None when the clear-sky GHI is too small.");
    m.def("kt_to_ghi", &evaluate::kt_to_ghi, py::arg("kt"), py::arg("ghi_clear"));
    m.def(
        "rmse", [](const std::vector<double>& t, const std::vector<double>& p) { return evaluate::rmse(t, p); },
        py::arg("truth"), py::arg("pred"));

    m.def(
        "synthetic_daily_file",
        [](int year, int month, int day, std::uint64_t seed, double missing_rate) {
            synthetic::StationModel model;
            model.seed = seed;
            model.missing_rate = missing_rate;
            return synthetic::daily_file(model, year, month, day);
        },
        py::arg("year"), py::arg("month"), py::arg("day"), py::arg("seed") = 20240601, py::arg("missing_rate") = 0.0);

    py::class_<archive::DatasetArchive>(m, "Dataset")
        .def_static("load", [](const std::string& dir) { return archive::read_dataset(dir); }, py::arg("path"))
        .def("save", [](const archive::DatasetArchive& a, const std::string& dir) { archive::write_dataset(dir, a); },
             py::arg("path"))
        .def_property_readonly("station", [](const archive::DatasetArchive& a) { return a.station; })
        .def_property_readonly("seq_len", [](const archive::DatasetArchive& a) { return a.data.train.seq_len; })
        .def_property_readonly("horizons", [](const archive::DatasetArchive& a) { return a.data.train.horizons; })
        .def_property_readonly("feature_names",
                               [](const archive::DatasetArchive& a) { return a.data.train.feature_names; })
        .def("size", [](const archive::DatasetArchive& a, const std::string& s) { return split_of(a, s).size(); },
             py::arg("split"))
        .def("inputs", [](const archive::DatasetArchive& a, const std::string& s) { return to_array(split_of(a, s).inputs); },
             py::arg("split"), "Normalized inputs [samples, seq_len, features].")
        .def("targets",
             [](const archive::DatasetArchive& a, const std::string& s) { return to_array(split_of(a, s).targets); },
             py::arg("split"), "Clear-sky index targets [samples, horizons].")
        .def("ghi_clear",
             [](const archive::DatasetArchive& a, const std::string& s) { return to_array(split_of(a, s).ghi_clear); },
             py::arg("split"))
        .def(
            "window",
            [](const archive::DatasetArchive& a, const std::string& s, std::size_t i) {
                const auto& ds = split_of(a, s);
                if (i >= ds.size()) throw SchemaError("sample index out of range");
                nn::Tensor w = nn::Tensor::matrix(ds.seq_len, ds.feature_count());
                for (std::size_t t = 0; t < ds.seq_len; ++t)
                    for (std::size_t k = 0; k < ds.feature_count(); ++k) {
                        const auto c = *dataset::feature_index(ds.feature_names[k]);
                        w.at(t, k) = ds.inputs.at(i, t, k) * a.data.stats.scale[c] + a.data.stats.location[c];
                    }
                return to_array(w);
            },
            py::arg("split"), py::arg("index"), "Raw (denormalized) input window [seq_len, features].");

    m.def("prepare_dataset", &prepare_dataset, py::arg("daily_files"), py::arg("train_years"), py::arg("test_years"),
          py::arg("seq_len") = 12, py::arg("horizons") = std::vector<int>{1, 2, 3, 4},
          "Build a windowed dataset from SURFRAD daily file contents.");

    m.def(
        "persistence_baseline",
        [](const archive::DatasetArchive& a) {
            py::list out;
            for (const auto& s : evaluate::persistence_baseline(a.data.test)) {
                py::dict d;
                d["horizon_h"] = s.horizon_h;
                d["rmse_kt"] = s.rmse_kt;
                d["rmse_wm2"] = s.rmse_wm2;
                out.append(d);
            }
            return out;
        },
        py::arg("dataset"), "Smart-persistence RMSE per horizon on the test split.");

    py::class_<checkpoint::Forecaster>(m, "Forecaster")
        .def_static("load", [](const std::string& p) { return checkpoint::load_checkpoint(p); }, py::arg("path"))
        .def("save", [](const checkpoint::Forecaster& f, const std::string& p) { checkpoint::save_checkpoint(p, f); },
             py::arg("path"))
        .def_property_readonly("arch", [](const checkpoint::Forecaster& f) { return std::string(nn::to_string(f.manifest.arch)); })
        .def_property_readonly("mode", [](const checkpoint::Forecaster& f) { return f.manifest.mode.to_string(); })
        .def_property_readonly("output_horizons", [](const checkpoint::Forecaster& f) { return f.manifest.output_horizons(); })
        .def_property_readonly("feature_names", [](const checkpoint::Forecaster& f) { return f.manifest.feature_names; })
        .def_property_readonly("seq_len", [](const checkpoint::Forecaster& f) { return f.manifest.seq_len; })
        .def_property_readonly("test_mse", [](const checkpoint::Forecaster& f) { return f.manifest.test_mse; })
        .def(
            "predict",
            [](const checkpoint::Forecaster& f, const py::array_t<double, py::array::c_style | py::array::forcecast>& w) {
                return checkpoint::predict(f, from_array(w));
            },
            py::arg("window"), "Kt per output horizon from a raw window [seq_len, features].")
        .def(
            "evaluate",
            [](const checkpoint::Forecaster& f, const archive::DatasetArchive& a) {
                return report_rows(evaluate::evaluate_model(f, a.data.test, a.station.name));
            },
            py::arg("dataset"), "Per-horizon RMSE on the dataset's test split.");

    m.def("train", &train, py::arg("dataset"), py::arg("arch") = "lstm", py::arg("mode") = "multi",
          py::arg("epochs") = 1000, py::arg("batch") = 100, py::arg("hidden") = 32, py::arg("layers") = 1,
          py::arg("lr") = 1e-3, py::arg("seed") = 42, py::arg("optimizer") = "adam",
          "Train on a dataset; returns (best forecaster, loss record).");

    m.def(
        "gradcheck",
        [](std::size_t configs, std::uint64_t seed) {
            const auto s = nn::run_gradcheck_suite(configs, seed);
            py::dict d;
            d["configurations"] = s.cases.size();
            d["max_relative_error"] = s.max_relative_error;
            d["kink_redraws"] = s.kink_redraws;
            d["passed"] = s.passed;
            return d;
        },
        py::arg("configs") = 50, py::arg("seed") = 1);
}
