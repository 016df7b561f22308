#include "irradcast/archive.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "irradcast/error.hpp"
#include "irradcast/text.hpp"

namespace irradcast::archive {

namespace fs = std::filesystem;

static_assert(std::endian::native == std::endian::little, "archive arrays are stored little-endian");

namespace {

template <class T>
void write_raw(const fs::path& path, std::span<const T> values) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(values.data()), static_cast<std::streamsize>(values.size_bytes()));
    if (!out) throw IoError("short write to " + path.string());
}

template <class T>
std::vector<T> read_raw(const fs::path& path, std::size_t expected) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string());
    in.seekg(0, std::ios::end);
    const auto bytes = static_cast<std::size_t>(in.tellg());
    if (bytes != expected * sizeof(T))
        throw SchemaError(path.filename().string() + " holds " + std::to_string(bytes) + " bytes, manifest expects " +
                          std::to_string(expected * sizeof(T)));
    in.seekg(0);
    std::vector<T> v(expected);
    in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(bytes));
    if (!in) throw IoError("short read from " + path.string());
    return v;
}

std::string join_ints(const std::vector<int>& v) {
    std::vector<std::string> parts;
    for (int x : v) parts.push_back(std::to_string(x));
    return text::join(parts, ",");
}

std::vector<int> parse_ints(std::string_view s, std::string_view key) {
    std::vector<int> out;
    if (text::trim(s).empty()) return out;
    for (auto p : text::split(s, ',')) {
        const auto v = text::parse_int(text::trim(p));
        if (!v) throw SchemaError("bad integer list for '" + std::string(key) + "'");
        out.push_back(static_cast<int>(*v));
    }
    return out;
}

std::size_t parse_size(const KeyValues& kv, std::string_view key) {
    const auto v = text::parse_int(kv.get(key));
    if (!v || *v < 0) throw SchemaError("bad value for '" + std::string(key) + "'");
    return static_cast<std::size_t>(*v);
}

double parse_number(const KeyValues& kv, std::string_view key) {
    const auto v = text::parse_double(kv.get(key));
    if (!v) throw SchemaError("bad value for '" + std::string(key) + "'");
    return *v;
}

void write_split(const fs::path& dir, const std::string& prefix, const dataset::WindowedDataset& ds) {
    write_f64(dir / (prefix + "_inputs.f64"), ds.inputs.values());
    write_f64(dir / (prefix + "_targets.f64"), ds.targets.values());
    write_f64(dir / (prefix + "_ghi_clear.f64"), ds.ghi_clear.values());
    write_f64(dir / (prefix + "_last_kt.f64"), ds.last_kt);
    std::vector<std::int64_t> ends;
    for (const auto& t : ds.window_end) ends.push_back(t.minutes);
    write_raw<std::int64_t>(dir / (prefix + "_window_end.i64"), ends);
}

dataset::WindowedDataset read_split(const fs::path& dir, const std::string& prefix, std::size_t samples,
                                    std::size_t seq_len, const std::vector<int>& horizons,
                                    const std::vector<std::string>& names) {
    dataset::WindowedDataset ds;
    ds.seq_len = seq_len;
    ds.horizons = horizons;
    ds.feature_names = names;
    const std::size_t f = names.size(), h = horizons.size();
    ds.inputs = nn::Tensor({samples, seq_len, f}, read_f64(dir / (prefix + "_inputs.f64"), samples * seq_len * f));
    ds.targets = nn::Tensor({samples, h}, read_f64(dir / (prefix + "_targets.f64"), samples * h));
    ds.ghi_clear = nn::Tensor({samples, h}, read_f64(dir / (prefix + "_ghi_clear.f64"), samples * h));
    ds.last_kt = read_f64(dir / (prefix + "_last_kt.f64"), samples);
    for (auto m : read_raw<std::int64_t>(dir / (prefix + "_window_end.i64"), samples)) ds.window_end.push_back(Timestamp{m});
    return ds;
}

}  // namespace

void write_f64(const fs::path& path, std::span<const double> values) { write_raw<double>(path, values); }

std::vector<double> read_f64(const fs::path& path, std::size_t expected_count) {
    return read_raw<double>(path, expected_count);
}

std::string hex32(std::uint32_t v) {
    char buf[9];
    std::snprintf(buf, sizeof buf, "%08x", v);
    return buf;
}

// --- key/value text -------------------------------------------------------------

void KeyValues::set(std::string key, std::string value) {
    for (auto& [k, v] : entries)
        if (k == key) {
            v = std::move(value);
            return;
        }
    entries.emplace_back(std::move(key), std::move(value));
}

const std::string* KeyValues::find(std::string_view key) const {
    for (const auto& [k, v] : entries)
        if (k == key) return &v;
    return nullptr;
}

const std::string& KeyValues::get(std::string_view key) const {
    if (const auto* v = find(key)) return *v;
    throw SchemaError("manifest lacks key '" + std::string(key) + "'");
}

std::string KeyValues::to_text() const {
    std::string s;
    for (const auto& [k, v] : entries) s += k + " = " + v + "\n";
    return s;
}

KeyValues KeyValues::parse(std::string_view body) {
    KeyValues kv;
    std::size_t n = 0;
    for (auto line : text::lines(body)) {
        ++n;
        line = text::trim(line);
        if (line.empty() || line.front() == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw ParseError(n, "expected key = value");
        kv.set(std::string(text::trim(line.substr(0, eq))), std::string(text::trim(line.substr(eq + 1))));
    }
    return kv;
}

// --- normalization stats ----------------------------------------------------------

std::string stats_to_text(const dataset::NormalizationStats& stats) {
    KeyValues kv;
    kv.set("scheme", std::string(dataset::to_string(stats.scheme)));
    kv.set("target_location", text::format_double(stats.target_location));
    kv.set("target_scale", text::format_double(stats.target_scale));
    kv.set("features", std::to_string(stats.names.size()));
    for (std::size_t i = 0; i < stats.names.size(); ++i)
        kv.set("feature." + stats.names[i],
               text::format_double(stats.location[i]) + "," + text::format_double(stats.scale[i]));
    return kv.to_text();
}

dataset::NormalizationStats stats_from_text(std::string_view body) {
    const KeyValues kv = KeyValues::parse(body);
    dataset::NormalizationStats st;
    st.scheme = dataset::parse_scheme(kv.get("scheme"));
    st.target_location = parse_number(kv, "target_location");
    st.target_scale = parse_number(kv, "target_scale");
    const std::size_t n = parse_size(kv, "features");
    for (const auto& [k, v] : kv.entries) {
        if (!k.starts_with("feature.")) continue;
        const auto parts = text::split(v, ',');
        const auto loc = parts.size() == 2 ? text::parse_double(parts[0]) : std::nullopt;
        const auto scale = parts.size() == 2 ? text::parse_double(parts[1]) : std::nullopt;
        if (!loc || !scale) throw SchemaError("bad statistics for '" + k + "'");
        st.names.push_back(k.substr(8));
        st.location.push_back(*loc);
        st.scale.push_back(*scale);
    }
    if (st.names.size() != n) throw SchemaError("statistics list " + std::to_string(st.names.size()) +
                                                " features, header says " + std::to_string(n));
    return st;
}

// --- dataset directory ------------------------------------------------------------

void write_dataset(const fs::path& dir, const DatasetArchive& a) {
    fs::create_directories(dir);
    const auto& d = a.data;
    KeyValues m;
    m.set("format_version", std::to_string(kArchiveVersion));
    m.set("dtype", "float64");
    m.set("station_name", a.station.name);
    m.set("station_latitude", text::format_double(a.station.latitude));
    m.set("station_longitude", text::format_double(a.station.longitude));
    m.set("station_elevation", text::format_double(a.station.elevation));
    m.set("seq_len", std::to_string(d.train.seq_len));
    m.set("horizons", join_ints(d.train.horizons));
    m.set("feature_names", text::join(d.train.feature_names, ","));
    m.set("train_samples", std::to_string(d.train.size()));
    m.set("test_samples", std::to_string(d.test.size()));
    m.set("train_inputs_shape", d.train.inputs.shape_string());
    m.set("test_inputs_shape", d.test.inputs.shape_string());
    m.set("source_hash", a.source_hash);
    m.set("config_fingerprint", hex32(a.config_fingerprint));
    m.set("hourly_rows", std::to_string(d.report.hourly_rows));
    m.set("train_rows", std::to_string(d.report.train_rows));
    m.set("test_rows", std::to_string(d.report.test_rows));
    m.set("outliers_dropped_train", std::to_string(d.report.outliers_dropped_train));
    m.set("outliers_dropped_test", std::to_string(d.report.outliers_dropped_test));
    m.set("imputed_cells", std::to_string(d.report.imputed_cells));
    m.set("day_boundary_convention", d.report.day_boundary_convention);
    std::vector<std::string> means;
    for (double v : d.imputation.mean) means.push_back(text::format_double(v));
    m.set("imputation_means", text::join(means, ","));

    text::write_file((dir / "manifest.txt").string(), m.to_text());
    text::write_file((dir / "stats.txt").string(), stats_to_text(d.stats));
    text::write_file((dir / "config.txt").string(), a.config_text);
    write_split(dir, "train", d.train);
    write_split(dir, "test", d.test);
}

DatasetArchive read_dataset(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw IoError("dataset directory " + dir.string() + " does not exist");
    const KeyValues m = KeyValues::parse(text::read_file((dir / "manifest.txt").string()));
    const auto version = parse_size(m, "format_version");
    if (version != static_cast<std::size_t>(kArchiveVersion))
        throw VersionError("dataset format version " + std::to_string(version) + ", this build reads " +
                           std::to_string(kArchiveVersion));
    if (m.get("dtype") != "float64") throw SchemaError("unsupported dtype '" + m.get("dtype") + "'");

    DatasetArchive a;
    a.station.name = m.get("station_name");
    a.station.latitude = parse_number(m, "station_latitude");
    a.station.longitude = parse_number(m, "station_longitude");
    a.station.elevation = parse_number(m, "station_elevation");
    a.source_hash = m.get("source_hash");
    a.config_fingerprint = static_cast<std::uint32_t>(std::stoul(m.get("config_fingerprint"), nullptr, 16));
    a.config_text = text::read_file((dir / "config.txt").string());

    const std::size_t seq_len = parse_size(m, "seq_len");
    const auto horizons = parse_ints(m.get("horizons"), "horizons");
    std::vector<std::string> names;
    for (auto n : text::split(m.get("feature_names"), ',')) names.emplace_back(n);
    if (seq_len == 0 || horizons.empty() || names.empty()) throw SchemaError("manifest describes an empty dataset");

    auto& d = a.data;
    d.train = read_split(dir, "train", parse_size(m, "train_samples"), seq_len, horizons, names);
    d.test = read_split(dir, "test", parse_size(m, "test_samples"), seq_len, horizons, names);
    d.stats = stats_from_text(text::read_file((dir / "stats.txt").string()));
    d.report.hourly_rows = parse_size(m, "hourly_rows");
    d.report.train_rows = parse_size(m, "train_rows");
    d.report.test_rows = parse_size(m, "test_rows");
    d.report.outliers_dropped_train = parse_size(m, "outliers_dropped_train");
    d.report.outliers_dropped_test = parse_size(m, "outliers_dropped_test");
    d.report.imputed_cells = parse_size(m, "imputed_cells");
    d.report.day_boundary_convention = m.get("day_boundary_convention");
    const auto means = text::split(m.get("imputation_means"), ',');
    if (means.size() != dataset::kFeatureCount) throw SchemaError("imputation means do not cover every column");
    for (std::size_t i = 0; i < means.size(); ++i) {
        const auto v = text::parse_double(means[i]);
        if (!v) throw SchemaError("bad imputation mean");
        d.imputation.mean[i] = *v;
    }
    return a;
}

}  // namespace irradcast::archive
