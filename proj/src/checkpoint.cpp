#include "irradcast/checkpoint.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "irradcast/archive.hpp"
#include "irradcast/error.hpp"
#include "irradcast/text.hpp"

namespace irradcast::checkpoint {

namespace {

constexpr char kMagic[4] = {'I', 'R', 'C', 'K'};

std::string join_ints(const std::vector<int>& v) {
    std::vector<std::string> parts;
    for (int x : v) parts.push_back(std::to_string(x));
    return text::join(parts, ",");
}

std::vector<int> parse_ints(const std::string& s) {
    std::vector<int> out;
    if (s.empty()) return out;
    for (auto p : text::split(s, ',')) {
        const auto v = text::parse_int(text::trim(p));
        if (!v) throw SchemaError("bad integer list '" + s + "'");
        out.push_back(static_cast<int>(*v));
    }
    return out;
}

std::size_t get_size(const archive::KeyValues& kv, std::string_view key) {
    const auto v = text::parse_int(kv.get(key));
    if (!v || *v < 0) throw SchemaError("bad value for '" + std::string(key) + "'");
    return static_cast<std::size_t>(*v);
}

double get_double(const archive::KeyValues& kv, std::string_view key) {
    const auto v = text::parse_double(kv.get(key));
    if (!v) throw SchemaError("bad value for '" + std::string(key) + "'");
    return *v;
}

template <class T>
void put(std::string& out, T v) {
    char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    out.append(buf, sizeof(T));
}

class Reader {
public:
    explicit Reader(std::string_view bytes) : bytes_(bytes) {}
    template <class T>
    T get() {
        need(sizeof(T));
        T v;
        std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return v;
    }
    std::string_view take(std::size_t n) {
        need(n);
        auto s = bytes_.substr(pos_, n);
        pos_ += n;
        return s;
    }
    bool done() const { return pos_ == bytes_.size(); }

private:
    void need(std::size_t n) const {
        if (bytes_.size() - pos_ < n) throw ChecksumError("checkpoint ends early");
    }
    std::string_view bytes_;
    std::size_t pos_ = 0;
};

std::vector<std::size_t> stats_columns(const ModelManifest& m) {
    std::vector<std::size_t> cols;
    for (const auto& name : m.feature_names) {
        const auto it = std::find(m.stats.names.begin(), m.stats.names.end(), name);
        if (it == m.stats.names.end()) throw SchemaError("no normalization statistics for feature '" + name + "'");
        cols.push_back(static_cast<std::size_t>(it - m.stats.names.begin()));
    }
    return cols;
}

}  // namespace

// --- manifest -------------------------------------------------------------

std::string ModelManifest::to_text() const {
    archive::KeyValues kv;
    kv.set("arch", std::string(nn::to_string(arch)));
    kv.set("mode", mode.to_string());
    kv.set("seq_len", std::to_string(seq_len));
    kv.set("hidden", std::to_string(hidden_dim));
    kv.set("layers", std::to_string(num_layers));
    kv.set("horizons", join_ints(dataset_horizons));
    kv.set("output_horizons", join_ints(output_horizons()));
    kv.set("feature_names", text::join(feature_names, ","));
    kv.set("station_name", station.name);
    kv.set("station_latitude", text::format_double(station.latitude));
    kv.set("station_longitude", text::format_double(station.longitude));
    kv.set("station_elevation", text::format_double(station.elevation));
    kv.set("train_years", join_ints(train_years));
    kv.set("test_years", join_ints(test_years));
    kv.set("seed", std::to_string(seed));
    kv.set("config_fingerprint", archive::hex32(config_fingerprint));
    kv.set("dataset_hash", dataset_hash);
    kv.set("epoch", std::to_string(epoch));
    kv.set("test_mse", text::format_double(test_mse));
    for (const auto& [k, v] : archive::KeyValues::parse(archive::stats_to_text(stats)).entries)
        kv.set("stats." + k, v);
    return kv.to_text();
}

ModelManifest ModelManifest::from_text(std::string_view body) {
    const auto kv = archive::KeyValues::parse(body);
    ModelManifest m;
    m.arch = nn::parse_arch(kv.get("arch"));
    m.mode = trainer::HorizonMode::parse(kv.get("mode"));
    m.seq_len = get_size(kv, "seq_len");
    m.hidden_dim = get_size(kv, "hidden");
    m.num_layers = get_size(kv, "layers");
    m.dataset_horizons = parse_ints(kv.get("horizons"));
    for (auto n : text::split(kv.get("feature_names"), ',')) m.feature_names.emplace_back(n);
    m.station.name = kv.get("station_name");
    m.station.latitude = get_double(kv, "station_latitude");
    m.station.longitude = get_double(kv, "station_longitude");
    m.station.elevation = get_double(kv, "station_elevation");
    m.train_years = parse_ints(kv.get("train_years"));
    m.test_years = parse_ints(kv.get("test_years"));
    m.seed = std::stoull(kv.get("seed"));
    m.config_fingerprint = static_cast<std::uint32_t>(std::stoul(kv.get("config_fingerprint"), nullptr, 16));
    m.dataset_hash = kv.get("dataset_hash");
    m.epoch = get_size(kv, "epoch");
    m.test_mse = get_double(kv, "test_mse");
    archive::KeyValues st;
    for (const auto& [k, v] : kv.entries)
        if (k.starts_with("stats.")) st.set(k.substr(6), v);
    m.stats = archive::stats_from_text(st.to_text());
    if (m.output_horizons() != parse_ints(kv.get("output_horizons")))
        throw SchemaError("output horizons disagree with the mode");
    return m;
}

// --- binary format -----------------------------------------------------------

std::string serialize(const Forecaster& f) {
    f.params.validate();
    std::string out(kMagic, 4);
    put<std::uint32_t>(out, kCheckpointVersion);
    const std::string manifest = f.manifest.to_text();
    put<std::uint64_t>(out, manifest.size());
    out += manifest;
    const auto params = f.params.parameters();
    put<std::uint32_t>(out, static_cast<std::uint32_t>(params.size()));
    for (const auto& p : params) {
        put<std::uint32_t>(out, static_cast<std::uint32_t>(p.name.size()));
        out += p.name;
        const auto& shape = p.tensor->shape();
        put<std::uint32_t>(out, static_cast<std::uint32_t>(shape.size()));
        for (auto d : shape) put<std::uint64_t>(out, d);
        out.append(reinterpret_cast<const char*>(p.tensor->data()), p.tensor->size() * sizeof(double));
    }
    put<std::uint32_t>(out, text::crc32(out));
    return out;
}

Forecaster deserialize(std::string_view bytes) {
    if (bytes.size() < 8 || std::memcmp(bytes.data(), kMagic, 4) != 0)
        throw ChecksumError("not a checkpoint file (bad magic)");
    std::uint32_t version;
    std::memcpy(&version, bytes.data() + 4, sizeof version);
    if (version != kCheckpointVersion)
        throw VersionError("checkpoint format version " + std::to_string(version) + ", this build reads " +
                           std::to_string(kCheckpointVersion));
    if (bytes.size() < 12) throw ChecksumError("checkpoint ends early");
    const auto body = bytes.substr(0, bytes.size() - 4);
    std::uint32_t stored;
    std::memcpy(&stored, bytes.data() + body.size(), sizeof stored);
    if (stored != text::crc32(body)) throw ChecksumError("checkpoint checksum mismatch (corrupt or truncated)");

    Reader r(body.substr(8));
    Forecaster f;
    const auto manifest_len = r.get<std::uint64_t>();
    f.manifest = ModelManifest::from_text(r.take(manifest_len));
    const auto& m = f.manifest;

    nn::ModelShape shape;
    shape.arch = m.arch;
    shape.input_dim = m.feature_names.size();
    shape.hidden_dim = m.hidden_dim;
    shape.output_dim = m.output_horizons().size();
    shape.num_layers = m.num_layers;
    f.params = nn::make_zero_params(shape);
    auto params = f.params.parameters();
    const auto count = r.get<std::uint32_t>();
    if (count != params.size())
        throw SchemaError("checkpoint holds " + std::to_string(count) + " tensors, architecture needs " +
                          std::to_string(params.size()));
    for (auto& p : params) {
        const std::string name(r.take(r.get<std::uint32_t>()));
        if (name != p.name) throw SchemaError("expected tensor '" + p.name + "', found '" + name + "'");
        std::vector<std::size_t> dims(r.get<std::uint32_t>());
        for (auto& d : dims) d = r.get<std::uint64_t>();
        if (dims != p.tensor->shape()) throw SchemaError("tensor '" + name + "' has an unexpected shape");
        const auto raw = r.take(p.tensor->size() * sizeof(double));
        std::memcpy(p.tensor->data(), raw.data(), raw.size());
    }
    if (!r.done()) throw SchemaError("trailing bytes after the last tensor");
    return f;
}

void save_checkpoint(const std::filesystem::path& path, const Forecaster& f) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    text::write_file(path.string(), serialize(f));
}

Forecaster load_checkpoint(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw IoError("checkpoint " + path.string() + " does not exist");
    return deserialize(text::read_file(path.string()));
}

// --- inference -----------------------------------------------------------------

nn::Tensor predict_normalized(const Forecaster& f, const nn::Tensor& inputs) {
    const auto& m = f.manifest;
    if (inputs.rank() != 3 || inputs.dim(1) != m.seq_len || inputs.dim(2) != m.feature_names.size())
        throw SchemaError("model expects windows of " + std::to_string(m.seq_len) + " x " +
                          std::to_string(m.feature_names.size()) + ", got " + inputs.shape_string());
    nn::Tensor out = nn::sequence_predict(f.params, inputs, m.mode.output_mode());
    for (auto& v : out.values()) v = m.stats.denormalize_target(v);
    return out;
}

std::vector<double> predict(const Forecaster& f, const nn::Tensor& raw_window) {
    const auto& m = f.manifest;
    if (raw_window.rank() != 2 || raw_window.rows() != m.seq_len || raw_window.cols() != m.feature_names.size())
        throw SchemaError("window must be " + std::to_string(m.seq_len) + " hours x " +
                          std::to_string(m.feature_names.size()) + " features, got " + raw_window.shape_string());
    const auto cols = stats_columns(m);
    nn::Tensor x({1, m.seq_len, cols.size()});
    for (std::size_t t = 0; t < m.seq_len; ++t)
        for (std::size_t k = 0; k < cols.size(); ++k)
            x.at(0, t, k) = (raw_window.at(t, k) - m.stats.location[cols[k]]) / m.stats.scale[cols[k]];
    const nn::Tensor y = predict_normalized(f, x);
    return {y.values().begin(), y.values().end()};
}

nn::Tensor parse_window_csv(std::string_view csv, const ModelManifest& manifest) {
    std::vector<std::string_view> rows;
    for (auto line : text::lines(csv))
        if (!text::trim(line).empty()) rows.push_back(line);
    if (rows.empty()) throw SchemaError("window CSV is empty");
    const auto header = text::split(rows[0], ',');
    if (header.empty() || text::trim(header[0]) != "timestamp")
        throw SchemaError("window CSV must start with a timestamp column");
    const std::size_t f = manifest.feature_names.size();
    std::vector<std::size_t> where(f, header.size());
    for (std::size_t c = 1; c < header.size(); ++c) {
        const auto name = text::trim(header[c]);
        const auto it = std::find(manifest.feature_names.begin(), manifest.feature_names.end(), name);
        if (it == manifest.feature_names.end())
            throw SchemaError("window column '" + std::string(name) + "' is not a model feature");
        where[static_cast<std::size_t>(it - manifest.feature_names.begin())] = c;
    }
    for (std::size_t k = 0; k < f; ++k)
        if (where[k] == header.size()) throw SchemaError("window lacks feature '" + manifest.feature_names[k] + "'");
    if (rows.size() - 1 != manifest.seq_len)
        throw SchemaError("window has " + std::to_string(rows.size() - 1) + " rows, model needs " +
                          std::to_string(manifest.seq_len));
    nn::Tensor w = nn::Tensor::matrix(manifest.seq_len, f);
    for (std::size_t t = 0; t < manifest.seq_len; ++t) {
        const auto cells = text::split(rows[t + 1], ',');
        if (cells.size() != header.size()) throw SchemaError("window row " + std::to_string(t + 1) + " has wrong width");
        parse_iso8601(text::trim(cells[0]));
        for (std::size_t k = 0; k < f; ++k) {
            const auto v = text::parse_double(text::trim(cells[where[k]]));
            if (!v || !std::isfinite(*v))
                throw SchemaError("window row " + std::to_string(t + 1) + " has a bad '" + manifest.feature_names[k] +
                                  "' value");
            w.at(t, k) = *v;
        }
    }
    return w;
}

std::string window_csv(const dataset::WindowedDataset& ds, const dataset::NormalizationStats& stats, std::size_t i) {
    if (i >= ds.size()) throw SchemaError("sample " + std::to_string(i) + " out of range");
    std::vector<std::size_t> cols;
    for (const auto& name : ds.feature_names) {
        const auto it = std::find(stats.names.begin(), stats.names.end(), name);
        if (it == stats.names.end()) throw SchemaError("no normalization statistics for feature '" + name + "'");
        cols.push_back(static_cast<std::size_t>(it - stats.names.begin()));
    }
    std::string out = "timestamp," + text::join(ds.feature_names, ",") + "\n";
    for (std::size_t t = 0; t < ds.seq_len; ++t) {
        const Timestamp ts = ds.window_end[i].plus_hours(-static_cast<std::int64_t>(ds.seq_len - 1 - t));
        out += to_iso8601(ts);
        for (std::size_t k = 0; k < cols.size(); ++k)
            out += "," + text::format_double(ds.inputs.at(i, t, k) * stats.scale[cols[k]] + stats.location[cols[k]]);
        out += "\n";
    }
    return out;
}

}  // namespace irradcast::checkpoint
