#include "irradcast/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "irradcast/error.hpp"
#include "irradcast/text.hpp"

namespace irradcast::dataset {

namespace {

using surfrad::Channel;
using surfrad::kChannelCount;

constexpr double kPi = 3.14159265358979323846;

std::vector<std::size_t> all_columns() {
    std::vector<std::size_t> c(kFeatureCount);
    for (std::size_t i = 0; i < kFeatureCount; ++i) c[i] = i;
    return c;
}

std::vector<std::size_t> or_all(const std::vector<std::size_t>& columns) {
    return columns.empty() ? all_columns() : columns;
}

bool contains(const std::vector<int>& v, int x) { return std::find(v.begin(), v.end(), x) != v.end(); }

std::string join_ints(const std::vector<int>& v) {
    std::vector<std::string> parts;
    for (int x : v) parts.push_back(std::to_string(x));
    return text::join(parts, ",");
}

}  // namespace

const std::vector<std::string>& feature_names() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> n;
        for (std::size_t c = 0; c < kChannelCount; ++c) n.emplace_back(surfrad::channel_name(surfrad::channel_at(c)));
        n.emplace_back("kt");
        n.emplace_back("cos_zenith");
        return n;
    }();
    return names;
}

std::optional<std::size_t> feature_index(std::string_view name) {
    const auto& names = feature_names();
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return i;
    return std::nullopt;
}

// --- hourly aggregation ---------------------------------------------------

HourlyAggregator::HourlyAggregator(surfrad::StationMeta site, AggregateOptions options,
                                   const std::vector<clearsky::ClearSkySample>* precomputed)
    : site_(std::move(site)), options_(options), precomputed_(precomputed) {
    if (options_.max_missing_minutes < 0 || options_.max_missing_minutes > 60)
        throw ConfigError("max_missing_minutes must lie in [0, 60]");
    options_.atmosphere.validate();
}

void HourlyAggregator::add(const surfrad::ObservationRecord& rec) {
    const Timestamp label = ceil_hour(rec.timestamp);
    Bucket& b = buckets_[label.minutes];
    const auto offset = static_cast<std::size_t>(rec.timestamp.minutes - (label.minutes - 59));
    ++b.records;
    for (std::size_t c = 0; c < kChannelCount; ++c) {
        const Channel ch = surfrad::channel_at(c);
        if (options_.qc == QcPolicy::drop_flagged && rec.channels[c].qc != 0) continue;
        const auto v = rec.value(ch);
        if (!v) continue;
        b.sum[c] += *v;
        ++b.count[c];
        if (ch == Channel::dw_solar) {
            b.ghi[offset] = *v;
            b.ghi_present[offset] = true;
        }
    }
}

std::optional<clearsky::ClearSkySample> HourlyAggregator::lookup_clear(Timestamp t) const {
    auto it = std::lower_bound(precomputed_->begin(), precomputed_->end(), t,
                               [](const clearsky::ClearSkySample& s, Timestamp x) { return s.timestamp < x; });
    if (it == precomputed_->end() || it->timestamp != t) return std::nullopt;
    return *it;
}

HourlyTable HourlyAggregator::finish() {
    HourlyTable table;
    table.rows.reserve(buckets_.size());
    const int max_missing = options_.max_missing_minutes;
    for (const auto& [label_minutes, b] : buckets_) {
        HourlyRow row;
        row.hour = Timestamp{label_minutes};
        for (std::size_t c = 0; c < kChannelCount; ++c) {
            const bool missing = b.count[c] == 0 || 60 - b.count[c] > max_missing;
            row.missing[c] = missing;
            row.values[c] = missing ? 0.0 : b.sum[c] / b.count[c];
        }

        clearsky::AtmosphericParams atmo = options_.atmosphere;
        const std::size_t p = surfrad::index(Channel::pressure);
        if (options_.use_measured_pressure && !row.missing[p] && row.values[p] > 0.0) atmo.surface_pressure = row.values[p];

        std::array<std::optional<double>, 60> minute_kt{};
        double clear_sum = 0.0, cos_sum = 0.0, zen_max = 0.0;
        bool night_minute = false;
        int ghi_missing = 0;
        for (std::size_t m = 0; m < 60; ++m) {
            const Timestamp t{label_minutes - 59 + static_cast<std::int64_t>(m)};
            double clear_ghi = 0.0, zenith = 180.0;
            if (precomputed_) {
                if (auto s = lookup_clear(t)) {
                    clear_ghi = s->irradiance.ghi;
                    zenith = s->zenith;
                }
            } else {
                const auto pos = clearsky::solar_position(t, site_);
                clear_ghi = clearsky::bird_clear_sky(pos, atmo).ghi;
                zenith = pos.zenith;
            }
            clear_sum += clear_ghi;
            cos_sum += std::cos(zenith * kPi / 180.0);
            zen_max = std::max(zen_max, zenith);
            if (!b.ghi_present[m]) ++ghi_missing;
            const auto kt = compute_kt(b.ghi_present[m] ? b.ghi[m] : 0.0, clear_ghi, options_.eps_clear);
            if (!kt) night_minute = true;
            else if (b.ghi_present[m]) minute_kt[m] = kt;
        }
        row.ghi_clear = clear_sum / 60.0;
        row.zenith = zen_max;
        row.values[kCosZenithColumn] = cos_sum / 60.0;

        const bool daylight = !night_minute && zen_max < options_.zenith_max;
        if (!daylight) {
            row.values[kKtColumn] = 0.0;
        } else if (ghi_missing == 0) {
            row.values[kKtColumn] = *average_kt_window(minute_kt);
            row.kt_valid = true;
        } else if (ghi_missing <= max_missing) {
            double sum = 0.0;
            for (const auto& k : minute_kt)
                if (k) sum += *k;
            row.values[kKtColumn] = sum / (60 - ghi_missing);
            row.kt_valid = true;
        } else {
            row.missing[kKtColumn] = true;
        }
        row.kt = row.values[kKtColumn];
        table.rows.push_back(row);
    }
    buckets_.clear();
    return table;
}

HourlyTable hourly_aggregate(const surfrad::ObservationSeries& series, const AggregateOptions& options,
                             const std::vector<clearsky::ClearSkySample>* precomputed) {
    HourlyAggregator agg(series.station, options, precomputed);
    for (const auto& rec : series.records) agg.add(rec);
    return agg.finish();
}

std::optional<double> compute_kt(double ghi_obs, double ghi_clear, double eps_clear) {
    if (!(ghi_clear > eps_clear) || !std::isfinite(ghi_obs)) return std::nullopt;
    return ghi_obs / ghi_clear;
}

std::optional<double> average_kt_window(std::span<const std::optional<double>> kt_minutes) {
    if (kt_minutes.size() != 60)
        throw ShapeError("average_kt_window needs 60 minute values, got " + std::to_string(kt_minutes.size()));
    double sum = 0.0;
    for (const auto& k : kt_minutes) {
        if (!k) return std::nullopt;
        sum += *k;
    }
    return sum / 60.0;
}

// --- filtering and splitting ----------------------------------------------

bool is_night(const HourlyRow& row, double eps_clear, double zenith_max) {
    return !(row.ghi_clear > eps_clear) || row.zenith >= zenith_max;
}

HourlyTable filter_night(const HourlyTable& table, double eps_clear, double zenith_max) {
    HourlyTable out;
    for (const auto& r : table.rows)
        if (!is_night(r, eps_clear, zenith_max)) out.rows.push_back(r);
    return out;
}

std::pair<HourlyTable, HourlyTable> split_by_year(const HourlyTable& table, const std::vector<int>& train_years,
                                                  const std::vector<int>& test_years) {
    if (train_years.empty() || test_years.empty()) throw ConfigError("train and test years must both be given");
    for (int y : train_years)
        if (contains(test_years, y))
            throw ConfigError("year " + std::to_string(y) + " requested for both training and testing");
    std::pair<HourlyTable, HourlyTable> out;
    std::set<int> seen;
    for (const auto& r : table.rows) {
        const int y = year_of(r.hour);
        if (contains(train_years, y)) {
            out.first.rows.push_back(r);
            seen.insert(y);
        } else if (contains(test_years, y)) {
            out.second.rows.push_back(r);
            seen.insert(y);
        }
    }
    for (const auto* years : {&train_years, &test_years})
        for (int y : *years)
            if (!seen.count(y)) throw MissingYear("no hourly rows for requested year " + std::to_string(y));
    return out;
}

// --- imputation -------------------------------------------------------------

ImputationMeans fit_imputation(const HourlyTable& train, const std::vector<std::size_t>& columns) {
    ImputationMeans m;
    for (std::size_t c : or_all(columns)) {
        double sum = 0.0;
        std::size_t n = 0;
        for (const auto& r : train.rows) {
            if (r.missing[c]) continue;
            sum += r.values[c];
            ++n;
        }
        if (n == 0) throw ChannelUnusable("column '" + feature_names()[c] + "' has no values in the training split");
        m.mean[c] = sum / static_cast<double>(n);
    }
    return m;
}

HourlyTable impute_missing(const HourlyTable& table, const ImputationMeans& means, int max_gap) {
    HourlyTable out = table;
    auto& rows = out.rows;
    const std::size_t n = rows.size();
    for (std::size_t c = 0; c < kFeatureCount; ++c) {
        std::size_t i = 0;
        while (i < n) {
            if (!table.rows[i].missing[c]) {
                ++i;
                continue;
            }
            std::size_t end = i;
            while (end < n && table.rows[end].missing[c]) ++end;
            const std::size_t len = end - i;
            const bool bracketed = i > 0 && end < n &&
                                   rows[end].hour.minutes - rows[i - 1].hour.minutes ==
                                       static_cast<std::int64_t>(len + 1) * 60;
            if (bracketed && len <= static_cast<std::size_t>(max_gap)) {
                const double a = table.rows[i - 1].values[c];
                const double b = table.rows[end].values[c];
                for (std::size_t k = 0; k < len; ++k) {
                    rows[i + k].values[c] = a + (b - a) * static_cast<double>(k + 1) / static_cast<double>(len + 1);
                    rows[i + k].fill[c] = FillSource::interpolated;
                    rows[i + k].missing[c] = false;
                }
            } else {
                for (std::size_t k = i; k < end; ++k) {
                    rows[k].values[c] = means.mean[c];
                    rows[k].fill[c] = FillSource::column_mean;
                    rows[k].missing[c] = false;
                }
            }
            i = end;
        }
    }
    for (auto& r : rows) r.kt = r.values[kKtColumn];
    return out;
}

// --- normalization ----------------------------------------------------------

std::string_view to_string(Scheme s) { return s == Scheme::zscore ? "zscore" : "minmax"; }

Scheme parse_scheme(std::string_view s) {
    if (s == "zscore") return Scheme::zscore;
    if (s == "minmax") return Scheme::minmax;
    throw ConfigError("unknown normalization scheme '" + std::string(s) + "'");
}

NormalizationStats fit_normalization(const HourlyTable& train, Scheme scheme, const std::vector<std::size_t>& columns) {
    NormalizationStats st;
    st.scheme = scheme;
    st.names = feature_names();
    st.location.assign(kFeatureCount, 0.0);
    st.scale.assign(kFeatureCount, 1.0);
    const auto checked = or_all(columns);

    auto fit = [&](auto&& values_of, double& loc, double& scale) {
        std::vector<double> v;
        values_of(v);
        if (v.empty()) return false;
        if (scheme == Scheme::zscore) {
            double sum = 0.0;
            for (double x : v) sum += x;
            loc = sum / static_cast<double>(v.size());
            double sq = 0.0;
            for (double x : v) sq += (x - loc) * (x - loc);
            scale = std::sqrt(sq / static_cast<double>(v.size()));
        } else {
            const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
            loc = *lo;
            scale = *hi - *lo;
        }
        return true;
    };

    for (std::size_t c = 0; c < kFeatureCount; ++c) {
        double loc = 0.0, scale = 0.0;
        const bool any = fit(
            [&](std::vector<double>& v) {
                for (const auto& r : train.rows)
                    if (!r.missing[c]) v.push_back(r.values[c]);
            },
            loc, scale);
        const bool required = std::find(checked.begin(), checked.end(), c) != checked.end();
        if (!required) continue;
        if (!any || !(scale > 0.0) || !std::isfinite(scale))
            throw DegenerateFeature("feature '" + st.names[c] + "' has zero spread in the training split");
        st.location[c] = loc;
        st.scale[c] = scale;
    }

    double tloc = 0.0, tscale = 0.0;
    const bool any_target = fit(
        [&](std::vector<double>& v) {
            for (const auto& r : train.rows)
                if (r.kt_valid) v.push_back(r.kt);
        },
        tloc, tscale);
    if (any_target) {
        if (!(tscale > 0.0)) throw DegenerateFeature("target clear-sky index has zero spread in the training split");
        st.target_location = tloc;
        st.target_scale = tscale;
    }
    return st;
}

HourlyTable normalize(const HourlyTable& table, const NormalizationStats& stats) {
    if (stats.location.size() != kFeatureCount || stats.scale.size() != kFeatureCount)
        throw SchemaError("normalization stats do not cover the hourly columns");
    HourlyTable out = table;
    for (auto& r : out.rows)
        for (std::size_t c = 0; c < kFeatureCount; ++c) r.values[c] = (r.values[c] - stats.location[c]) / stats.scale[c];
    return out;
}

std::vector<double> normalize(std::span<const double> values, const NormalizationStats& stats) {
    if (values.size() != stats.location.size()) throw SchemaError("value count does not match normalization stats");
    for (double s : stats.scale)
        if (!(s > 0.0)) throw DegenerateFeature("normalization scale must be positive");
    std::vector<double> out(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) out[i] = (values[i] - stats.location[i]) / stats.scale[i];
    return out;
}

std::vector<double> denormalize(std::span<const double> values, const NormalizationStats& stats) {
    if (values.size() != stats.location.size()) throw SchemaError("value count does not match normalization stats");
    std::vector<double> out(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) out[i] = values[i] * stats.scale[i] + stats.location[i];
    return out;
}

// --- outliers -----------------------------------------------------------------

std::array<std::pair<double, double>, kFeatureCount> OutlierConfig::default_bounds() {
    constexpr double inf = std::numeric_limits<double>::infinity();
    return {{
        {0.0, 1500.0},      // dw_solar
        {-50.0, 1000.0},    // uw_solar
        {-50.0, 1500.0},    // direct_n
        {-50.0, 1000.0},    // diffuse
        {0.0, 700.0},       // dw_ir
        {180.0, 350.0},     // dw_casetemp
        {180.0, 350.0},     // dw_dometemp
        {0.0, 900.0},       // uw_ir
        {180.0, 350.0},     // uw_casetemp
        {180.0, 350.0},     // uw_dometemp
        {-50.0, 1000.0},    // uvb
        {-50.0, 1000.0},    // par
        {-100.0, 1500.0},   // netsolar
        {-500.0, 300.0},    // netir
        {-500.0, 1500.0},   // netrad
        {-60.0, 60.0},      // air_temp_10m
        {0.0, 100.0},       // rh
        {0.0, 75.0},        // windspd
        {0.0, 360.0},       // winddir
        {500.0, 1100.0},    // pressure
        {0.0, inf},         // kt (capped separately)
        {-1.0, 1.0},        // cos_zenith
    }};
}

OutlierResult remove_outliers(const HourlyTable& table, const NormalizationStats& stats, const OutlierConfig& config,
                              const std::vector<std::size_t>& columns) {
    if (stats.scheme != Scheme::zscore) throw ConfigError("outlier screening needs z-score statistics");
    const auto screened = or_all(columns);
    OutlierResult res;
    for (const auto& r : table.rows) {
        bool drop = r.kt_valid && r.kt > config.kt_cap;
        for (std::size_t i = 0; i < screened.size() && !drop; ++i) {
            const std::size_t c = screened[i];
            if (r.missing[c]) continue;
            const double v = r.values[c];
            if (v < config.bounds[c].first || v > config.bounds[c].second) drop = true;
            else if (stats.scale[c] > 0.0 && std::abs((v - stats.location[c]) / stats.scale[c]) > config.z_max)
                drop = true;
        }
        if (drop) ++res.dropped;
        else res.table.rows.push_back(r);
    }
    return res;
}

// --- windowing ----------------------------------------------------------------

WindowedDataset WindowedDataset::subset(std::span<const std::size_t> indices) const {
    WindowedDataset out;
    out.horizons = horizons;
    out.feature_names = feature_names;
    out.seq_len = seq_len;
    const std::size_t per_input = seq_len * feature_count();
    const std::size_t h = horizons.size();
    out.inputs = nn::Tensor({indices.size(), seq_len, feature_count()});
    out.targets = nn::Tensor::matrix(indices.size(), h);
    out.ghi_clear = nn::Tensor::matrix(indices.size(), h);
    for (std::size_t k = 0; k < indices.size(); ++k) {
        const std::size_t i = indices[k];
        if (i >= size()) throw ShapeError("subset index out of range");
        std::copy_n(inputs.data() + i * per_input, per_input, out.inputs.data() + k * per_input);
        std::copy_n(targets.data() + i * h, h, out.targets.data() + k * h);
        std::copy_n(ghi_clear.data() + i * h, h, out.ghi_clear.data() + k * h);
        out.window_end.push_back(window_end[i]);
        out.last_kt.push_back(last_kt[i]);
    }
    return out;
}

WindowedDataset build_windows(const HourlyTable& table, std::size_t seq_len, const std::vector<int>& horizons,
                              const std::vector<std::size_t>& columns) {
    if (seq_len == 0) throw ConfigError("sequence length must be at least 1");
    if (horizons.empty()) throw ConfigError("at least one horizon is required");
    for (int h : horizons)
        if (h < 1) throw ConfigError("horizons must be positive hours");
    const auto cols = or_all(columns);
    for (std::size_t c : cols)
        if (c >= kFeatureCount) throw ConfigError("feature column out of range");

    const auto& rows = table.rows;
    const std::size_t n = rows.size();
    const auto max_h = static_cast<std::size_t>(*std::max_element(horizons.begin(), horizons.end()));
    if (n < seq_len + max_h)
        throw InsufficientData("table has " + std::to_string(n) + " rows, windows need at least " +
                               std::to_string(seq_len + max_h));

    std::vector<std::size_t> ends;
    const auto span_minutes = static_cast<std::int64_t>(seq_len - 1) * 60;
    for (std::size_t e = seq_len - 1; e < n; ++e) {
        if (rows[e].hour.minutes - rows[e + 1 - seq_len].hour.minutes != span_minutes) continue;
        bool ok = true;
        for (int h : horizons) {
            const std::size_t idx = e + static_cast<std::size_t>(h);
            if (idx >= n || rows[idx].hour != rows[e].hour.plus_hours(h) || !rows[idx].kt_valid) {
                ok = false;
                break;
            }
        }
        if (ok) ends.push_back(e);
    }

    WindowedDataset ds;
    ds.seq_len = seq_len;
    ds.horizons = horizons;
    for (std::size_t c : cols) ds.feature_names.push_back(feature_names()[c]);
    const std::size_t f = cols.size();
    ds.inputs = nn::Tensor({ends.size(), seq_len, f});
    ds.targets = nn::Tensor::matrix(ends.size(), horizons.size());
    ds.ghi_clear = nn::Tensor::matrix(ends.size(), horizons.size());
    for (std::size_t s = 0; s < ends.size(); ++s) {
        const std::size_t e = ends[s];
        for (std::size_t t = 0; t < seq_len; ++t) {
            const HourlyRow& r = rows[e + 1 - seq_len + t];
            for (std::size_t k = 0; k < f; ++k) ds.inputs.at(s, t, k) = r.values[cols[k]];
        }
        for (std::size_t j = 0; j < horizons.size(); ++j) {
            const HourlyRow& r = rows[e + static_cast<std::size_t>(horizons[j])];
            ds.targets.at(s, j) = r.kt;
            ds.ghi_clear.at(s, j) = r.ghi_clear;
        }
        ds.window_end.push_back(rows[e].hour);
        ds.last_kt.push_back(rows[e].kt);
    }
    return ds;
}

// --- pipeline ---------------------------------------------------------------

std::string PrepareConfig::to_text() const {
    std::string s;
    s += "seq_len = " + std::to_string(seq_len) + "\n";
    s += "horizons = " + join_ints(horizons) + "\n";
    s += "train_years = " + join_ints(train_years) + "\n";
    s += "test_years = " + join_ints(test_years) + "\n";
    s += "max_missing_minutes = " + std::to_string(aggregate.max_missing_minutes) + "\n";
    s += "qc_policy = " + std::string(aggregate.qc == QcPolicy::keep ? "keep" : "drop_flagged") + "\n";
    s += "eps_clear = " + text::format_double(aggregate.eps_clear) + "\n";
    s += "zenith_max = " + text::format_double(aggregate.zenith_max) + "\n";
    s += "aod = " + text::format_double(aggregate.atmosphere.aerosol_optical_depth) + "\n";
    s += "ozone = " + text::format_double(aggregate.atmosphere.ozone) + "\n";
    s += "precipitable_water = " + text::format_double(aggregate.atmosphere.precipitable_water) + "\n";
    s += "pressure = " + text::format_double(aggregate.atmosphere.surface_pressure) + "\n";
    s += "albedo = " + text::format_double(aggregate.atmosphere.ground_albedo) + "\n";
    s += "use_measured_pressure = " + std::string(aggregate.use_measured_pressure ? "true" : "false") + "\n";
    s += "max_interp_gap = " + std::to_string(max_interp_gap) + "\n";
    s += "z_max = " + text::format_double(outliers.z_max) + "\n";
    s += "kt_cap = " + text::format_double(outliers.kt_cap) + "\n";
    s += "scheme = " + std::string(to_string(scheme)) + "\n";
    std::vector<std::string> ex(exclude_features.begin(), exclude_features.end());
    s += "exclude_features = " + text::join(ex, ",") + "\n";
    return s;
}

std::uint32_t PrepareConfig::fingerprint() const { return text::crc32(to_text()); }

PreparedDataset prepare_from_hourly(const HourlyTable& hourly, const PrepareConfig& config) {
    std::vector<std::size_t> columns;
    for (std::size_t c = 0; c < kFeatureCount; ++c) {
        const auto& name = feature_names()[c];
        if (std::find(config.exclude_features.begin(), config.exclude_features.end(), name) ==
            config.exclude_features.end())
            columns.push_back(c);
    }
    for (const auto& name : config.exclude_features)
        if (!feature_index(name)) throw ConfigError("unknown feature '" + name + "' in exclude_features");
    if (columns.empty()) throw ConfigError("every feature is excluded");

    PreparedDataset out;
    out.report.hourly_rows = hourly.rows.size();
    auto [train, test] = split_by_year(hourly, config.train_years, config.test_years);

    out.imputation = fit_imputation(train, columns);
    auto count_missing = [](const HourlyTable& t) {
        std::size_t n = 0;
        for (const auto& r : t.rows)
            for (bool m : r.missing) n += m;
        return n;
    };
    out.report.imputed_cells = count_missing(train) + count_missing(test);
    train = impute_missing(train, out.imputation, config.max_interp_gap);
    test = impute_missing(test, out.imputation, config.max_interp_gap);

    const NormalizationStats screen = fit_normalization(train, Scheme::zscore, columns);
    auto train_clean = remove_outliers(train, screen, config.outliers, columns);
    auto test_clean = remove_outliers(test, screen, config.outliers, columns);
    out.report.outliers_dropped_train = train_clean.dropped;
    out.report.outliers_dropped_test = test_clean.dropped;
    out.report.train_rows = train_clean.table.rows.size();
    out.report.test_rows = test_clean.table.rows.size();

    out.stats = fit_normalization(train_clean.table, config.scheme, columns);
    out.train = build_windows(normalize(train_clean.table, out.stats), config.seq_len, config.horizons, columns);
    out.test = build_windows(normalize(test_clean.table, out.stats), config.seq_len, config.horizons, columns);
    out.report.day_boundary_convention =
        "targets: daylight hours only; inputs: contiguous hourly history including night rows with kt=0";
    return out;
}

PreparedDataset prepare(const surfrad::ObservationSeries& series, const PrepareConfig& config,
                        const std::vector<clearsky::ClearSkySample>* precomputed) {
    return prepare_from_hourly(hourly_aggregate(series, config.aggregate, precomputed), config);
}

}  // namespace irradcast::dataset
