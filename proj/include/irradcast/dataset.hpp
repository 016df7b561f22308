#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "irradcast/clearsky.hpp"
#include "irradcast/surfrad.hpp"
#include "irradcast/tensor.hpp"
#include "irradcast/time.hpp"

namespace irradcast::dataset {

/// Hourly columns: the twenty channels, the hourly clear-sky index, and the
/// hour's mean cos(zenith).
inline constexpr std::size_t kFeatureCount = surfrad::kChannelCount + 2;
inline constexpr std::size_t kKtColumn = surfrad::kChannelCount;
inline constexpr std::size_t kCosZenithColumn = surfrad::kChannelCount + 1;

const std::vector<std::string>& feature_names();
std::optional<std::size_t> feature_index(std::string_view name);

enum class FillSource : std::uint8_t { measured, interpolated, column_mean };
enum class QcPolicy { keep, drop_flagged };

struct HourlyRow {
    Timestamp hour;  // end of the 60-minute window (minutes hour-59 .. hour)
    std::array<double, kFeatureCount> values{};
    std::array<bool, kFeatureCount> missing{};
    std::array<FillSource, kFeatureCount> fill{};
    double ghi_clear = 0.0;  // mean modeled clear-sky GHI over the window, W/m^2
    double zenith = 180.0;   // largest solar zenith within the window
    double kt = 0.0;         // clear-sky index fed to the model (0 at night), unnormalized
    bool kt_valid = false;   // measured over a fully daylit window: usable as a target
};

struct HourlyTable {
    std::vector<HourlyRow> rows;  // strictly increasing hours
};

struct AggregateOptions {
    /// An hour with more missing minutes than this is missing for that channel.
    int max_missing_minutes = 30;
    QcPolicy qc = QcPolicy::keep;
    double eps_clear = 20.0;   // W/m^2; clear-sky GHI at or below is night
    double zenith_max = 85.0;  // degrees; hours reaching it are night
    clearsky::AtmosphericParams atmosphere;
    /// Use the hour's measured station pressure for the clear-sky model.
    bool use_measured_pressure = true;
};

/// Streams time-ordered minute records (possibly from several files) into
/// hourly rows. Clear-sky irradiance comes from `precomputed` minute samples
/// when given, otherwise from the Bird model at the station.
class HourlyAggregator {
public:
    HourlyAggregator(surfrad::StationMeta site, AggregateOptions options,
                     const std::vector<clearsky::ClearSkySample>* precomputed = nullptr);

    void add(const surfrad::ObservationRecord& rec);
    HourlyTable finish();

private:
    struct Bucket {
        std::array<double, surfrad::kChannelCount> sum{};
        std::array<int, surfrad::kChannelCount> count{};
        std::array<double, 60> ghi{};
        std::array<bool, 60> ghi_present{};
        int records = 0;
    };
    std::optional<clearsky::ClearSkySample> lookup_clear(Timestamp t) const;

    surfrad::StationMeta site_;
    AggregateOptions options_;
    const std::vector<clearsky::ClearSkySample>* precomputed_;
    std::map<std::int64_t, Bucket> buckets_;
};

HourlyTable hourly_aggregate(const surfrad::ObservationSeries& series, const AggregateOptions& options = {},
                             const std::vector<clearsky::ClearSkySample>* precomputed = nullptr);

/// Clear-sky index; nullopt (the invalid marker) when ghi_clear <= eps_clear.
std::optional<double> compute_kt(double ghi_obs, double ghi_clear, double eps_clear = 20.0);

/// Mean of sixty minute clear-sky indices; invalid if any minute is invalid.
std::optional<double> average_kt_window(std::span<const std::optional<double>> kt_minutes);

bool is_night(const HourlyRow& row, double eps_clear = 20.0, double zenith_max = 85.0);
HourlyTable filter_night(const HourlyTable& table, double eps_clear = 20.0, double zenith_max = 85.0);

/// Rows whose calendar year is in the requested sets. Throws ConfigError
/// when the sets overlap and MissingYear when a year has no rows.
std::pair<HourlyTable, HourlyTable> split_by_year(const HourlyTable& table, const std::vector<int>& train_years,
                                                  const std::vector<int>& test_years);

struct ImputationMeans {
    std::array<double, kFeatureCount> mean{};
};
/// Column means over present training values. Throws ChannelUnusable when
/// a column has no present value.
/// Only `columns` are checked (all columns when empty); others get mean 0.
ImputationMeans fit_imputation(const HourlyTable& train, const std::vector<std::size_t>& columns = {});
/// Gaps of at most max_gap consecutive hours between present neighbours are
/// linearly interpolated; everything else takes the training mean.
HourlyTable impute_missing(const HourlyTable& table, const ImputationMeans& means, int max_gap = 3);

enum class Scheme { zscore, minmax };
std::string_view to_string(Scheme s);
Scheme parse_scheme(std::string_view s);

struct NormalizationStats {
    Scheme scheme = Scheme::zscore;
    std::vector<std::string> names;
    std::vector<double> location;
    std::vector<double> scale;
    double target_location = 0.0;
    double target_scale = 1.0;

    double normalize_target(double kt) const { return (kt - target_location) / target_scale; }
    double denormalize_target(double z) const { return z * target_scale + target_location; }
};

/// Per-column statistics over the given rows (training split only), plus
/// target statistics over valid Kt rows. Throws DegenerateFeature on zero scale.
/// Only `columns` must be non-degenerate (all when empty); others get scale 1.
NormalizationStats fit_normalization(const HourlyTable& train, Scheme scheme = Scheme::zscore,
                                     const std::vector<std::size_t>& columns = {});
HourlyTable normalize(const HourlyTable& table, const NormalizationStats& stats);
std::vector<double> normalize(std::span<const double> values, const NormalizationStats& stats);
std::vector<double> denormalize(std::span<const double> values, const NormalizationStats& stats);

struct OutlierConfig {
    /// Physical bounds per column; rows outside are dropped.
    std::array<std::pair<double, double>, kFeatureCount> bounds = default_bounds();
    double z_max = 6.0;
    double kt_cap = 2.0;

    static std::array<std::pair<double, double>, kFeatureCount> default_bounds();
};

struct OutlierResult {
    HourlyTable table;
    std::size_t dropped = 0;
};
/// `stats` must be z-score statistics of the training split. Only `columns`
/// are screened (all when empty).
OutlierResult remove_outliers(const HourlyTable& table, const NormalizationStats& stats,
                              const OutlierConfig& config = {}, const std::vector<std::size_t>& columns = {});

struct WindowedDataset {
    nn::Tensor inputs;     // [samples x seq_len x features], normalized
    nn::Tensor targets;    // [samples x horizons], clear-sky index
    nn::Tensor ghi_clear;  // [samples x horizons], W/m^2 at each target hour
    std::vector<Timestamp> window_end;
    std::vector<double> last_kt;  // clear-sky index at the window's last hour
    std::vector<int> horizons;
    std::vector<std::string> feature_names;
    std::size_t seq_len = 0;

    std::size_t size() const { return window_end.size(); }
    std::size_t feature_count() const { return feature_names.size(); }
    /// Rows selected by index, same metadata.
    WindowedDataset subset(std::span<const std::size_t> indices) const;
};

/// Sliding windows of seq_len consecutive hours whose horizon targets are
/// all valid. Windows never bridge a gap in the hourly index. Throws
/// InsufficientData when the table is shorter than seq_len + max horizon.
WindowedDataset build_windows(const HourlyTable& table, std::size_t seq_len, const std::vector<int>& horizons,
                              const std::vector<std::size_t>& columns = {});

struct PrepareConfig {
    std::size_t seq_len = 12;
    std::vector<int> horizons{1, 2, 3, 4};
    std::vector<int> train_years{2010, 2011};
    std::vector<int> test_years{2009};
    AggregateOptions aggregate;
    int max_interp_gap = 3;
    OutlierConfig outliers;
    Scheme scheme = Scheme::zscore;
    std::vector<std::string> exclude_features;

    std::string to_text() const;
    std::uint32_t fingerprint() const;
};

struct PrepareReport {
    std::size_t hourly_rows = 0;
    std::size_t train_rows = 0;
    std::size_t test_rows = 0;
    std::size_t outliers_dropped_train = 0;
    std::size_t outliers_dropped_test = 0;
    std::size_t imputed_cells = 0;
    std::string day_boundary_convention;
};

struct PreparedDataset {
    WindowedDataset train;
    WindowedDataset test;
    NormalizationStats stats;
    ImputationMeans imputation;
    PrepareReport report;
};

/// Split, impute, de-outlier, normalize and window an hourly table.
PreparedDataset prepare_from_hourly(const HourlyTable& hourly, const PrepareConfig& config);
PreparedDataset prepare(const surfrad::ObservationSeries& series, const PrepareConfig& config,
                        const std::vector<clearsky::ClearSkySample>* precomputed = nullptr);

}  // namespace irradcast::dataset
