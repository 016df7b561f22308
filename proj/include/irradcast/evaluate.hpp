#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "irradcast/checkpoint.hpp"
#include "irradcast/dataset.hpp"

namespace irradcast::evaluate {

/// kt * ghi_clear, never negative.
double kt_to_ghi(double kt, double ghi_clear);
/// Throws ShapeError on length mismatch or empty input.
double rmse(std::span<const double> truth, std::span<const double> pred);

struct HorizonScore {
    int horizon_h = 0;
    double rmse_kt = 0.0;
    double rmse_wm2 = 0.0;
};

/// Smart persistence: every horizon forecast as the window's last Kt.
std::vector<HorizonScore> persistence_baseline(const dataset::WindowedDataset& ds);

// --- literature fixtures ----------------------------------------------------

struct LiteratureRow {
    std::string site;  // display name, e.g. "Penn State"
    std::string code;  // station code, e.g. "psu"
    int year = 0;
    int horizon_h = 0;  // 0 marks the stated mean row
    double rnn_wm2 = 0.0;
    double ml_wm2 = 0.0;
};

struct LiteratureTable {
    std::vector<LiteratureRow> rows;

    const LiteratureRow* find(std::string_view code, int year, int horizon_h) const;
    std::vector<std::string> codes() const;
};
LiteratureTable parse_literature_table(std::string_view csv);

struct MeanCheck {
    std::string code;
    std::string column;  // "rnn" or "ml"
    double stated = 0.0;
    double computed = 0.0;
    bool flagged = false;
};
/// Stated mean rows against the mean of their own horizon cells.
std::vector<MeanCheck> check_stated_means(const LiteratureTable& table, double tolerance = 1e-9);

struct LiteratureAggregates {
    double rnn_average = 0.0;  // mean of the stated per-site means
    double ml_average = 0.0;
    double improvement = 0.0;
};
LiteratureAggregates literature_aggregates(const LiteratureTable& table, int year);

/// (baseline - ours) / baseline
double relative_improvement(double baseline, double ours);

struct MultiHorizonRow {
    std::string site;
    std::string code;
    int year = 0;
    int horizon_h = 0;  // 0 marks the stated mean row
    std::string arch;
    double rmse_kt = 0.0;
    bool anomaly = false;
};
std::vector<MultiHorizonRow> parse_multi_horizon_table(std::string_view csv);

// --- reports ----------------------------------------------------------------

struct ReportRow {
    int horizon_h = 0;  // 0 marks the mean row
    double rmse_kt = 0.0;
    double rmse_wm2 = 0.0;
    double persistence_rmse_kt = 0.0;
    double persistence_rmse_wm2 = 0.0;
    std::optional<double> literature_rmse_wm2;
};

struct ForecastReport {
    std::string site;
    int test_year = 0;
    std::string arch;
    std::string mode;
    std::uint32_t config_fingerprint = 0;
    std::vector<ReportRow> horizons;
    ReportRow mean;
    bool below_baseline = false;  // mean Kt RMSE worse than persistence
};

/// Scores a model on a test split, one report per calendar year of the
/// window ends.
std::vector<ForecastReport> evaluate_model(const checkpoint::Forecaster& model, const dataset::WindowedDataset& test,
                                           std::string_view site, const LiteratureTable* literature = nullptr);

struct BenchmarkInput {
    std::string site;
    std::optional<checkpoint::Forecaster> best;
    std::optional<checkpoint::Forecaster> final;
    const dataset::WindowedDataset* test = nullptr;
};

struct ModelSummary {
    std::string site;
    std::size_t best_epoch = 0;
    double best_test_mse = 0.0;
    double best_mean_rmse_kt = 0.0;
    std::optional<double> final_test_mse;
    std::optional<double> final_mean_rmse_kt;
};

struct BenchmarkSummary {
    std::vector<ForecastReport> reports;
    std::vector<ModelSummary> models;
    double overall_mean_rmse_wm2 = 0.0;
    std::optional<double> literature_mean_rmse_wm2;
    std::optional<double> improvement;
};

/// Throws ReportError naming every site without a checkpoint.
BenchmarkSummary benchmark_report(const std::vector<BenchmarkInput>& inputs,
                                  const LiteratureTable* literature = nullptr);

std::string report_csv_header();
std::string to_csv(const BenchmarkSummary& summary);
std::string summary_text(const BenchmarkSummary& summary);
/// Long format: site,test_year,arch,mode,horizon_h,series,rmse_wm2
std::string plot_csv(const BenchmarkSummary& summary);

}  // namespace irradcast::evaluate
