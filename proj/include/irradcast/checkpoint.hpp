#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "irradcast/dataset.hpp"
#include "irradcast/network.hpp"
#include "irradcast/surfrad.hpp"
#include "irradcast/trainer.hpp"

namespace irradcast::checkpoint {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Everything inference needs besides the weights.
struct ModelManifest {
    nn::Arch arch = nn::Arch::lstm;
    trainer::HorizonMode mode;
    std::size_t seq_len = 0;
    std::size_t hidden_dim = 0;
    std::size_t num_layers = 1;
    std::vector<int> dataset_horizons;
    std::vector<std::string> feature_names;
    dataset::NormalizationStats stats;
    surfrad::StationMeta station;
    std::vector<int> train_years;
    std::vector<int> test_years;
    std::uint64_t seed = 0;
    std::uint32_t config_fingerprint = 0;
    std::string dataset_hash;
    std::size_t epoch = 0;
    double test_mse = 0.0;  // normalized test MSE of these weights

    std::vector<int> output_horizons() const { return mode.output_horizons(dataset_horizons); }
    std::string to_text() const;
    static ModelManifest from_text(std::string_view text);
};

struct Forecaster {
    nn::ModelParams params;
    ModelManifest manifest;
};

std::string serialize(const Forecaster& f);
/// Throws VersionError for another format version and ChecksumError for
/// corrupt or truncated bytes.
Forecaster deserialize(std::string_view bytes);

void save_checkpoint(const std::filesystem::path& path, const Forecaster& f);
Forecaster load_checkpoint(const std::filesystem::path& path);

/// Raw (unnormalized) window [seq_len x features] in manifest feature order
/// to Kt per output horizon. Throws SchemaError on shape mismatch.
std::vector<double> predict(const Forecaster& f, const nn::Tensor& raw_window);
/// Normalized inputs [samples x seq_len x features] to Kt [samples x outputs].
nn::Tensor predict_normalized(const Forecaster& f, const nn::Tensor& inputs);

/// Window CSV: a timestamp column followed by one column per feature, one
/// row per hour, oldest first. Columns are matched by name.
nn::Tensor parse_window_csv(std::string_view csv, const ModelManifest& manifest);
/// Raw window of dataset sample `i`, rendered in the same CSV layout.
std::string window_csv(const dataset::WindowedDataset& ds, const dataset::NormalizationStats& stats, std::size_t i);

}  // namespace irradcast::checkpoint
