#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <string>
#include <vector>

#include "irradcast/dataset.hpp"
#include "irradcast/network.hpp"
#include "irradcast/optimizer.hpp"

namespace irradcast::trainer {

/// fixed:N trains one horizon with a single output; multi trains every
/// dataset horizon at once.
struct HorizonMode {
    bool multi = true;
    int fixed_horizon = 1;

    static HorizonMode parse(std::string_view s);
    std::string to_string() const;
    nn::OutputMode output_mode() const { return multi ? nn::OutputMode::many_to_many : nn::OutputMode::many_to_one; }
    /// Horizons the model emits, drawn from the dataset's list.
    std::vector<int> output_horizons(const std::vector<int>& dataset_horizons) const;
    /// Dataset target columns feeding each output.
    std::vector<std::size_t> target_columns(const std::vector<int>& dataset_horizons) const;
};

struct TrainConfig {
    nn::Arch arch = nn::Arch::lstm;
    HorizonMode mode;
    std::size_t epochs = 1000;
    std::size_t batch_size = 100;
    std::size_t seq_len = 12;
    std::size_t hidden_dim = 32;
    std::size_t num_layers = 1;
    nn::OptimizerConfig optimizer;
    std::uint64_t seed = 42;
    std::vector<int> train_years{2010, 2011};
    std::vector<int> test_years{2009};
    std::string site;
    /// Stop once an epoch's training MSE reaches this value; 0 disables.
    double target_loss = 0.0;
    /// Skipped non-finite batches tolerated before DivergedError.
    std::size_t max_nonfinite = 5;

    /// Throws ConfigError naming the offending key.
    void validate() const;
    std::string to_text() const;
    std::uint32_t fingerprint() const;
};

struct EpochRecord {
    std::size_t epoch = 0;  // 1-based
    double train_mse = 0.0;
    double test_mse = 0.0;
    std::size_t skipped_batches = 0;
};

struct RunRecord {
    std::vector<EpochRecord> epochs;
    std::size_t best_epoch = 0;
    double best_test_mse = 0.0;
    double final_test_mse = 0.0;
    double final_train_mse = 0.0;
    std::size_t nonfinite_events = 0;
    bool early_stopped = false;
    std::uint32_t config_fingerprint = 0;
    std::chrono::duration<double> wall_time{};

    /// epoch,train_mse,test_mse
    std::string to_csv() const;
};

struct TrainResult {
    nn::ModelParams best;
    nn::ModelParams final;
    RunRecord record;
};

/// Supervised tensors for one mode: inputs as stored, targets normalized.
struct TrainingTensors {
    nn::Tensor inputs;   // [samples x seq x features]
    nn::Tensor targets;  // [samples x outputs]
};
TrainingTensors training_tensors(const dataset::WindowedDataset& ds, const dataset::NormalizationStats& stats,
                                 const HorizonMode& mode);

/// Normalized MSE of the model over a whole split.
double evaluate_mse(const nn::ModelParams& params, const TrainingTensors& data, nn::OutputMode mode);

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Mini-batch training with a deterministic per-epoch shuffle; returns the
/// parameters of the best test epoch and of the last epoch.
TrainResult train(const TrainConfig& config, const dataset::WindowedDataset& train_set,
                  const dataset::WindowedDataset& test_set, const dataset::NormalizationStats& stats,
                  const EpochCallback& on_epoch = {});

/// Runs independent jobs on at most `workers` threads. Returns one entry per
/// job, null on success.
std::vector<std::exception_ptr> run_jobs(const std::vector<std::function<void()>>& jobs, std::size_t workers);

}  // namespace irradcast::trainer
