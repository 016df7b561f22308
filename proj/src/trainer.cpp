#include "irradcast/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <thread>

#include "irradcast/error.hpp"
#include "irradcast/text.hpp"

namespace irradcast::trainer {

namespace {

std::string join_ints(const std::vector<int>& v) {
    std::vector<std::string> parts;
    for (int x : v) parts.push_back(std::to_string(x));
    return text::join(parts, ",");
}

nn::Tensor gather_rows(const nn::Tensor& t, std::span<const std::size_t> idx) {
    std::vector<std::size_t> shape = t.shape();
    const std::size_t stride = t.size() / shape[0];
    shape[0] = idx.size();
    nn::Tensor out(shape);
    for (std::size_t k = 0; k < idx.size(); ++k)
        std::copy_n(t.data() + idx[k] * stride, stride, out.data() + k * stride);
    return out;
}

}  // namespace

// --- mode -----------------------------------------------------------------

HorizonMode HorizonMode::parse(std::string_view s) {
    if (s == "multi") return {};
    if (s.starts_with("fixed:")) {
        const auto n = text::parse_int(s.substr(6));
        if (n && *n >= 1) return {false, static_cast<int>(*n)};
    }
    throw ConfigError("mode must be 'multi' or 'fixed:N' with N >= 1, got '" + std::string(s) + "'");
}

std::string HorizonMode::to_string() const { return multi ? "multi" : "fixed:" + std::to_string(fixed_horizon); }

std::vector<int> HorizonMode::output_horizons(const std::vector<int>& dataset_horizons) const {
    std::vector<int> out;
    for (std::size_t c : target_columns(dataset_horizons)) out.push_back(dataset_horizons[c]);
    return out;
}

std::vector<std::size_t> HorizonMode::target_columns(const std::vector<int>& dataset_horizons) const {
    std::vector<std::size_t> cols;
    if (multi) {
        cols.resize(dataset_horizons.size());
        std::iota(cols.begin(), cols.end(), std::size_t{0});
        return cols;
    }
    const auto it = std::find(dataset_horizons.begin(), dataset_horizons.end(), fixed_horizon);
    if (it == dataset_horizons.end())
        throw SchemaError("dataset has no " + std::to_string(fixed_horizon) + "-hour target (horizons " +
                          join_ints(dataset_horizons) + ")");
    cols.push_back(static_cast<std::size_t>(it - dataset_horizons.begin()));
    return cols;
}

// --- config ---------------------------------------------------------------

void TrainConfig::validate() const {
    if (epochs < 1) throw ConfigError("epochs must be at least 1");
    if (batch_size < 1) throw ConfigError("batch must be at least 1");
    if (seq_len < 1) throw ConfigError("seq-len must be at least 1");
    if (hidden_dim < 1) throw ConfigError("hidden must be at least 1");
    if (num_layers < 1) throw ConfigError("layers must be at least 1");
    if (!(optimizer.learning_rate > 0.0) || !std::isfinite(optimizer.learning_rate))
        throw ConfigError("lr must be a positive number");
    if (!mode.multi && mode.fixed_horizon < 1) throw ConfigError("mode horizon must be at least 1");
    for (int y : train_years)
        if (std::find(test_years.begin(), test_years.end(), y) != test_years.end())
            throw ConfigError("train-years and test-years overlap in " + std::to_string(y));
}

std::string TrainConfig::to_text() const {
    std::string s;
    s += "arch = " + std::string(nn::to_string(arch)) + "\n";
    s += "mode = " + mode.to_string() + "\n";
    s += "epochs = " + std::to_string(epochs) + "\n";
    s += "batch = " + std::to_string(batch_size) + "\n";
    s += "seq_len = " + std::to_string(seq_len) + "\n";
    s += "hidden = " + std::to_string(hidden_dim) + "\n";
    s += "layers = " + std::to_string(num_layers) + "\n";
    s += "optimizer = " + std::string(nn::to_string(optimizer.kind)) + "\n";
    s += "lr = " + text::format_double(optimizer.learning_rate) + "\n";
    s += "clip_norm = " + text::format_double(optimizer.clip_norm) + "\n";
    s += "seed = " + std::to_string(seed) + "\n";
    s += "train_years = " + join_ints(train_years) + "\n";
    s += "test_years = " + join_ints(test_years) + "\n";
    s += "site = " + site + "\n";
    s += "target_loss = " + text::format_double(target_loss) + "\n";
    s += "max_nonfinite = " + std::to_string(max_nonfinite) + "\n";
    return s;
}

std::uint32_t TrainConfig::fingerprint() const { return text::crc32(to_text()); }

std::string RunRecord::to_csv() const {
    std::string s = "epoch,train_mse,test_mse\n";
    for (const auto& e : epochs)
        s += std::to_string(e.epoch) + "," + text::format_double(e.train_mse) + "," + text::format_double(e.test_mse) +
             "\n";
    return s;
}

// --- training ---------------------------------------------------------------

TrainingTensors training_tensors(const dataset::WindowedDataset& ds, const dataset::NormalizationStats& stats,
                                 const HorizonMode& mode) {
    const auto cols = mode.target_columns(ds.horizons);
    TrainingTensors t;
    t.inputs = ds.inputs;
    t.targets = nn::Tensor::matrix(ds.size(), cols.size());
    for (std::size_t i = 0; i < ds.size(); ++i)
        for (std::size_t j = 0; j < cols.size(); ++j) t.targets.at(i, j) = stats.normalize_target(ds.targets.at(i, cols[j]));
    return t;
}

double evaluate_mse(const nn::ModelParams& params, const TrainingTensors& data, nn::OutputMode mode) {
    if (data.targets.rows() == 0) throw InsufficientData("cannot score an empty split");
    return nn::mse_loss(data.targets, nn::sequence_predict(params, data.inputs, mode)).loss;
}

TrainResult train(const TrainConfig& config, const dataset::WindowedDataset& train_set,
                  const dataset::WindowedDataset& test_set, const dataset::NormalizationStats& stats,
                  const EpochCallback& on_epoch) {
    config.validate();
    if (train_set.seq_len != config.seq_len)
        throw SchemaError("dataset windows hold " + std::to_string(train_set.seq_len) + " hours, config asks for " +
                          std::to_string(config.seq_len));
    if (test_set.feature_names != train_set.feature_names || test_set.horizons != train_set.horizons ||
        test_set.seq_len != train_set.seq_len)
        throw SchemaError("train and test splits have different layouts");
    if (train_set.size() == 0) throw InsufficientData("training split has no windows");
    if (test_set.size() == 0) throw InsufficientData("test split has no windows");

    const auto started = std::chrono::steady_clock::now();
    const nn::OutputMode out_mode = config.mode.output_mode();
    const TrainingTensors train_t = training_tensors(train_set, stats, config.mode);
    const TrainingTensors test_t = training_tensors(test_set, stats, config.mode);

    nn::ModelShape shape;
    shape.arch = config.arch;
    shape.input_dim = train_set.feature_count();
    shape.hidden_dim = config.hidden_dim;
    shape.output_dim = train_t.targets.cols();
    shape.num_layers = config.num_layers;
    nn::ModelParams params = nn::make_initialized_params(shape, config.seed);
    nn::Optimizer optimizer(config.optimizer);

    TrainResult result;
    result.record.config_fingerprint = config.fingerprint();
    const std::size_t n = train_set.size();
    std::vector<std::size_t> order(n);
    double best = std::numeric_limits<double>::infinity();

    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::seed_seq seq{static_cast<std::uint32_t>(config.seed), static_cast<std::uint32_t>(config.seed >> 32),
                          static_cast<std::uint32_t>(epoch)};
        std::mt19937_64 rng(seq);
        std::shuffle(order.begin(), order.end(), rng);

        EpochRecord rec;
        rec.epoch = epoch;
        double loss_sum = 0.0;
        std::size_t used = 0;
        for (std::size_t start = 0; start < n; start += config.batch_size) {
            const std::size_t count = std::min(config.batch_size, n - start);
            const std::span<const std::size_t> idx(order.data() + start, count);
            const nn::Tensor x = gather_rows(train_t.inputs, idx);
            const nn::Tensor y = gather_rows(train_t.targets, idx);
            auto fwd = nn::sequence_forward(params, x, out_mode);
            auto loss = nn::mse_loss(y, fwd.output);
            auto grads = nn::backward_bptt(params, fwd.cache, loss.grad);
            try {
                if (!std::isfinite(loss.loss)) throw NonFiniteGradient("non-finite batch loss");
                optimizer.step(params, grads);
            } catch (const NonFiniteGradient& e) {
                ++rec.skipped_batches;
                if (++result.record.nonfinite_events > config.max_nonfinite)
                    throw DivergedError("training diverged at epoch " + std::to_string(epoch) + " batch " +
                                        std::to_string(start / config.batch_size + 1) + ": " +
                                        std::to_string(result.record.nonfinite_events) +
                                        " non-finite gradients (last: " + e.what() + "); try a smaller lr");
                continue;
            }
            loss_sum += loss.loss * static_cast<double>(count);
            used += count;
        }
        rec.train_mse = used ? loss_sum / static_cast<double>(used) : std::numeric_limits<double>::quiet_NaN();
        rec.test_mse = evaluate_mse(params, test_t, out_mode);
        if (!std::isfinite(rec.test_mse))
            throw DivergedError("test MSE became non-finite at epoch " + std::to_string(epoch));
        result.record.epochs.push_back(rec);
        if (rec.test_mse < best) {
            best = rec.test_mse;
            result.best = params;
            result.record.best_epoch = epoch;
            result.record.best_test_mse = rec.test_mse;
        }
        if (on_epoch) on_epoch(rec);
        if (config.target_loss > 0.0 && used && rec.train_mse <= config.target_loss) {
            result.record.early_stopped = true;
            break;
        }
    }
    result.record.final_test_mse = result.record.epochs.back().test_mse;
    result.record.final_train_mse = result.record.epochs.back().train_mse;
    result.final = std::move(params);
    result.record.wall_time = std::chrono::steady_clock::now() - started;
    return result;
}

std::vector<std::exception_ptr> run_jobs(const std::vector<std::function<void()>>& jobs, std::size_t workers) {
    std::vector<std::exception_ptr> errors(jobs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < jobs.size(); i = next++) {
            try {
                jobs[i]();
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const std::size_t count = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(jobs.size(), 1));
    std::vector<std::thread> threads;
    for (std::size_t t = 1; t < count; ++t) threads.emplace_back(worker);
    worker();
    for (auto& t : threads) t.join();
    return errors;
}

}  // namespace irradcast::trainer
