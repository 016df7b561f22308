#include <doctest.h>

#include <atomic>
#include <random>
#include <stdexcept>

#include "irradcast/error.hpp"
#include "irradcast/trainer.hpp"
#include "support.hpp"

using namespace irradcast;
using namespace irradcast::trainer;

namespace {

/// Ten random normalized windows with Kt targets; test split mirrors train.
struct TinySet {
    dataset::WindowedDataset data;
    dataset::NormalizationStats stats;
};

TinySet tiny_set(std::size_t samples = 10) {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> x(-1.5, 1.5), kt(0.2, 1.0);
    TinySet s;
    auto& d = s.data;
    d.seq_len = 4;
    d.horizons = {1, 2, 3, 4};
    d.feature_names = {"dw_solar", "rh", "kt"};
    d.inputs = nn::Tensor({samples, 4, 3});
    for (double& v : d.inputs.values()) v = x(rng);
    d.targets = nn::Tensor::matrix(samples, 4);
    for (double& v : d.targets.values()) v = kt(rng);
    d.ghi_clear = nn::Tensor::matrix(samples, 4, 700.0);
    for (std::size_t i = 0; i < samples; ++i) {
        d.window_end.push_back(make_timestamp(2010, 6, 1).plus_hours(static_cast<std::int64_t>(i)));
        d.last_kt.push_back(0.6);
    }
    s.stats.names = d.feature_names;
    s.stats.location = {0.0, 0.0, 0.0};
    s.stats.scale = {1.0, 1.0, 1.0};
    s.stats.target_location = 0.6;
    s.stats.target_scale = 0.25;
    return s;
}

TrainConfig tiny_config(nn::Arch arch, HorizonMode mode) {
    TrainConfig c;
    c.arch = arch;
    c.mode = mode;
    c.seq_len = 4;
    c.hidden_dim = 16;
    c.batch_size = 10;
    c.epochs = 2000;
    c.optimizer.learning_rate = 1e-2;
    c.target_loss = 1e-3;
    c.seed = 5;
    return c;
}

}  // namespace

TEST_CASE("horizon mode parsing") {
    const HorizonMode multi = HorizonMode::parse("multi");
    CHECK(multi.multi);
    CHECK(multi.output_mode() == nn::OutputMode::many_to_many);
    CHECK(multi.output_horizons({1, 2, 3, 4}).size() == 4);
    const HorizonMode three = HorizonMode::parse("fixed:3");
    CHECK_FALSE(three.multi);
    CHECK(three.fixed_horizon == 3);
    CHECK(three.to_string() == "fixed:3");
    CHECK(three.output_horizons({1, 2, 3, 4}) == std::vector<int>{3});
    CHECK(three.target_columns({1, 2, 3, 4}) == std::vector<std::size_t>{2});
    CHECK_THROWS_AS(three.target_columns({1, 2}), SchemaError);
    for (const char* bad : {"", "fixed", "fixed:0", "fixed:x", "many"}) CHECK_THROWS_AS(HorizonMode::parse(bad), ConfigError);
}

TEST_CASE("config validation names the key") {
    TrainConfig c;
    c.epochs = 0;
    try {
        c.validate();
        FAIL("epochs = 0 accepted");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("epochs") != std::string::npos);
    }
    c = {};
    c.batch_size = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = {};
    c.optimizer.learning_rate = -1.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = {};
    CHECK_NOTHROW(c.validate());
    CHECK(c.epochs == 1000);
    CHECK(c.batch_size == 100);
    TrainConfig d = c;
    d.seed = 43;
    CHECK(c.fingerprint() != d.fingerprint());
}

TEST_CASE("ten samples are memorized") {
    const TinySet s = tiny_set();
    for (const nn::Arch arch : {nn::Arch::rnn, nn::Arch::lstm})
        for (const char* mode : {"multi", "fixed:2"}) {
            const auto res = train(tiny_config(arch, HorizonMode::parse(mode)), s.data, s.data, s.stats);
            CAPTURE(nn::to_string(arch));
            CAPTURE(mode);
            CHECK(res.record.final_train_mse < 1e-3);
            CHECK(res.record.epochs.size() <= 2000);
        }
}

TEST_CASE("training is reproducible and tracks the best epoch") {
    const auto& p = testing::small_prepared();
    TrainConfig c;
    c.seq_len = p.train.seq_len;
    c.epochs = 6;
    c.hidden_dim = 8;
    c.batch_size = 32;
    c.seed = 11;
    const auto a = train(c, p.train, p.test, p.stats);
    const auto b = train(c, p.train, p.test, p.stats);
    REQUIRE(a.record.epochs.size() == 6);
    for (std::size_t e = 0; e < 6; ++e) {
        CHECK(a.record.epochs[e].train_mse == b.record.epochs[e].train_mse);
        CHECK(a.record.epochs[e].test_mse == b.record.epochs[e].test_mse);
        CHECK(a.record.epochs[e].train_mse >= 0.0);
    }
    CHECK(a.best.same_values(b.best));
    CHECK(a.final.same_values(b.final));

    double best = a.record.epochs[0].test_mse;
    for (const auto& e : a.record.epochs) best = std::min(best, e.test_mse);
    CHECK(a.record.best_test_mse == best);
    CHECK(a.record.epochs[a.record.best_epoch - 1].test_mse == best);
    CHECK(a.record.final_test_mse == a.record.epochs.back().test_mse);

    const auto tensors = training_tensors(p.test, p.stats, c.mode);
    CHECK(evaluate_mse(a.best, tensors, c.mode.output_mode()) == a.record.best_test_mse);

    const std::string csv = a.record.to_csv();
    CHECK(csv.rfind("epoch,train_mse,test_mse\n", 0) == 0);

    TrainConfig other = c;
    other.seed = 12;
    CHECK_FALSE(train(other, p.train, p.test, p.stats).final.same_values(a.final));
}

TEST_CASE("non-finite batches end in DivergedError") {
    // Finite inputs large enough to overflow the ReLU cell's loss.
    TinySet s = tiny_set();
    for (std::size_t i = 0; i < 10; ++i) s.data.inputs.at(i, 0, 0) = 1e300;
    TrainConfig c = tiny_config(nn::Arch::rnn, HorizonMode::parse("multi"));
    c.batch_size = 1;
    c.max_nonfinite = 2;
    CHECK_THROWS_AS(train(c, s.data, tiny_set().data, s.stats), DivergedError);

    TinySet nan_input = tiny_set();
    nan_input.data.inputs[3] = std::nan("");
    CHECK_THROWS_AS(train(c, nan_input.data, tiny_set().data, nan_input.stats), ShapeError);
}

TEST_CASE("layout mismatches are rejected") {
    const TinySet s = tiny_set();
    TrainConfig c = tiny_config(nn::Arch::rnn, HorizonMode::parse("multi"));
    c.seq_len = 5;
    CHECK_THROWS_AS(train(c, s.data, s.data, s.stats), SchemaError);
    c.seq_len = 4;
    const auto empty = s.data.subset(std::vector<std::size_t>{});
    CHECK_THROWS_AS(train(c, s.data, empty, s.stats), InsufficientData);
}

TEST_CASE("job runner isolates failures") {
    std::atomic<int> done{0};
    std::vector<std::function<void()>> jobs;
    for (int i = 0; i < 6; ++i)
        jobs.push_back([i, &done] {
            if (i == 3) throw std::runtime_error("boom");
            ++done;
        });
    const auto errors = run_jobs(jobs, 2);
    REQUIRE(errors.size() == 6);
    CHECK(done == 5);
    for (int i = 0; i < 6; ++i) CHECK((errors[i] != nullptr) == (i == 3));
}
