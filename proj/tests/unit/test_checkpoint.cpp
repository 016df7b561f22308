#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>

#include "irradcast/archive.hpp"
#include "irradcast/checkpoint.hpp"
#include "irradcast/error.hpp"
#include "support.hpp"

using namespace irradcast;
using namespace irradcast::checkpoint;

namespace {

struct Trained {
    Forecaster best;
    trainer::TrainResult result;
};

const Trained& trained(const char* mode) {
    static std::map<std::string, Trained> cache;
    auto it = cache.find(mode);
    if (it != cache.end()) return it->second;
    const auto& p = testing::small_prepared();
    trainer::TrainConfig c;
    c.mode = trainer::HorizonMode::parse(mode);
    c.seq_len = p.train.seq_len;
    c.hidden_dim = 8;
    c.epochs = 4;
    c.batch_size = 50;
    Trained t;
    t.result = trainer::train(c, p.train, p.test, p.stats);
    t.best.params = t.result.best;
    auto& m = t.best.manifest;
    m.arch = c.arch;
    m.mode = c.mode;
    m.seq_len = c.seq_len;
    m.hidden_dim = c.hidden_dim;
    m.num_layers = c.num_layers;
    m.dataset_horizons = p.train.horizons;
    m.feature_names = p.train.feature_names;
    m.stats = p.stats;
    m.station = {"Synthetic", 40.72, -77.93, 376.0};
    m.train_years = {2010};
    m.test_years = {2009};
    m.seed = c.seed;
    m.config_fingerprint = c.fingerprint();
    m.dataset_hash = "0badf00d";
    m.epoch = t.result.record.best_epoch;
    m.test_mse = t.result.record.best_test_mse;
    return cache.emplace(mode, std::move(t)).first->second;
}

}  // namespace

TEST_CASE("serialize round trip") {
    const Forecaster& f = trained("multi").best;
    const std::string bytes = serialize(f);
    const Forecaster back = deserialize(bytes);
    CHECK(back.params.same_values(f.params));
    CHECK(back.manifest.to_text() == f.manifest.to_text());
    CHECK(back.manifest.stats.location == f.manifest.stats.location);
    CHECK(serialize(back) == bytes);

    const auto path = std::filesystem::temp_directory_path() / "irradcast_unit_roundtrip.ckpt";
    save_checkpoint(path, f);
    CHECK(load_checkpoint(path).params.same_values(f.params));
    std::filesystem::remove(path);
    CHECK_THROWS_AS(load_checkpoint(path), IoError);
}

TEST_CASE("corruption, truncation and version") {
    const std::string bytes = serialize(trained("multi").best);
    for (std::size_t cut : {std::size_t{0}, std::size_t{3}, std::size_t{10}, bytes.size() / 2, bytes.size() - 1})
        CHECK_THROWS_AS(deserialize(std::string_view(bytes).substr(0, cut)), ChecksumError);

    std::string flipped = bytes;
    flipped[bytes.size() / 2] ^= 0x40;
    CHECK_THROWS_AS(deserialize(flipped), ChecksumError);

    std::string newer = bytes;
    const std::uint32_t v = kCheckpointVersion + 1;
    std::memcpy(newer.data() + 4, &v, sizeof v);
    CHECK_THROWS_AS(deserialize(newer), VersionError);
}

TEST_CASE("reloaded model reproduces its recorded test MSE exactly") {
    const auto& p = testing::small_prepared();
    for (const char* mode : {"multi", "fixed:1"}) {
        const Forecaster f = deserialize(serialize(trained(mode).best));
        const auto tensors = trainer::training_tensors(p.test, p.stats, f.manifest.mode);
        CHECK(trainer::evaluate_mse(f.params, tensors, f.manifest.mode.output_mode()) == f.manifest.test_mse);
    }
}

TEST_CASE("predict matches the training-time forward pass") {
    const auto& p = testing::small_prepared();
    for (const char* mode : {"multi", "fixed:1"}) {
        const Forecaster& f = trained(mode).best;
        const std::size_t outputs = f.manifest.output_horizons().size();
        CHECK(outputs == (std::string(mode) == "multi" ? 4u : 1u));

        const nn::Tensor batch = nn::sequence_predict(f.params, p.train.inputs, f.manifest.mode.output_mode());
        for (std::size_t i : {std::size_t{0}, p.train.size() / 2, p.train.size() - 1}) {
            const std::size_t per = p.train.seq_len * p.train.feature_count();
            nn::Tensor one({1, p.train.seq_len, p.train.feature_count()});
            std::copy_n(p.train.inputs.data() + i * per, per, one.data());
            const nn::Tensor y = predict_normalized(f, one);
            REQUIRE(y.size() == outputs);
            for (std::size_t k = 0; k < outputs; ++k) CHECK(y[k] == f.manifest.stats.denormalize_target(batch.at(i, k)));

            const nn::Tensor raw = parse_window_csv(window_csv(p.train, p.stats, i), f.manifest);
            const auto from_raw = predict(f, raw);
            REQUIRE(from_raw.size() == outputs);
            for (std::size_t k = 0; k < outputs; ++k) CHECK(std::abs(from_raw[k] - y[k]) <= 1e-9);
        }
        CHECK_THROWS_AS(predict(f, nn::Tensor::matrix(p.train.seq_len + 1, p.train.feature_count())), SchemaError);
        CHECK_THROWS_AS(predict_normalized(f, nn::Tensor({1, p.train.seq_len, 3})), SchemaError);
    }
}

TEST_CASE("window CSV schema checks") {
    const auto& p = testing::small_prepared();
    const Forecaster& f = trained("multi").best;
    const std::string csv = window_csv(p.test, p.stats, 0);
    CHECK(csv.rfind("timestamp,", 0) == 0);
    CHECK(parse_window_csv(csv, f.manifest).rows() == f.manifest.seq_len);
    CHECK_THROWS_AS(parse_window_csv("", f.manifest), SchemaError);
    CHECK_THROWS_AS(parse_window_csv("hour,dw_solar\n1,2\n", f.manifest), SchemaError);
    std::string renamed = csv;
    renamed.replace(renamed.find("dw_solar"), 8, "bogus_ch");
    CHECK_THROWS_AS(parse_window_csv(renamed, f.manifest), SchemaError);
    const auto last_line = csv.find_last_of('\n', csv.size() - 2);
    CHECK_THROWS_AS(parse_window_csv(csv.substr(0, last_line + 1), f.manifest), SchemaError);
}

TEST_CASE("manifest text round trip") {
    const ModelManifest& m = trained("fixed:1").best.manifest;
    const ModelManifest back = ModelManifest::from_text(m.to_text());
    CHECK(back.to_text() == m.to_text());
    CHECK(back.mode.to_string() == "fixed:1");
    CHECK(back.feature_names == m.feature_names);
    CHECK(back.stats.scale == m.stats.scale);
    CHECK(back.test_mse == m.test_mse);
}

TEST_CASE("dataset archive round trip") {
    const auto& p = testing::small_prepared();
    archive::DatasetArchive a;
    a.data = p;
    a.station = {"Synthetic", 40.72, -77.93, 376.0};
    a.source_hash = "12345678";
    a.config_fingerprint = 99;
    a.config_text = "seq_len = 6\n";
    const auto dir = std::filesystem::temp_directory_path() / "irradcast_unit_archive";
    std::filesystem::remove_all(dir);
    archive::write_dataset(dir, a);
    const auto back = archive::read_dataset(dir);
    CHECK(back.data.train.inputs == p.train.inputs);
    CHECK(back.data.test.targets == p.test.targets);
    CHECK(back.data.test.ghi_clear == p.test.ghi_clear);
    CHECK(back.data.train.window_end == p.train.window_end);
    CHECK(back.data.train.last_kt == p.train.last_kt);
    CHECK(back.data.stats.location == p.stats.location);
    CHECK(back.data.stats.target_scale == p.stats.target_scale);
    CHECK(back.station == a.station);
    CHECK(back.source_hash == a.source_hash);

    const auto manifest = dir / "manifest.txt";
    std::string text = text::read_file(manifest.string());
    text.replace(text.find("format_version = 1"), 18, "format_version = 7");
    text::write_file(manifest.string(), text);
    CHECK_THROWS_AS(archive::read_dataset(dir), VersionError);

    std::filesystem::remove_all(dir);
    CHECK_THROWS_AS(archive::read_dataset(dir), IoError);

    const auto st = archive::stats_from_text(archive::stats_to_text(p.stats));
    CHECK(st.location == p.stats.location);
    CHECK(st.names == p.stats.names);
}
