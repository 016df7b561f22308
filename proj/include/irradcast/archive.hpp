#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "irradcast/dataset.hpp"
#include "irradcast/surfrad.hpp"

namespace irradcast::archive {

/// Flat little-endian arrays.
void write_f64(const std::filesystem::path& path, std::span<const double> values);
std::vector<double> read_f64(const std::filesystem::path& path, std::size_t expected_count);

/// `key = value` lines; keys keep their file order.
struct KeyValues {
    std::vector<std::pair<std::string, std::string>> entries;

    void set(std::string key, std::string value);
    const std::string* find(std::string_view key) const;
    /// Throws SchemaError naming the key when absent.
    const std::string& get(std::string_view key) const;
    std::string to_text() const;
    static KeyValues parse(std::string_view text);
};

std::string stats_to_text(const dataset::NormalizationStats& stats);
dataset::NormalizationStats stats_from_text(std::string_view text);

/// A prepared dataset as stored on disk.
struct DatasetArchive {
    dataset::PreparedDataset data;
    surfrad::StationMeta station;
    std::string source_hash;  // crc32 of the canonical source bytes, hex
    std::uint32_t config_fingerprint = 0;
    std::string config_text;
};

inline constexpr int kArchiveVersion = 1;

/// Writes manifest.txt, stats.txt, config.txt and the train_/test_ arrays.
void write_dataset(const std::filesystem::path& dir, const DatasetArchive& archive);
/// Throws IoError for missing files, SchemaError for inconsistent manifests
/// and VersionError for a different format version.
DatasetArchive read_dataset(const std::filesystem::path& dir);

std::string hex32(std::uint32_t v);

}  // namespace irradcast::archive
