#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "multisol/datasets.hpp"
#include "multisol/error.hpp"
#include "multisol/train.hpp"

namespace msol::cli {

enum class DatasetKind { blobs, idx, csv };

struct DatasetConfig {
    DatasetKind kind = DatasetKind::blobs;

    // blobs
    std::vector<std::size_t> counts = {300, 300, 300};
    double radius = 2.0;
    double stddev = 0.6;
    std::size_t dim = 2;
    std::uint64_t data_seed = 0;

    // idx: train files are split into train/validation, test files are the test split
    std::string train_images;
    std::string train_labels;
    std::string test_images;
    std::string test_labels;
    double validation_fraction = 1.0 / 6.0;

    // csv
    std::string path;
    std::string label_column = "label";
    std::optional<std::size_t> num_classes;

    // blobs and csv: (train, validation, test)
    std::array<double, 3> split = {0.6, 0.2, 0.2};
    std::uint64_t split_seed = 0;
    bool stratified = true;
};

struct ExperimentConfig {
    DatasetConfig dataset;
    std::vector<std::size_t> hidden = {128, 64};
    TrainConfig train;  ///< train.loss holds the loss selector; train.seed is set per run
    std::vector<std::uint64_t> seeds = {0};
    std::string output_dir = "runs";
};

/// Parses and validates a config document. Every problem found is collected
/// into one ConfigError message, one per line.
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Fully resolved form, defaults included. parse_config(to_json(c)) == c.
nlohmann::json to_json(const ExperimentConfig& cfg);

/// Reads or generates the dataset and applies the configured split. Missing
/// input files raise ConfigError naming the path.
Splits load_splits(const DatasetConfig& cfg);

/// The per-run training setup for one repeat seed: batch shuffling from the
/// seed itself, thresholds from loss.seed + seed.
TrainConfig run_config(const ExperimentConfig& cfg, std::uint64_t seed);
/// Initial weights for a repeat seed.
MlpModel initial_model(const ExperimentConfig& cfg, std::size_t input_dim, std::size_t m,
                       std::uint64_t seed);

}  // namespace msol::cli
