#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "multisol/datasets.hpp"
#include "multisol/losses.hpp"
#include "multisol/mlp.hpp"

namespace msol {

struct TrainConfig {
    LossSelector loss;
    double learning_rate = 1e-4;
    std::size_t batch_size = 128;
    std::size_t max_epochs = 500;
    std::size_t patience = 25;
    /// gamma in gamma/2 * ||theta||^2, applied as a gradient term.
    double weight_decay = 0.0;
    /// Drives batch shuffling; model init and thresholds take their own seeds.
    std::uint64_t seed = 0;

    void validate() const;
};

/// Top-1 accuracy plus one-vs-rest macro scores, all at the barycentric
/// (argmax) threshold.
struct EvalMetrics {
    double top1_accuracy = 0.0;
    double macro_accuracy = 0.0;
    double macro_precision = 0.0;
    double macro_recall = 0.0;
    double macro_f1 = 0.0;

    friend bool operator==(const EvalMetrics&, const EvalMetrics&) = default;
};

struct EpochRecord {
    std::size_t epoch = 0;  ///< 0 is the untrained model
    double train_loss = 0.0;
    double validation_loss = 0.0;
    EvalMetrics validation;

    friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

struct TrainReport {
    std::string loss_name;
    std::vector<EpochRecord> history;
    std::size_t best_epoch = 0;  ///< checkpoint with minimal validation loss
    double best_validation_loss = 0.0;
    std::size_t epochs_run = 0;
    bool early_stopped = false;
    EvalMetrics test;
    double seconds = 0.0;  ///< wall clock, excluded from equality

    bool same_results(const TrainReport& other) const;
};

EvalMetrics evaluate(const MlpModel& model, const Dataset& data);

/// Loss of the whole dataset evaluated at once. MultiSOL is not a sum over
/// samples, so averaging per-batch values would depend on how rows are grouped.
/// The forward pass runs in chunks of batch_size.
double dataset_loss(const MlpModel& model, const BoundLoss& loss, const Dataset& data,
                    std::size_t batch_size);

/// Trains in place with Adam and early stopping on validation loss; on return
/// `model` holds the best checkpoint and the report carries its test metrics.
TrainReport train(MlpModel& model, const Splits& data, const TrainConfig& cfg);

nlohmann::json to_json(const EvalMetrics& m);
nlohmann::json to_json(const TrainReport& r);

}  // namespace msol
