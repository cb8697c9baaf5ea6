#include "multisol/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "multisol/error.hpp"
#include "multisol/rng.hpp"
#include "multisol/scores.hpp"
#include "multisol/soft_confusion.hpp"

namespace msol {

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0)) {
        throw std::invalid_argument("train.learning_rate must be positive");
    }
    if (batch_size == 0) {
        throw std::invalid_argument("train.batch_size must be at least 1");
    }
    if (max_epochs == 0) {
        throw std::invalid_argument("train.max_epochs must be at least 1");
    }
    if (patience == 0) {
        throw std::invalid_argument("train.patience must be at least 1");
    }
    if (!(weight_decay >= 0.0)) {
        throw std::invalid_argument("train.weight_decay must be non-negative");
    }
    if (loss.kind == LossKind::multisol) {
        loss.multisol.validate();
    }
}

bool TrainReport::same_results(const TrainReport& other) const {
    return loss_name == other.loss_name && history == other.history &&
           best_epoch == other.best_epoch && best_validation_loss == other.best_validation_loss &&
           epochs_run == other.epochs_run && early_stopped == other.early_stopped &&
           test == other.test;
}

EvalMetrics evaluate(const MlpModel& model, const Dataset& data) {
    if (data.size() == 0) {
        throw std::invalid_argument("evaluate: empty dataset");
    }
    const Matrix probs = model.forward(data.features);
    const auto bary = SimplexPoint::barycenter(model.num_classes());
    const auto decided = classify_rows(probs, bary.values());
    std::size_t correct = 0;
    for (std::size_t i = 0; i < decided.size(); ++i) {
        correct += decided[i] == data.labels[i].class_index ? 1 : 0;
    }
    const auto cms = hard_confusions(decided, data.labels, model.num_classes());
    EvalMetrics m;
    m.top1_accuracy = static_cast<double>(correct) / static_cast<double>(data.size());
    m.macro_accuracy = macro_score(ScoreKind::accuracy, cms);
    m.macro_precision = macro_score(ScoreKind::precision, cms);
    m.macro_recall = macro_score(ScoreKind::recall, cms);
    m.macro_f1 = macro_score(ScoreKind::f1, cms);
    return m;
}

namespace {

Dataset batch_of(const Dataset& data, const std::vector<std::size_t>& order, std::size_t begin,
                 std::size_t end) {
    return data.subset(std::span<const std::size_t>(order).subspan(begin, end - begin), "batch");
}

std::vector<std::size_t> identity(std::size_t n) {
    std::vector<std::size_t> v(n);
    for (std::size_t i = 0; i < n; ++i) {
        v[i] = i;
    }
    return v;
}

}  // namespace

double dataset_loss(const MlpModel& model, const BoundLoss& loss, const Dataset& data,
                    std::size_t batch_size) {
    if (data.size() == 0) {
        throw std::invalid_argument("dataset_loss: empty dataset");
    }
    if (batch_size == 0) {
        throw std::invalid_argument("dataset_loss: batch_size must be positive");
    }
    const auto order = identity(data.size());
    Matrix preds(data.size(), model.num_classes());
    for (std::size_t b = 0; b < data.size(); b += batch_size) {
        const auto batch = batch_of(data, order, b, std::min(data.size(), b + batch_size));
        const Matrix out = model.forward(batch.features);
        std::copy(out.data().begin(), out.data().end(),
                  preds.data().begin() + static_cast<std::ptrdiff_t>(b * preds.cols()));
    }
    return loss.evaluate(preds, data.labels).value;
}

TrainReport train(MlpModel& model, const Splits& data, const TrainConfig& cfg) {
    cfg.validate();
    for (const Dataset* d : {&data.train, &data.validation, &data.test}) {
        if (d->size() == 0) {
            throw std::invalid_argument("train: empty " + d->split + " split");
        }
        if (d->dim() != model.input_dim()) {
            throw std::invalid_argument("train: " + d->split + " split has " +
                                        std::to_string(d->dim()) + " features, model expects " +
                                        std::to_string(model.input_dim()));
        }
        // ReLU would silently map NaN to zero, so bad inputs are caught here
        const auto& values = d->features.data();
        const auto bad = std::find_if(values.begin(), values.end(),
                                      [](double v) { return !std::isfinite(v); });
        if (bad != values.end()) {
            const auto row = static_cast<std::size_t>(bad - values.begin()) / d->dim();
            throw TrainingError("train: non-finite feature in " + d->split + " split, row " +
                                std::to_string(row));
        }
    }
    const auto start = std::chrono::steady_clock::now();
    const BoundLoss loss(cfg.loss, model.num_classes(), data.train.labels);
    Adam adam(cfg.learning_rate);
    Rng shuffler(mix_seed(cfg.seed, 2));

    TrainReport report;
    report.loss_name = cfg.loss.name();

    EpochRecord initial;
    initial.train_loss = dataset_loss(model, loss, data.train, cfg.batch_size);
    initial.validation_loss = dataset_loss(model, loss, data.validation, cfg.batch_size);
    initial.validation = evaluate(model, data.validation);
    report.history.push_back(initial);

    MlpModel best = model;
    report.best_epoch = 0;
    report.best_validation_loss = initial.validation_loss;

    auto order = identity(data.train.size());
    for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        shuffler.shuffle(order);
        double total = 0.0;
        std::size_t batches = 0;
        for (std::size_t b = 0; b < order.size(); b += cfg.batch_size) {
            const auto batch =
                batch_of(data.train, order, b, std::min(order.size(), b + cfg.batch_size));
            ad::Tape tape;
            const auto rec = model.record(tape, batch.features);
            const auto value = loss.apply(rec.probs, batch.labels);
            const double v = value.value()(0, 0);
            if (!std::isfinite(v)) {
                throw TrainingError("non-finite training loss at epoch " + std::to_string(epoch) +
                                    ", batch " + std::to_string(batches) + " (" +
                                    report.loss_name + ")");
            }
            tape.backward(value);
            auto params = model.parameters();
            std::vector<Matrix> grads;
            grads.reserve(params.size());
            for (std::size_t k = 0; k < params.size(); ++k) {
                Matrix g = rec.params[k].grad();
                if (g.empty()) {
                    g = Matrix(params[k]->rows(), params[k]->cols());
                }
                if (cfg.weight_decay > 0.0) {
                    for (std::size_t i = 0; i < g.size(); ++i) {
                        g.data()[i] += cfg.weight_decay * params[k]->data()[i];
                    }
                }
                grads.push_back(std::move(g));
            }
            adam.step(params, grads);
            total += v;
            ++batches;
        }
        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_loss = total / static_cast<double>(batches);
        rec.validation_loss = dataset_loss(model, loss, data.validation, cfg.batch_size);
        rec.validation = evaluate(model, data.validation);
        if (!std::isfinite(rec.validation_loss)) {
            throw TrainingError("non-finite validation loss at epoch " + std::to_string(epoch));
        }
        report.history.push_back(rec);
        report.epochs_run = epoch;
        if (rec.validation_loss < report.best_validation_loss) {
            report.best_validation_loss = rec.validation_loss;
            report.best_epoch = epoch;
            best = model;
        } else if (epoch - report.best_epoch >= cfg.patience) {
            report.early_stopped = true;
            break;
        }
    }
    model = std::move(best);
    report.test = evaluate(model, data.test);
    report.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
}

nlohmann::json to_json(const EvalMetrics& m) {
    return {{"top1_accuracy", m.top1_accuracy},
            {"macro_accuracy", m.macro_accuracy},
            {"macro_precision", m.macro_precision},
            {"macro_recall", m.macro_recall},
            {"macro_f1", m.macro_f1}};
}

nlohmann::json to_json(const TrainReport& r) {
    nlohmann::json history = nlohmann::json::array();
    for (const auto& e : r.history) {
        history.push_back({{"epoch", e.epoch},
                           {"train_loss", e.train_loss},
                           {"validation_loss", e.validation_loss},
                           {"validation", to_json(e.validation)}});
    }
    return {{"loss", r.loss_name},
            {"best_epoch", r.best_epoch},
            {"convergence_epoch", r.best_epoch},
            {"best_validation_loss", r.best_validation_loss},
            {"epochs_run", r.epochs_run},
            {"early_stopped", r.early_stopped},
            {"test", to_json(r.test)},
            {"seconds", r.seconds},
            {"history", history}};
}

}  // namespace msol
