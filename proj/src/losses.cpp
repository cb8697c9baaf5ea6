#include "multisol/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "multisol/soft_confusion.hpp"

namespace msol {

void LossConfig::validate() const {
    if (!(alpha > 0.0) || !std::isfinite(alpha)) {
        throw std::invalid_argument("loss.alpha must be positive");
    }
    if (n_thresholds == 0) {
        throw std::invalid_argument("loss.n_thresholds must be at least 1");
    }
    if (!(lambda > 0.0) || !std::isfinite(lambda)) {
        throw std::invalid_argument("loss.lambda must be positive");
    }
}

ClassWeights ClassWeights::balanced(std::span<const HardLabel> labels, std::size_t m) {
    if (labels.empty()) {
        throw std::invalid_argument("ClassWeights: no labels");
    }
    std::vector<double> counts(m, 0.0);
    for (const auto& y : labels) {
        if (y.class_index >= m) {
            throw std::out_of_range("ClassWeights: label out of range");
        }
        counts[y.class_index] += 1.0;
    }
    ClassWeights out;
    out.w.resize(m);
    const auto n = static_cast<double>(labels.size());
    for (std::size_t j = 0; j < m; ++j) {
        if (counts[j] == 0.0) {
            throw std::invalid_argument("ClassWeights: class " + std::to_string(j) +
                                        " has no training samples");
        }
        out.w[j] = n / (static_cast<double>(m) * counts[j]);
    }
    return out;
}

ThresholdSet make_thresholds(const LossConfig& cfg, std::size_t m) {
    cfg.validate();
    return sample_thresholds(DirichletPrior::symmetric(m, cfg.alpha), cfg.n_thresholds, cfg.seed);
}

namespace {

void check_thresholds(const Matrix& preds, const LossConfig& cfg, const ThresholdSet& thresholds) {
    cfg.validate();
    if (thresholds.dim() != preds.cols()) {
        throw std::invalid_argument("multisol: thresholds have m=" +
                                    std::to_string(thresholds.dim()) + ", predictions m=" +
                                    std::to_string(preds.cols()));
    }
    if (thresholds.size() != cfg.n_thresholds) {
        throw std::invalid_argument("multisol: threshold set has " +
                                    std::to_string(thresholds.size()) +
                                    " samples, config expects " +
                                    std::to_string(cfg.n_thresholds));
    }
}

Matrix one_hot(std::span<const HardLabel> labels, std::size_t m) {
    Matrix y(labels.size(), m);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        y(i, labels[i].class_index) = 1.0;
    }
    return y;
}

Matrix class_counts(std::span<const HardLabel> labels, std::size_t m) {
    Matrix counts(1, m);
    for (const auto& y : labels) {
        counts(0, y.class_index) += 1.0;
    }
    return counts;
}

}  // namespace

LossValue multisol(const Matrix& preds, std::span<const HardLabel> labels, const LossConfig& cfg,
                   const ThresholdSet& thresholds) {
    check_batch(preds, labels);
    check_thresholds(preds, cfg, thresholds);
    const Matrix membership = cfg.indicator == Indicator::smoothed
                                  ? smoothed_membership(preds, thresholds, cfg.lambda)
                                  : mc_hard_membership(preds, thresholds);
    const auto cms = confusions_from_membership(membership, labels);
    LossValue out;
    out.per_class_scores.reserve(cms.size());
    double total = 0.0;
    for (const auto& cm : cms) {
        out.per_class_scores.push_back(score(cfg.score_kind, cm));
        total += out.per_class_scores.back();
    }
    out.value = -total / static_cast<double>(cms.size());
    return out;
}

Matrix multisol_grad(const Matrix& preds, std::span<const HardLabel> labels,
                     const LossConfig& cfg, const ThresholdSet& thresholds) {
    if (cfg.indicator != Indicator::smoothed) {
        throw std::invalid_argument("multisol_grad: hard indicators are not differentiable");
    }
    ad::Tape tape;
    const auto p = tape.variable(preds);
    const auto loss = ad::multisol_loss(p, labels, cfg, thresholds);
    tape.backward(loss);
    return p.grad().empty() ? Matrix(preds.rows(), preds.cols()) : p.grad();
}

LossValue cross_entropy(const Matrix& preds, std::span<const HardLabel> labels,
                        const std::optional<ClassWeights>& weights) {
    ad::Tape tape;
    const auto loss = ad::cross_entropy_loss(tape.constant(preds), labels, weights);
    return LossValue{loss.value()(0, 0), {}};
}

LossValue squared_loss(const Matrix& preds, std::span<const HardLabel> labels) {
    ad::Tape tape;
    const auto loss = ad::squared_loss(tape.constant(preds), labels);
    return LossValue{loss.value()(0, 0), {}};
}

namespace ad {

Var multisol_loss(Var preds, std::span<const HardLabel> labels, const LossConfig& cfg,
                  const ThresholdSet& thresholds) {
    Tape& tape = *preds.tape();
    const Matrix& p = preds.value();
    check_batch(p, labels);
    check_thresholds(p, cfg, thresholds);
    const std::size_t m = p.cols();
    const auto n = static_cast<double>(labels.size());

    const Var member = cfg.indicator == Indicator::smoothed
                           ? smoothed_membership(preds, thresholds.samples(), cfg.lambda)
                           : tape.constant(mc_hard_membership(p, thresholds));
    const Matrix counts = class_counts(labels, m);
    const Var tp = column_sum(mul(member, tape.constant(one_hot(labels, m))));
    // predicted-positive mass per class: tp + fp
    const Var predicted = column_sum(member);

    Var scores;
    switch (cfg.score_kind) {
        case ScoreKind::accuracy: {
            // tp + tn = tp + (n - n_j) - fp = 2 tp + (n - n_j) - predicted
            Matrix negatives(1, m);
            for (std::size_t j = 0; j < m; ++j) {
                negatives(0, j) = n - counts(0, j);
            }
            const Var correct = add(scale(tp, 2.0), sub(tape.constant(negatives), predicted));
            scores = scale(correct, 1.0 / n);
            break;
        }
        case ScoreKind::precision:
            scores = div(tp, add_scalar(predicted, kScoreEpsilon));
            break;
        case ScoreKind::recall: {
            Matrix den = counts;
            for (double& v : den.data()) {
                v += kScoreEpsilon;
            }
            scores = div(tp, tape.constant(std::move(den)));
            break;
        }
        case ScoreKind::f1:
            // 2tp + fp + fn = predicted + n_j
            scores = div(scale(tp, 2.0),
                         add_scalar(add(predicted, tape.constant(counts)), kScoreEpsilon));
            break;
    }
    return scale(mean(scores), -1.0);
}

Var cross_entropy_loss(Var preds, std::span<const HardLabel> labels,
                       const std::optional<ClassWeights>& weights) {
    Tape& tape = *preds.tape();
    const Matrix& p = preds.value();
    check_batch(p, labels);
    const std::size_t m = p.cols();
    if (weights && weights->w.size() != m) {
        throw std::invalid_argument("cross_entropy: weight count does not match m");
    }
    Matrix pick(labels.size(), m);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const std::size_t y = labels[i].class_index;
        pick(i, y) = weights ? weights->w[y] : 1.0;
    }
    const Var logp = log_clamped(preds, kLogFloor);
    return scale(sum(mul(logp, tape.constant(std::move(pick)))),
                 -1.0 / static_cast<double>(labels.size()));
}

Var squared_loss(Var preds, std::span<const HardLabel> labels) {
    Tape& tape = *preds.tape();
    const Matrix& p = preds.value();
    check_batch(p, labels);
    const Var diff = sub(preds, tape.constant(one_hot(labels, p.cols())));
    return scale(sum(square(diff)), 1.0 / static_cast<double>(labels.size()));
}

}  // namespace ad

std::string_view to_string(LossKind kind) {
    switch (kind) {
        case LossKind::multisol: return "multisol";
        case LossKind::cross_entropy: return "ce";
        case LossKind::weighted_cross_entropy: return "weighted_ce";
        case LossKind::squared: return "squared";
    }
    return "unknown";
}

LossKind parse_loss_kind(std::string_view name) {
    for (auto kind : {LossKind::multisol, LossKind::cross_entropy,
                      LossKind::weighted_cross_entropy, LossKind::squared}) {
        if (to_string(kind) == name) {
            return kind;
        }
    }
    throw std::invalid_argument("unknown loss '" + std::string(name) +
                                "' (expected multisol, ce, weighted_ce or squared)");
}

std::string LossSelector::name() const {
    if (kind == LossKind::multisol) {
        return "multisol_" + std::string(to_string(multisol.score_kind));
    }
    return std::string(to_string(kind));
}

BoundLoss::BoundLoss(LossSelector selector, std::size_t m, std::span<const HardLabel> train_labels)
    : selector_(std::move(selector)) {
    switch (selector_.kind) {
        case LossKind::multisol:
            thresholds_ = make_thresholds(selector_.multisol, m);
            break;
        case LossKind::weighted_cross_entropy:
            weights_ = ClassWeights::balanced(train_labels, m);
            break;
        case LossKind::cross_entropy:
        case LossKind::squared:
            break;
    }
}

ad::Var BoundLoss::apply(ad::Var preds, std::span<const HardLabel> labels) const {
    switch (selector_.kind) {
        case LossKind::multisol:
            return ad::multisol_loss(preds, labels, selector_.multisol, *thresholds_);
        case LossKind::cross_entropy:
            return ad::cross_entropy_loss(preds, labels, std::nullopt);
        case LossKind::weighted_cross_entropy:
            return ad::cross_entropy_loss(preds, labels, weights_);
        case LossKind::squared:
            return ad::squared_loss(preds, labels);
    }
    throw std::logic_error("BoundLoss: unhandled loss kind");
}

LossValue BoundLoss::evaluate(const Matrix& preds, std::span<const HardLabel> labels) const {
    switch (selector_.kind) {
        case LossKind::multisol:
            return multisol(preds, labels, selector_.multisol, *thresholds_);
        case LossKind::cross_entropy:
            return cross_entropy(preds, labels, std::nullopt);
        case LossKind::weighted_cross_entropy:
            return cross_entropy(preds, labels, weights_);
        case LossKind::squared:
            return squared_loss(preds, labels);
    }
    throw std::logic_error("BoundLoss: unhandled loss kind");
}

}  // namespace msol
