#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "multisol/autodiff.hpp"
#include "multisol/dirichlet.hpp"
#include "multisol/scores.hpp"
#include "multisol/simplex.hpp"

namespace msol {

/// How region membership is estimated inside the loss.
enum class Indicator {
    smoothed,  ///< sigmoid products, differentiable
    hard,      ///< exact indicators averaged over thresholds; evaluation only
};

struct LossConfig {
    ScoreKind score_kind = ScoreKind::accuracy;
    double alpha = 1.0;
    std::size_t n_thresholds = 1024;
    double lambda = 10.0;
    std::uint64_t seed = 0;
    Indicator indicator = Indicator::smoothed;

    /// Throws std::invalid_argument naming the first bad field.
    void validate() const;
};

/// Guard added to precision/recall/F1 denominators on the differentiable path.
inline constexpr double kScoreEpsilon = 1e-12;
/// Probabilities are clamped from below before taking logs in cross-entropy.
inline constexpr double kLogFloor = 1e-12;

struct LossValue {
    double value = 0.0;
    /// MultiSOL only: the m per-class scores whose negated mean is `value`.
    std::vector<double> per_class_scores;
};

struct ClassWeights {
    std::vector<double> w;

    /// w_j = n / (m n_j); every class must be present.
    static ClassWeights balanced(std::span<const HardLabel> labels, std::size_t m);
};

/// Draws the threshold set described by cfg for m classes.
ThresholdSet make_thresholds(const LossConfig& cfg, std::size_t m);

/// MultiSOL: minus the macro average of the chosen score over the m expected
/// one-vs-rest confusion matrices.
LossValue multisol(const Matrix& preds, std::span<const HardLabel> labels, const LossConfig& cfg,
                   const ThresholdSet& thresholds);
/// d multisol / d preds (n x m). Requires Indicator::smoothed.
Matrix multisol_grad(const Matrix& preds, std::span<const HardLabel> labels,
                     const LossConfig& cfg, const ThresholdSet& thresholds);

/// -(1/n) sum_i w_{y_i} log p_{i, y_i}; unweighted without weights.
LossValue cross_entropy(const Matrix& preds, std::span<const HardLabel> labels,
                        const std::optional<ClassWeights>& weights = std::nullopt);
/// (1/n) sum_i ||p_i - e_{y_i}||^2.
LossValue squared_loss(const Matrix& preds, std::span<const HardLabel> labels);

namespace ad {
/// Tape-level forms used by training. `preds` holds probabilities (n x m).
Var multisol_loss(Var preds, std::span<const HardLabel> labels, const LossConfig& cfg,
                  const ThresholdSet& thresholds);
Var cross_entropy_loss(Var preds, std::span<const HardLabel> labels,
                       const std::optional<ClassWeights>& weights);
Var squared_loss(Var preds, std::span<const HardLabel> labels);
}  // namespace ad

enum class LossKind { multisol, cross_entropy, weighted_cross_entropy, squared };

std::string_view to_string(LossKind kind);
LossKind parse_loss_kind(std::string_view name);

/// A loss choice for training: which family, and the MultiSOL settings.
struct LossSelector {
    LossKind kind = LossKind::multisol;
    LossConfig multisol;

    /// Short tag such as "ce" or "multisol_f1".
    std::string name() const;
};

/// A selector bound to its run state: thresholds drawn once, class weights
/// fixed from the training labels.
class BoundLoss {
public:
    /// Thresholds are drawn from Dir(alpha) with selector.multisol.seed.
    BoundLoss(LossSelector selector, std::size_t m, std::span<const HardLabel> train_labels);

    ad::Var apply(ad::Var preds, std::span<const HardLabel> labels) const;
    LossValue evaluate(const Matrix& preds, std::span<const HardLabel> labels) const;

    const LossSelector& selector() const noexcept { return selector_; }
    const std::optional<ThresholdSet>& thresholds() const noexcept { return thresholds_; }
    const std::optional<ClassWeights>& weights() const noexcept { return weights_; }

private:
    LossSelector selector_;
    std::optional<ThresholdSet> thresholds_;
    std::optional<ClassWeights> weights_;
};

}  // namespace msol
