#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "multisol/dirichlet.hpp"
#include "multisol/matrix.hpp"
#include "multisol/simplex.hpp"

namespace msol {

/// One-vs-rest counts for a single class at a fixed threshold.
struct HardConfusion {
    std::size_t tn = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    std::size_t tp = 0;

    std::size_t total() const noexcept { return tn + fp + fn + tp; }
    friend bool operator==(const HardConfusion&, const HardConfusion&) = default;
};

/// Expected one-vs-rest counts under the threshold prior.
struct SoftConfusion {
    double tn = 0.0;
    double fp = 0.0;
    double fn = 0.0;
    double tp = 0.0;

    double total() const noexcept { return tn + fp + fn + tp; }
};

/// Stacks simplex points as the rows of an n x m matrix (validated upstream).
Matrix stack_points(std::span<const SimplexPoint> points);

/// Per-class one-vs-rest confusion matrices under the tie-broken natural rule.
std::vector<HardConfusion> hard_confusions(const Matrix& preds, std::span<const HardLabel> labels,
                                           const SimplexPoint& tau);
std::vector<HardConfusion> hard_confusions(std::span<const SimplexPoint> preds,
                                           std::span<const HardLabel> labels,
                                           const SimplexPoint& tau);
/// Same, from already-decided classes.
std::vector<HardConfusion> hard_confusions(std::span<const std::size_t> decided,
                                           std::span<const HardLabel> labels, std::size_t m);

/// Sigmoid-product estimate of P(pred in R_j(tau)) averaged over the threshold set.
std::vector<double> smoothed_membership(const SimplexPoint& pred, const ThresholdSet& thresholds,
                                        double lambda);
/// Batch form: one row of membership estimates per prediction row.
Matrix smoothed_membership(const Matrix& preds, const ThresholdSet& thresholds, double lambda);

/// Unsmoothed Monte-Carlo fraction of thresholds whose open region contains pred.
std::vector<double> mc_hard_membership(const SimplexPoint& pred, const ThresholdSet& thresholds);
Matrix mc_hard_membership(const Matrix& preds, const ThresholdSet& thresholds);

/// tp/fn accumulate membership (resp. its complement) over class-j samples,
/// fp/tn over the remaining ones, so each matrix totals n.
std::vector<SoftConfusion> confusions_from_membership(const Matrix& membership,
                                                      std::span<const HardLabel> labels);

std::vector<SoftConfusion> soft_confusions(const Matrix& preds, std::span<const HardLabel> labels,
                                           const ThresholdSet& thresholds, double lambda);
std::vector<SoftConfusion> soft_confusions(std::span<const SimplexPoint> preds,
                                           std::span<const HardLabel> labels,
                                           const ThresholdSet& thresholds, double lambda);

/// Throws unless labels are non-empty, match the row count, and index below m.
void check_batch(const Matrix& preds, std::span<const HardLabel> labels);

}  // namespace msol
