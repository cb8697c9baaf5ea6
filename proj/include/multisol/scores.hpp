#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "multisol/soft_confusion.hpp"

namespace msol {

enum class ScoreKind { accuracy, precision, recall, f1 };

inline constexpr ScoreKind kAllScores[] = {ScoreKind::accuracy, ScoreKind::precision,
                                           ScoreKind::recall, ScoreKind::f1};

std::string_view to_string(ScoreKind kind);
/// Accepts "accuracy", "precision", "recall", "f1"; throws otherwise.
ScoreKind parse_score_kind(std::string_view name);

namespace detail {

inline double ratio(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

template <typename CM>
double score_of(ScoreKind kind, const CM& cm) {
    const double tn = static_cast<double>(cm.tn);
    const double fp = static_cast<double>(cm.fp);
    const double fn = static_cast<double>(cm.fn);
    const double tp = static_cast<double>(cm.tp);
    switch (kind) {
        case ScoreKind::accuracy: return ratio(tp + tn, tp + tn + fp + fn);
        case ScoreKind::precision: return ratio(tp, tp + fp);
        case ScoreKind::recall: return ratio(tp, tp + fn);
        case ScoreKind::f1: return ratio(2.0 * tp, 2.0 * tp + fp + fn);
    }
    return 0.0;
}

}  // namespace detail

/// Score of a single one-vs-rest matrix. Degenerate 0/0 ratios evaluate to 0.
double score(ScoreKind kind, const HardConfusion& cm);
double score(ScoreKind kind, const SoftConfusion& cm);

/// Unweighted mean of the per-class scores.
double macro_score(ScoreKind kind, std::span<const HardConfusion> cms);
double macro_score(ScoreKind kind, std::span<const SoftConfusion> cms);

}  // namespace msol
