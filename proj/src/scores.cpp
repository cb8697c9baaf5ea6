#include "multisol/scores.hpp"

#include <stdexcept>

namespace msol {

std::string_view to_string(ScoreKind kind) {
    switch (kind) {
        case ScoreKind::accuracy: return "accuracy";
        case ScoreKind::precision: return "precision";
        case ScoreKind::recall: return "recall";
        case ScoreKind::f1: return "f1";
    }
    return "unknown";
}

ScoreKind parse_score_kind(std::string_view name) {
    for (auto kind : kAllScores) {
        if (to_string(kind) == name) {
            return kind;
        }
    }
    throw std::invalid_argument("unknown score '" + std::string(name) +
                                "' (expected accuracy, precision, recall or f1)");
}

namespace {

template <typename CM>
double checked_score(ScoreKind kind, const CM& cm) {
    if (cm.total() <= 0) {
        throw std::invalid_argument("score: empty confusion matrix");
    }
    return detail::score_of(kind, cm);
}

template <typename CM>
double macro(ScoreKind kind, std::span<const CM> cms) {
    if (cms.empty()) {
        throw std::invalid_argument("macro_score: no confusion matrices");
    }
    double acc = 0.0;
    for (const auto& cm : cms) {
        acc += checked_score(kind, cm);
    }
    return acc / static_cast<double>(cms.size());
}

}  // namespace

double score(ScoreKind kind, const HardConfusion& cm) { return checked_score(kind, cm); }
double score(ScoreKind kind, const SoftConfusion& cm) { return checked_score(kind, cm); }

double macro_score(ScoreKind kind, std::span<const HardConfusion> cms) { return macro(kind, cms); }
double macro_score(ScoreKind kind, std::span<const SoftConfusion> cms) { return macro(kind, cms); }

}  // namespace msol
