#include "multisol/soft_confusion.hpp"

#include <stdexcept>
#include <string>

#include "multisol/kernels.hpp"

namespace msol {

void check_batch(const Matrix& preds, std::span<const HardLabel> labels) {
    if (labels.empty() || preds.rows() == 0) {
        throw std::invalid_argument("empty batch");
    }
    if (preds.rows() != labels.size()) {
        throw std::invalid_argument("batch has " + std::to_string(preds.rows()) +
                                    " predictions but " + std::to_string(labels.size()) +
                                    " labels");
    }
    for (const auto& y : labels) {
        if (y.class_index >= preds.cols()) {
            throw std::out_of_range("label " + std::to_string(y.class_index) +
                                    " out of range for m=" + std::to_string(preds.cols()));
        }
    }
}

Matrix stack_points(std::span<const SimplexPoint> points) {
    if (points.empty()) {
        return {};
    }
    const std::size_t m = points.front().dim();
    Matrix out(points.size(), m);
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (points[i].dim() != m) {
            throw std::invalid_argument("stack_points: inconsistent class count");
        }
        for (std::size_t j = 0; j < m; ++j) {
            out(i, j) = points[i][j];
        }
    }
    return out;
}

std::vector<HardConfusion> hard_confusions(std::span<const std::size_t> decided,
                                           std::span<const HardLabel> labels, std::size_t m) {
    if (decided.size() != labels.size() || labels.empty()) {
        throw std::invalid_argument("hard_confusions: empty or mismatched batch");
    }
    std::vector<HardConfusion> cms(m);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const std::size_t y = labels[i].class_index;
        const std::size_t c = decided[i];
        for (std::size_t j = 0; j < m; ++j) {
            const bool positive = y == j;
            const bool predicted = c == j;
            auto& cm = cms[j];
            if (positive) {
                predicted ? ++cm.tp : ++cm.fn;
            } else {
                predicted ? ++cm.fp : ++cm.tn;
            }
        }
    }
    return cms;
}

std::vector<HardConfusion> hard_confusions(const Matrix& preds, std::span<const HardLabel> labels,
                                           const SimplexPoint& tau) {
    check_batch(preds, labels);
    const auto decided = classify_rows(preds, tau.values());
    return hard_confusions(decided, labels, preds.cols());
}

std::vector<HardConfusion> hard_confusions(std::span<const SimplexPoint> preds,
                                           std::span<const HardLabel> labels,
                                           const SimplexPoint& tau) {
    return hard_confusions(stack_points(preds), labels, tau);
}

Matrix smoothed_membership(const Matrix& preds, const ThresholdSet& thresholds, double lambda) {
    Matrix out;
    kernels::smoothed_membership_parallel(preds, thresholds.samples(), lambda, out);
    return out;
}

std::vector<double> smoothed_membership(const SimplexPoint& pred, const ThresholdSet& thresholds,
                                        double lambda) {
    const auto out = smoothed_membership(stack_points({&pred, 1}), thresholds, lambda);
    return out.data();
}

Matrix mc_hard_membership(const Matrix& preds, const ThresholdSet& thresholds) {
    Matrix out;
    kernels::hard_membership_parallel(preds, thresholds.samples(), out);
    return out;
}

std::vector<double> mc_hard_membership(const SimplexPoint& pred, const ThresholdSet& thresholds) {
    return mc_hard_membership(stack_points({&pred, 1}), thresholds).data();
}

std::vector<SoftConfusion> confusions_from_membership(const Matrix& membership,
                                                      std::span<const HardLabel> labels) {
    check_batch(membership, labels);
    const std::size_t m = membership.cols();
    std::vector<SoftConfusion> cms(m);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const std::size_t y = labels[i].class_index;
        for (std::size_t j = 0; j < m; ++j) {
            const double in = membership(i, j);
            auto& cm = cms[j];
            if (y == j) {
                cm.tp += in;
                cm.fn += 1.0 - in;
            } else {
                cm.fp += in;
                cm.tn += 1.0 - in;
            }
        }
    }
    return cms;
}

std::vector<SoftConfusion> soft_confusions(const Matrix& preds, std::span<const HardLabel> labels,
                                           const ThresholdSet& thresholds, double lambda) {
    check_batch(preds, labels);
    return confusions_from_membership(smoothed_membership(preds, thresholds, lambda), labels);
}

std::vector<SoftConfusion> soft_confusions(std::span<const SimplexPoint> preds,
                                           std::span<const HardLabel> labels,
                                           const ThresholdSet& thresholds, double lambda) {
    return soft_confusions(stack_points(preds), labels, thresholds, lambda);
}

}  // namespace msol
