#include "multisol/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace msol {

namespace {

constexpr double kEntrySlack = 1e-12;

void check_dims(std::size_t a, std::size_t b) {
    if (a != b) {
        throw std::invalid_argument("dimension mismatch: " + std::to_string(a) + " vs " +
                                    std::to_string(b));
    }
}

void check_class(std::size_t j, std::size_t m) {
    if (j >= m) {
        throw std::out_of_range("class index " + std::to_string(j) + " out of range for m=" +
                                std::to_string(m));
    }
}

// Both the region test and the tie rule are phrased through D(j,k) only.
template <typename Diff>
bool in_region_impl(std::span<const double> z, Diff&& diff, std::size_t j) {
    for (std::size_t k = 0; k < z.size(); ++k) {
        if (k != j && !(z[j] - z[k] > diff(j, k))) {
            return false;
        }
    }
    return true;
}

template <typename Diff>
ClassDecision classify_impl(std::span<const double> z, Diff&& diff) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < z.size(); ++j) {
        // j beats best iff z^j - tau^j > z^best - tau^best
        if (z[j] - z[best] > diff(j, best)) {
            best = j;
        }
    }
    return ClassDecision{HardLabel{best}, !in_region_impl(z, diff, best)};
}

}  // namespace

SimplexPoint::SimplexPoint(std::vector<double> values) : values_(std::move(values)) {
    if (values_.size() < 2) {
        throw std::invalid_argument("SimplexPoint: need at least 2 classes");
    }
    for (double& v : values_) {
        if (!std::isfinite(v) || v < -kEntrySlack || v > 1.0 + kEntrySlack) {
            throw std::invalid_argument("SimplexPoint: entry outside [0,1]: " + std::to_string(v));
        }
        v = std::min(1.0, std::max(0.0, v));
    }
    const double sum = std::accumulate(values_.begin(), values_.end(), 0.0);
    const double dev = std::abs(sum - 1.0);
    if (dev > kRenormalizeTolerance) {
        throw std::invalid_argument("SimplexPoint: entries sum to " + std::to_string(sum));
    }
    if (dev > kSumTolerance) {
        for (double& v : values_) {
            v /= sum;
        }
    }
}

SimplexPoint SimplexPoint::barycenter(std::size_t m) {
    if (m < 2) {
        throw std::invalid_argument("barycenter: need at least 2 classes");
    }
    return SimplexPoint(std::vector<double>(m, 1.0 / static_cast<double>(m)));
}

SimplexPoint vertex(std::size_t j, std::size_t m) {
    if (m < 2) {
        throw std::invalid_argument("vertex: need at least 2 classes");
    }
    check_class(j, m);
    std::vector<double> v(m, 0.0);
    v[j] = 1.0;
    return SimplexPoint(std::move(v));
}

ThresholdDifferences::ThresholdDifferences(const SimplexPoint& tau) : d_(tau.dim(), tau.dim()) {
    for (std::size_t j = 0; j < tau.dim(); ++j) {
        for (std::size_t k = 0; k < tau.dim(); ++k) {
            d_(j, k) = tau[j] - tau[k];
        }
    }
}

ThresholdDifferences::ThresholdDifferences(Matrix differences) : d_(std::move(differences)) {
    if (d_.rows() != d_.cols() || d_.rows() < 2) {
        throw std::invalid_argument("ThresholdDifferences: need a square matrix with m >= 2");
    }
    for (std::size_t j = 0; j < d_.rows(); ++j) {
        for (std::size_t k = 0; k < d_.cols(); ++k) {
            if (d_(j, k) != -d_(k, j)) {
                throw std::invalid_argument("ThresholdDifferences: matrix is not antisymmetric");
            }
        }
    }
}

bool in_region(std::span<const double> z, std::span<const double> tau, std::size_t j) {
    check_dims(z.size(), tau.size());
    check_class(j, z.size());
    return in_region_impl(z, [&](std::size_t a, std::size_t b) { return tau[a] - tau[b]; }, j);
}

bool in_region(const SimplexPoint& z, const SimplexPoint& tau, std::size_t j) {
    return in_region(z.values(), tau.values(), j);
}

ClassDecision classify(std::span<const double> z, std::span<const double> tau) {
    check_dims(z.size(), tau.size());
    return classify_impl(z, [&](std::size_t a, std::size_t b) { return tau[a] - tau[b]; });
}

ClassDecision classify(const SimplexPoint& z, const SimplexPoint& tau) {
    return classify(z.values(), tau.values());
}

ClassDecision classify(const SimplexPoint& z, const ThresholdDifferences& diffs) {
    check_dims(z.dim(), diffs.dim());
    return classify_impl(z.values(), diffs);
}

ClassDecision argmax_rule(const SimplexPoint& z) {
    return classify(z, SimplexPoint::barycenter(z.dim()));
}

std::vector<std::size_t> classify_rows(const Matrix& preds, std::span<const double> tau) {
    check_dims(preds.cols(), tau.size());
    std::vector<std::size_t> out(preds.rows());
    for (std::size_t i = 0; i < preds.rows(); ++i) {
        out[i] = classify(preds.row(i), tau).label.class_index;
    }
    return out;
}

}  // namespace msol
