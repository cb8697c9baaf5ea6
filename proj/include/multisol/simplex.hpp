#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "multisol/matrix.hpp"

namespace msol {

/// A point of the (m-1)-simplex: m non-negative entries summing to one.
/// Used both for network outputs and for multidimensional thresholds.
///
/// Construction accepts sums within 1e-9 of one as-is, renormalizes sums
/// off by less than 1e-6 (softmax round-off), and rejects anything else.
class SimplexPoint {
public:
    static constexpr double kSumTolerance = 1e-9;
    static constexpr double kRenormalizeTolerance = 1e-6;

    explicit SimplexPoint(std::vector<double> values);

    static SimplexPoint barycenter(std::size_t m);

    std::size_t dim() const noexcept { return values_.size(); }
    double operator[](std::size_t j) const noexcept { return values_[j]; }
    std::span<const double> values() const noexcept { return values_; }

    friend bool operator==(const SimplexPoint&, const SimplexPoint&) = default;

private:
    std::vector<double> values_;
};

struct HardLabel {
    std::size_t class_index = 0;
    friend bool operator==(const HardLabel&, const HardLabel&) = default;
};

struct ClassDecision {
    HardLabel label;
    /// True when z lies on a region boundary and the tie rule picked the class.
    bool on_boundary = false;
};

/// One-hot vertex e_j of the (m-1)-simplex.
SimplexPoint vertex(std::size_t j, std::size_t m);

/// Pairwise threshold differences D(j,k) = tau^j - tau^k. The natural
/// classification rule only ever reads tau through this matrix.
class ThresholdDifferences {
public:
    explicit ThresholdDifferences(const SimplexPoint& tau);
    /// Takes an explicit m x m matrix; it must be antisymmetric.
    explicit ThresholdDifferences(Matrix differences);

    std::size_t dim() const noexcept { return d_.rows(); }
    double operator()(std::size_t j, std::size_t k) const noexcept { return d_(j, k); }
    const Matrix& matrix() const noexcept { return d_; }

private:
    Matrix d_;
};

/// z belongs to the open region R_j(tau): z^j - z^k > tau^j - tau^k for all k != j.
bool in_region(const SimplexPoint& z, const SimplexPoint& tau, std::size_t j);
bool in_region(std::span<const double> z, std::span<const double> tau, std::size_t j);

/// Natural threshold rule. Points inside an open region get that region's
/// class; boundary points go to argmax_j (z^j - tau^j), lowest index first.
ClassDecision classify(const SimplexPoint& z, const SimplexPoint& tau);
ClassDecision classify(const SimplexPoint& z, const ThresholdDifferences& diffs);
ClassDecision classify(std::span<const double> z, std::span<const double> tau);

/// classify(z, barycenter).
ClassDecision argmax_rule(const SimplexPoint& z);

/// Hard class of every row of `preds` under threshold `tau`.
std::vector<std::size_t> classify_rows(const Matrix& preds, std::span<const double> tau);

}  // namespace msol
