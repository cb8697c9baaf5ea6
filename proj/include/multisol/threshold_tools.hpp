#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "multisol/dirichlet.hpp"
#include "multisol/matrix.hpp"
#include "multisol/scores.hpp"
#include "multisol/simplex.hpp"

namespace msol {

/// All points (c_1/k, ..., c_m/k) with non-negative integers summing to k,
/// in descending lexicographic order of (c_1, ..., c_m): the first point is
/// the vertex e_0. k = 0 is the single barycenter.
class BarycentricGrid {
public:
    BarycentricGrid(std::size_t resolution, std::size_t m);

    /// C(k + m - 1, m - 1), or 1 when k = 0.
    static std::size_t expected_size(std::size_t resolution, std::size_t m);

    std::size_t resolution() const noexcept { return k_; }
    std::size_t dim() const noexcept { return points_.cols(); }
    std::size_t size() const noexcept { return points_.rows(); }
    const Matrix& points() const noexcept { return points_; }
    SimplexPoint point(std::size_t i) const;

private:
    std::size_t k_;
    Matrix points_;
};

enum class ScanMetric { top1_accuracy, accuracy, precision, recall, f1 };

std::string_view to_string(ScanMetric metric);
ScanMetric parse_scan_metric(std::string_view name);

/// Metric of already-decided classes; macro one-vs-rest for the score kinds.
double metric_value(ScanMetric metric, std::span<const std::size_t> decided,
                    std::span<const HardLabel> labels, std::size_t m);

struct ThresholdScanResult {
    ScanMetric metric = ScanMetric::top1_accuracy;
    Matrix thresholds;           ///< grid points, one per row
    std::vector<double> scores;  ///< one per grid point
    std::size_t best_index = 0;  ///< lowest index among maximal scores
    double best_score = 0.0;

    SimplexPoint best_threshold() const;
};

/// Hard-classifies the batch at every grid threshold and scores it.
ThresholdScanResult scan(const Matrix& preds, std::span<const HardLabel> labels,
                         const BarycentricGrid& grid, ScanMetric metric);

/// Score-weighted centroid of grid points scoring at least
/// best * (1 - relative_band).
SimplexPoint near_optimal_centroid(const ThresholdScanResult& result, double relative_band = 0.01);

/// CSV with header tau_1..tau_m,score[,log_pdf]; log_pdf only with a prior.
/// Boundary densities print as -inf / inf.
void heatmap_export(const ThresholdScanResult& result, const std::optional<DirichletPrior>& prior,
                    const std::filesystem::path& path);

struct HeatmapRow {
    std::vector<double> tau;
    double score = 0.0;
    std::optional<double> log_pdf;
};
std::vector<HeatmapRow> read_heatmap(const std::filesystem::path& path);

}  // namespace msol
