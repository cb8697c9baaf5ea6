#include "multisol/threshold_tools.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>

#include "multisol/error.hpp"
#include "multisol/soft_confusion.hpp"

namespace msol {

namespace {

void compositions(std::size_t remaining, std::size_t slot, std::vector<std::size_t>& current,
                  std::vector<std::vector<std::size_t>>& out) {
    if (slot + 1 == current.size()) {
        current[slot] = remaining;
        out.push_back(current);
        return;
    }
    for (std::size_t c = remaining + 1; c-- > 0;) {
        current[slot] = c;
        compositions(remaining - c, slot + 1, current, out);
    }
}

}  // namespace

BarycentricGrid::BarycentricGrid(std::size_t resolution, std::size_t m) : k_(resolution) {
    if (m < 2) {
        throw std::invalid_argument("BarycentricGrid: need at least 2 classes");
    }
    if (k_ == 0) {
        points_ = Matrix(1, m, 1.0 / static_cast<double>(m));
        return;
    }
    std::vector<std::vector<std::size_t>> comps;
    std::vector<std::size_t> current(m, 0);
    compositions(k_, 0, current, comps);
    points_ = Matrix(comps.size(), m);
    const auto k = static_cast<double>(k_);
    for (std::size_t i = 0; i < comps.size(); ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            points_(i, j) = static_cast<double>(comps[i][j]) / k;
        }
    }
}

std::size_t BarycentricGrid::expected_size(std::size_t resolution, std::size_t m) {
    if (resolution == 0) {
        return 1;
    }
    // C(k + m - 1, m - 1), built up incrementally so every step is exact
    std::size_t result = 1;
    for (std::size_t i = 1; i < m; ++i) {
        result = result * (resolution + i) / i;
    }
    return result;
}

SimplexPoint BarycentricGrid::point(std::size_t i) const {
    const auto row = points_.row(i);
    return SimplexPoint(std::vector<double>(row.begin(), row.end()));
}

std::string_view to_string(ScanMetric metric) {
    switch (metric) {
        case ScanMetric::top1_accuracy: return "top1_accuracy";
        case ScanMetric::accuracy: return "accuracy";
        case ScanMetric::precision: return "precision";
        case ScanMetric::recall: return "recall";
        case ScanMetric::f1: return "f1";
    }
    return "unknown";
}

ScanMetric parse_scan_metric(std::string_view name) {
    for (auto metric : {ScanMetric::top1_accuracy, ScanMetric::accuracy, ScanMetric::precision,
                        ScanMetric::recall, ScanMetric::f1}) {
        if (to_string(metric) == name) {
            return metric;
        }
    }
    throw std::invalid_argument("unknown scan metric '" + std::string(name) + "'");
}

double metric_value(ScanMetric metric, std::span<const std::size_t> decided,
                    std::span<const HardLabel> labels, std::size_t m) {
    if (metric == ScanMetric::top1_accuracy) {
        if (decided.empty() || decided.size() != labels.size()) {
            throw std::invalid_argument("metric_value: empty or mismatched batch");
        }
        std::size_t correct = 0;
        for (std::size_t i = 0; i < decided.size(); ++i) {
            correct += decided[i] == labels[i].class_index ? 1 : 0;
        }
        return static_cast<double>(correct) / static_cast<double>(decided.size());
    }
    const auto cms = hard_confusions(decided, labels, m);
    switch (metric) {
        case ScanMetric::accuracy: return macro_score(ScoreKind::accuracy, cms);
        case ScanMetric::precision: return macro_score(ScoreKind::precision, cms);
        case ScanMetric::recall: return macro_score(ScoreKind::recall, cms);
        case ScanMetric::f1: return macro_score(ScoreKind::f1, cms);
        case ScanMetric::top1_accuracy: break;
    }
    return 0.0;
}

SimplexPoint ThresholdScanResult::best_threshold() const {
    const auto row = thresholds.row(best_index);
    return SimplexPoint(std::vector<double>(row.begin(), row.end()));
}

ThresholdScanResult scan(const Matrix& preds, std::span<const HardLabel> labels,
                         const BarycentricGrid& grid, ScanMetric metric) {
    check_batch(preds, labels);
    if (grid.dim() != preds.cols()) {
        throw std::invalid_argument("scan: grid has m=" + std::to_string(grid.dim()) +
                                    ", predictions m=" + std::to_string(preds.cols()));
    }
    ThresholdScanResult result;
    result.metric = metric;
    result.thresholds = grid.points();
    result.scores.assign(grid.size(), 0.0);
    const long long g = static_cast<long long>(grid.size());
#pragma omp parallel for schedule(dynamic, 8)
    for (long long t = 0; t < g; ++t) {
        const auto tau = grid.points().row(static_cast<std::size_t>(t));
        const auto decided = classify_rows(preds, tau);
        result.scores[static_cast<std::size_t>(t)] =
            metric_value(metric, decided, labels, preds.cols());
    }
    result.best_index = 0;
    for (std::size_t t = 1; t < result.scores.size(); ++t) {
        if (result.scores[t] > result.scores[result.best_index]) {
            result.best_index = t;
        }
    }
    result.best_score = result.scores[result.best_index];
    return result;
}

SimplexPoint near_optimal_centroid(const ThresholdScanResult& result, double relative_band) {
    if (result.scores.empty()) {
        throw std::invalid_argument("near_optimal_centroid: empty scan");
    }
    if (!(relative_band >= 0.0)) {
        throw std::invalid_argument("near_optimal_centroid: band must be non-negative");
    }
    const double cutoff = result.best_score * (1.0 - relative_band);
    const std::size_t m = result.thresholds.cols();
    std::vector<double> centroid(m, 0.0);
    double weight = 0.0;
    for (std::size_t t = 0; t < result.scores.size(); ++t) {
        const double s = result.scores[t];
        if (s < cutoff) {
            continue;
        }
        for (std::size_t j = 0; j < m; ++j) {
            centroid[j] += s * result.thresholds(t, j);
        }
        weight += s;
    }
    if (weight == 0.0) {
        // all qualifying scores are zero: fall back to the unweighted mean
        std::size_t count = 0;
        for (std::size_t t = 0; t < result.scores.size(); ++t) {
            if (result.scores[t] >= cutoff) {
                for (std::size_t j = 0; j < m; ++j) {
                    centroid[j] += result.thresholds(t, j);
                }
                ++count;
            }
        }
        weight = static_cast<double>(count);
    }
    for (double& c : centroid) {
        c /= weight;
    }
    return SimplexPoint(std::move(centroid));
}

namespace {

std::string format_double(double v) {
    if (std::isinf(v)) {
        return v < 0 ? "-inf" : "inf";
    }
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

void heatmap_export(const ThresholdScanResult& result, const std::optional<DirichletPrior>& prior,
                    const std::filesystem::path& path) {
    const std::size_t m = result.thresholds.cols();
    if (prior && prior->dim() != m) {
        throw std::invalid_argument("heatmap_export: prior dimension does not match grid");
    }
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    }
    for (std::size_t j = 0; j < m; ++j) {
        out << "tau_" << (j + 1) << ',';
    }
    out << "score";
    if (prior) {
        out << ",log_pdf";
    }
    out << '\n';
    for (std::size_t t = 0; t < result.scores.size(); ++t) {
        for (std::size_t j = 0; j < m; ++j) {
            out << format_double(result.thresholds(t, j)) << ',';
        }
        out << format_double(result.scores[t]);
        if (prior) {
            const auto row = result.thresholds.row(t);
            double lp = 0.0;
            try {
                lp = log_pdf(*prior, SimplexPoint(std::vector<double>(row.begin(), row.end())));
            } catch (const std::domain_error&) {
                lp = std::numeric_limits<double>::infinity();
            }
            out << ',' << format_double(lp);
        }
        out << '\n';
    }
    if (!out) {
        throw std::runtime_error("write failed: " + path.string());
    }
}

std::vector<HeatmapRow> read_heatmap(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open " + path.string());
    }
    std::string line;
    if (!std::getline(in, line)) {
        throw FormatError(path.string() + ": empty heatmap file");
    }
    std::size_t m = 0;
    bool has_pdf = false;
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            if (cell.rfind("tau_", 0) == 0) {
                ++m;
            } else if (cell == "log_pdf") {
                has_pdf = true;
            }
        }
    }
    std::vector<HeatmapRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        std::vector<double> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            cells.push_back(std::strtod(cell.c_str(), nullptr));
        }
        if (cells.size() != m + 1 + (has_pdf ? 1 : 0)) {
            throw FormatError(path.string() + ": malformed heatmap row '" + line + "'");
        }
        HeatmapRow row;
        row.tau.assign(cells.begin(), cells.begin() + static_cast<std::ptrdiff_t>(m));
        row.score = cells[m];
        if (has_pdf) {
            row.log_pdf = cells[m + 1];
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace msol
