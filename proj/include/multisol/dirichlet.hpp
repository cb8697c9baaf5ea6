#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "multisol/matrix.hpp"
#include "multisol/simplex.hpp"

namespace msol {

/// Dirichlet distribution Dir(alpha) on the (m-1)-simplex.
class DirichletPrior {
public:
    explicit DirichletPrior(std::vector<double> alpha);
    static DirichletPrior symmetric(std::size_t m, double alpha);

    std::size_t dim() const noexcept { return alpha_.size(); }
    std::span<const double> alpha() const noexcept { return alpha_; }
    bool is_symmetric() const noexcept;

    /// Analytic moments, used by tests and diagnostics.
    double mean(std::size_t i) const;
    double variance(std::size_t i) const;

private:
    std::vector<double> alpha_;
};

/// Thresholds drawn once from a prior and reused for every loss evaluation.
/// Stored as an N x m matrix, one simplex point per row.
class ThresholdSet {
public:
    ThresholdSet(DirichletPrior prior, std::uint64_t seed, Matrix samples);

    std::size_t size() const noexcept { return samples_.rows(); }
    std::size_t dim() const noexcept { return samples_.cols(); }
    std::uint64_t seed() const noexcept { return seed_; }
    const DirichletPrior& prior() const noexcept { return prior_; }
    const Matrix& samples() const noexcept { return samples_; }
    SimplexPoint sample(std::size_t r) const;

    /// Text format: a '#' header line carrying m, n, seed and alpha, then one
    /// threshold per line as comma-separated %.17g values.
    void save(const std::filesystem::path& path) const;
    static ThresholdSet load(const std::filesystem::path& path);

private:
    DirichletPrior prior_;
    std::uint64_t seed_;
    Matrix samples_;
};

/// n independent Dir(alpha) draws as normalized Gamma(alpha_i, 1) variates.
ThresholdSet sample_thresholds(const DirichletPrior& prior, std::size_t n, std::uint64_t seed);

/// Smallest N with N >= log(2/delta) / (2 eps^2): Monte-Carlo membership error
/// below eps with probability at least 1 - delta.
std::size_t hoeffding_samples(double epsilon, double delta);

/// Log density at z. Returns -infinity on boundary faces where alpha_i > 1,
/// throws where alpha_i < 1 (the density diverges there).
double log_pdf(const DirichletPrior& prior, const SimplexPoint& z);

}  // namespace msol
