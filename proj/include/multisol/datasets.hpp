#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "multisol/matrix.hpp"
#include "multisol/simplex.hpp"

namespace msol {

struct Dataset {
    Matrix features;  ///< n x d
    std::vector<HardLabel> labels;
    std::size_t num_classes = 0;
    std::string split = "all";

    std::size_t size() const noexcept { return labels.size(); }
    std::size_t dim() const noexcept { return features.cols(); }
    std::vector<std::size_t> class_counts() const;
    /// Rows in the given order.
    Dataset subset(std::span<const std::size_t> rows, std::string tag) const;
    /// Throws if the label count, feature rows, or label range disagree.
    void validate() const;
};

/// Isotropic Gaussian clusters whose means sit evenly on a circle of the
/// given radius in the first two feature coordinates.
struct BlobSpec {
    std::vector<std::size_t> counts;  ///< points per class; m = counts.size()
    double radius = 2.0;
    double stddev = 0.3;
    std::size_t dim = 2;
    std::uint64_t seed = 0;
};

Dataset make_blobs(const BlobSpec& spec);

/// IDX image/label pair (MNIST layout). Pixels are scaled by 1/255.
Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels);

/// Header row required; every other column becomes a feature in file order.
/// Labels must be integers in [0, num_classes) when num_classes is given,
/// otherwise num_classes = max label + 1.
Dataset load_csv(const std::filesystem::path& path, const std::string& label_column,
                 std::optional<std::size_t> num_classes = std::nullopt);
void write_csv(const Dataset& data, const std::filesystem::path& path,
               const std::string& label_column = "label");

struct Splits {
    Dataset train;
    Dataset validation;
    Dataset test;
};

/// Fractions are (train, validation, test), non-negative, summing to 1.
/// The stratified variant applies the rounding per class, so each split's
/// class counts stay within one sample of the global proportions.
Splits split(const Dataset& data, std::array<double, 3> fractions, std::uint64_t seed,
             bool stratified);

}  // namespace msol
