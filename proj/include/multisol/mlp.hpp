#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "multisol/autodiff.hpp"
#include "multisol/matrix.hpp"

namespace msol {

struct DenseLayer {
    Matrix weights;  ///< fan_in x fan_out
    Matrix bias;     ///< 1 x fan_out
};

/// Fully connected network: ReLU on hidden layers, softmax on the output.
class MlpModel {
public:
    /// sizes = {input, hidden..., classes}. Weights Kaiming-uniform
    /// (bound sqrt(6 / fan_in)), biases zero.
    MlpModel(std::vector<std::size_t> sizes, std::uint64_t seed);
    /// All parameters zero.
    static MlpModel zeros(std::vector<std::size_t> sizes);

    const std::vector<std::size_t>& sizes() const noexcept { return sizes_; }
    std::size_t input_dim() const noexcept { return sizes_.front(); }
    std::size_t num_classes() const noexcept { return sizes_.back(); }
    std::vector<DenseLayer>& layers() noexcept { return layers_; }
    const std::vector<DenseLayer>& layers() const noexcept { return layers_; }
    std::size_t parameter_count() const;

    /// Parameters in a fixed order: w0, b0, w1, b1, ...
    std::vector<Matrix*> parameters();

    struct Recorded {
        std::vector<ad::Var> params;  ///< same order as parameters()
        ad::Var logits;
        ad::Var probs;
    };
    /// Records the forward pass with the parameters as tape variables.
    Recorded record(ad::Tape& tape, const Matrix& inputs) const;

    /// Softmax outputs, one simplex point per row.
    Matrix forward(const Matrix& inputs) const;

    /// Binary checkpoint: magic "MSOLMLP1", u32 layer-size count, u64 sizes,
    /// then each layer's weights and bias as little-endian f64.
    void save(const std::filesystem::path& path) const;
    static MlpModel load(const std::filesystem::path& path);

    friend bool operator==(const MlpModel& a, const MlpModel& b);

private:
    MlpModel() = default;
    void check_sizes() const;

    std::vector<std::size_t> sizes_;
    std::vector<DenseLayer> layers_;
};

/// Adam with bias correction.
class Adam {
public:
    explicit Adam(double learning_rate, double beta1 = 0.9, double beta2 = 0.999,
                  double epsilon = 1e-8)
        : lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(epsilon) {}

    void step(const std::vector<Matrix*>& params, const std::vector<Matrix>& grads);
    std::size_t steps() const noexcept { return t_; }

private:
    double lr_;
    double beta1_;
    double beta2_;
    double eps_;
    std::size_t t_ = 0;
    std::vector<Matrix> m_;
    std::vector<Matrix> v_;
};

}  // namespace msol
