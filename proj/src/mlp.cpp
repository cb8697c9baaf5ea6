#include "multisol/mlp.hpp"

#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>

#include "multisol/error.hpp"
#include "multisol/rng.hpp"

namespace msol {

namespace {

constexpr std::array<char, 8> kMagic = {'M', 'S', 'O', 'L', 'M', 'L', 'P', '1'};

void put_u64(std::ostream& out, std::uint64_t v) {
    std::array<unsigned char, 8> b{};
    for (std::size_t i = 0; i < 8; ++i) {
        b[i] = static_cast<unsigned char>(v >> (8 * i));
    }
    out.write(reinterpret_cast<const char*>(b.data()), 8);
}

void put_u32(std::ostream& out, std::uint32_t v) {
    std::array<unsigned char, 4> b{};
    for (std::size_t i = 0; i < 4; ++i) {
        b[i] = static_cast<unsigned char>(v >> (8 * i));
    }
    out.write(reinterpret_cast<const char*>(b.data()), 4);
}

void put_f64(std::ostream& out, double v) {
    std::uint64_t bits = 0;
    std::memcpy(&bits, &v, 8);
    put_u64(out, bits);
}

template <std::size_t N>
std::uint64_t get_le(std::istream& in, const std::filesystem::path& path) {
    std::array<unsigned char, N> b{};
    if (!in.read(reinterpret_cast<char*>(b.data()), N)) {
        throw FormatError(path.string() + ": truncated checkpoint");
    }
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < N; ++i) {
        v |= std::uint64_t{b[i]} << (8 * i);
    }
    return v;
}

double get_f64(std::istream& in, const std::filesystem::path& path) {
    const std::uint64_t bits = get_le<8>(in, path);
    double v = 0.0;
    std::memcpy(&v, &bits, 8);
    return v;
}

}  // namespace

void MlpModel::check_sizes() const {
    if (sizes_.size() < 2) {
        throw std::invalid_argument("MlpModel: need at least input and output sizes");
    }
    for (auto s : sizes_) {
        if (s == 0) {
            throw std::invalid_argument("MlpModel: layer sizes must be positive");
        }
    }
    if (sizes_.back() < 2) {
        throw std::invalid_argument("MlpModel: need at least 2 output classes");
    }
}

MlpModel::MlpModel(std::vector<std::size_t> sizes, std::uint64_t seed) : sizes_(std::move(sizes)) {
    check_sizes();
    Rng rng(seed);
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
        DenseLayer layer{Matrix(sizes_[l], sizes_[l + 1]), Matrix(1, sizes_[l + 1])};
        const double bound = std::sqrt(6.0 / static_cast<double>(sizes_[l]));
        for (double& w : layer.weights.data()) {
            w = bound * (2.0 * rng.uniform() - 1.0);
        }
        layers_.push_back(std::move(layer));
    }
}

MlpModel MlpModel::zeros(std::vector<std::size_t> sizes) {
    MlpModel model;
    model.sizes_ = std::move(sizes);
    model.check_sizes();
    for (std::size_t l = 0; l + 1 < model.sizes_.size(); ++l) {
        model.layers_.push_back(
            DenseLayer{Matrix(model.sizes_[l], model.sizes_[l + 1]), Matrix(1, model.sizes_[l + 1])});
    }
    return model;
}

std::size_t MlpModel::parameter_count() const {
    std::size_t n = 0;
    for (const auto& layer : layers_) {
        n += layer.weights.size() + layer.bias.size();
    }
    return n;
}

std::vector<Matrix*> MlpModel::parameters() {
    std::vector<Matrix*> out;
    for (auto& layer : layers_) {
        out.push_back(&layer.weights);
        out.push_back(&layer.bias);
    }
    return out;
}

MlpModel::Recorded MlpModel::record(ad::Tape& tape, const Matrix& inputs) const {
    if (inputs.cols() != input_dim()) {
        throw std::invalid_argument("MlpModel: input width " + std::to_string(inputs.cols()) +
                                    " does not match model input " + std::to_string(input_dim()));
    }
    Recorded rec;
    ad::Var h = tape.constant(inputs);
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        const ad::Var w = tape.variable(layers_[l].weights);
        const ad::Var b = tape.variable(layers_[l].bias);
        rec.params.push_back(w);
        rec.params.push_back(b);
        h = ad::add_row(ad::matmul(h, w), b);
        if (l + 1 < layers_.size()) {
            h = ad::relu(h);
        }
    }
    rec.logits = h;
    rec.probs = ad::softmax_rows(h);
    return rec;
}

Matrix MlpModel::forward(const Matrix& inputs) const {
    if (inputs.cols() != input_dim()) {
        throw std::invalid_argument("MlpModel: input width " + std::to_string(inputs.cols()) +
                                    " does not match model input " + std::to_string(input_dim()));
    }
    ad::Tape tape;
    ad::Var h = tape.constant(inputs);
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        h = ad::add_row(ad::matmul(h, tape.constant(layers_[l].weights)),
                        tape.constant(layers_[l].bias));
        if (l + 1 < layers_.size()) {
            h = ad::relu(h);
        }
    }
    return ad::softmax_rows(h).value();
}

void MlpModel::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    }
    out.write(kMagic.data(), kMagic.size());
    put_u32(out, static_cast<std::uint32_t>(sizes_.size()));
    for (auto s : sizes_) {
        put_u64(out, s);
    }
    for (const auto& layer : layers_) {
        for (double w : layer.weights.data()) {
            put_f64(out, w);
        }
        for (double b : layer.bias.data()) {
            put_f64(out, b);
        }
    }
    if (!out) {
        throw std::runtime_error("write failed: " + path.string());
    }
}

MlpModel MlpModel::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open " + path.string());
    }
    std::array<char, 8> magic{};
    if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
        throw FormatError(path.string() + ": not a multisol MLP checkpoint");
    }
    const auto count = get_le<4>(in, path);
    if (count < 2 || count > 64) {
        throw FormatError(path.string() + ": implausible layer count " + std::to_string(count));
    }
    std::vector<std::size_t> sizes;
    for (std::uint64_t i = 0; i < count; ++i) {
        sizes.push_back(static_cast<std::size_t>(get_le<8>(in, path)));
    }
    MlpModel model = zeros(std::move(sizes));
    for (auto& layer : model.layers_) {
        for (double& w : layer.weights.data()) {
            w = get_f64(in, path);
        }
        for (double& b : layer.bias.data()) {
            b = get_f64(in, path);
        }
    }
    if (in.peek() != std::char_traits<char>::eof()) {
        throw FormatError(path.string() + ": trailing bytes after checkpoint payload");
    }
    return model;
}

bool operator==(const MlpModel& a, const MlpModel& b) {
    if (a.sizes_ != b.sizes_) {
        return false;
    }
    for (std::size_t l = 0; l < a.layers_.size(); ++l) {
        if (a.layers_[l].weights != b.layers_[l].weights || a.layers_[l].bias != b.layers_[l].bias) {
            return false;
        }
    }
    return true;
}

void Adam::step(const std::vector<Matrix*>& params, const std::vector<Matrix>& grads) {
    if (params.size() != grads.size()) {
        throw std::invalid_argument("Adam: parameter/gradient count mismatch");
    }
    if (m_.empty()) {
        for (const Matrix* p : params) {
            m_.emplace_back(p->rows(), p->cols());
            v_.emplace_back(p->rows(), p->cols());
        }
    }
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t k = 0; k < params.size(); ++k) {
        auto& p = params[k]->data();
        const auto& g = grads[k].data();
        auto& m = m_[k].data();
        auto& v = v_[k].data();
        if (g.size() != p.size()) {
            throw std::invalid_argument("Adam: gradient shape mismatch");
        }
        for (std::size_t i = 0; i < p.size(); ++i) {
            m[i] = beta1_ * m[i] + (1.0 - beta1_) * g[i];
            v[i] = beta2_ * v[i] + (1.0 - beta2_) * g[i] * g[i];
            p[i] -= lr_ * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps_);
        }
    }
}

}  // namespace msol
