#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace msol {

/// Seedable generator with a fixed, documented algorithm: 64-bit Mersenne
/// Twister (std::mt19937_64, whose output sequence the standard pins down)
/// plus hand-written variate transforms. The standard library distributions
/// are implementation-defined, so none of them are used here; sequences are
/// therefore identical across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform on the open interval (0, 1), 53-bit resolution.
    double uniform_open();

    /// Uniform on [0, 1).
    double uniform();

    /// Uniform integer in [0, bound), by rejection.
    std::uint64_t below(std::uint64_t bound);

    /// Standard normal via Box-Muller (no cached second variate).
    double normal();

    /// Gamma(shape, 1). Marsaglia-Tsang squeeze for shape >= 1; for shape < 1
    /// draws Gamma(shape + 1) and scales by U^(1/shape).
    double gamma(double shape);

    /// In-place Fisher-Yates shuffle.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 engine_;
};

/// SplitMix64 finalizer; derives independent stream seeds from (seed, stream).
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace msol
