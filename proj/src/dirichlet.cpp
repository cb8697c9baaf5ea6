#include "multisol/dirichlet.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>

#include "multisol/error.hpp"
#include "multisol/rng.hpp"

namespace msol {

DirichletPrior::DirichletPrior(std::vector<double> alpha) : alpha_(std::move(alpha)) {
    if (alpha_.size() < 2) {
        throw std::invalid_argument("DirichletPrior: need at least 2 classes");
    }
    for (double a : alpha_) {
        if (!(a > 0.0) || !std::isfinite(a)) {
            throw std::invalid_argument("DirichletPrior: concentration must be positive, got " +
                                        std::to_string(a));
        }
    }
}

DirichletPrior DirichletPrior::symmetric(std::size_t m, double alpha) {
    return DirichletPrior(std::vector<double>(m, alpha));
}

bool DirichletPrior::is_symmetric() const noexcept {
    for (double a : alpha_) {
        if (a != alpha_.front()) {
            return false;
        }
    }
    return true;
}

double DirichletPrior::mean(std::size_t i) const {
    const double total = std::accumulate(alpha_.begin(), alpha_.end(), 0.0);
    return alpha_.at(i) / total;
}

double DirichletPrior::variance(std::size_t i) const {
    const double total = std::accumulate(alpha_.begin(), alpha_.end(), 0.0);
    const double a = alpha_.at(i);
    return a * (total - a) / (total * total * (total + 1.0));
}

ThresholdSet::ThresholdSet(DirichletPrior prior, std::uint64_t seed, Matrix samples)
    : prior_(std::move(prior)), seed_(seed), samples_(std::move(samples)) {
    if (samples_.rows() == 0) {
        throw std::invalid_argument("ThresholdSet: need at least one threshold");
    }
    if (samples_.cols() != prior_.dim()) {
        throw std::invalid_argument("ThresholdSet: sample dimension does not match prior");
    }
}

SimplexPoint ThresholdSet::sample(std::size_t r) const {
    const auto row = samples_.row(r);
    return SimplexPoint(std::vector<double>(row.begin(), row.end()));
}

void ThresholdSet::save(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    }
    out << "# multisol-thresholds m=" << dim() << " n=" << size() << " seed=" << seed_
        << " alpha=";
    char buf[40];
    for (std::size_t i = 0; i < dim(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g", prior_.alpha()[i]);
        out << (i ? "," : "") << buf;
    }
    out << '\n';
    for (std::size_t r = 0; r < size(); ++r) {
        for (std::size_t j = 0; j < dim(); ++j) {
            std::snprintf(buf, sizeof buf, "%.17g", samples_(r, j));
            out << (j ? "," : "") << buf;
        }
        out << '\n';
    }
    if (!out) {
        throw std::runtime_error("write failed: " + path.string());
    }
}

namespace {

std::vector<double> parse_doubles(const std::string& text, const std::string& where) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(cell, &used);
        } catch (const std::exception&) {
            throw FormatError(where + ": not a number: '" + cell + "'");
        }
        if (used != cell.size()) {
            throw FormatError(where + ": trailing characters in '" + cell + "'");
        }
        out.push_back(v);
    }
    return out;
}

}  // namespace

ThresholdSet ThresholdSet::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open " + path.string());
    }
    std::string header;
    std::getline(in, header);
    std::size_t m = 0;
    std::size_t n = 0;
    unsigned long long seed = 0;
    const auto alpha_pos = header.find("alpha=");
    if (std::sscanf(header.c_str(), "# multisol-thresholds m=%zu n=%zu seed=%llu", &m, &n, &seed) !=
            3 ||
        alpha_pos == std::string::npos) {
        throw FormatError(path.string() + ": missing threshold-set header");
    }
    auto alpha = parse_doubles(header.substr(alpha_pos + 6), path.string() + " header");
    if (alpha.size() != m) {
        throw FormatError(path.string() + ": alpha has " + std::to_string(alpha.size()) +
                          " entries, expected " + std::to_string(m));
    }
    Matrix samples(n, m);
    std::string line;
    for (std::size_t r = 0; r < n; ++r) {
        if (!std::getline(in, line)) {
            throw FormatError(path.string() + ": truncated after " + std::to_string(r) + " rows");
        }
        const auto row = parse_doubles(line, path.string() + " row " + std::to_string(r + 1));
        if (row.size() != m) {
            throw FormatError(path.string() + ": row " + std::to_string(r + 1) + " has " +
                              std::to_string(row.size()) + " values");
        }
        SimplexPoint check(row);
        for (std::size_t j = 0; j < m; ++j) {
            samples(r, j) = row[j];
        }
    }
    return ThresholdSet(DirichletPrior(std::move(alpha)), seed, std::move(samples));
}

ThresholdSet sample_thresholds(const DirichletPrior& prior, std::size_t n, std::uint64_t seed) {
    if (n == 0) {
        throw std::invalid_argument("sample_thresholds: n must be at least 1");
    }
    const std::size_t m = prior.dim();
    Rng rng(seed);
    Matrix samples(n, m);
    for (std::size_t r = 0; r < n; ++r) {
        auto row = samples.row(r);
        double total = 0.0;
        do {
            total = 0.0;
            for (std::size_t j = 0; j < m; ++j) {
                row[j] = rng.gamma(prior.alpha()[j]);
                total += row[j];
            }
        } while (!(total > 0.0));  // all-underflow only happens for tiny alpha
        for (double& v : row) {
            v /= total;
        }
    }
    return ThresholdSet(prior, seed, std::move(samples));
}

std::size_t hoeffding_samples(double epsilon, double delta) {
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
        throw std::invalid_argument("hoeffding_samples: epsilon must be positive");
    }
    if (!(delta > 0.0 && delta < 1.0)) {
        throw std::invalid_argument("hoeffding_samples: delta must lie in (0, 1)");
    }
    const double bound = std::log(2.0 / delta) / (2.0 * epsilon * epsilon);
    return static_cast<std::size_t>(std::ceil(bound));
}

double log_pdf(const DirichletPrior& prior, const SimplexPoint& z) {
    if (z.dim() != prior.dim()) {
        throw std::invalid_argument("log_pdf: dimension mismatch");
    }
    const auto alpha = prior.alpha();
    double total = 0.0;
    double result = 0.0;
    for (std::size_t i = 0; i < alpha.size(); ++i) {
        total += alpha[i];
        result -= std::lgamma(alpha[i]);
    }
    result += std::lgamma(total);
    for (std::size_t i = 0; i < alpha.size(); ++i) {
        if (alpha[i] == 1.0) {
            continue;
        }
        if (z[i] == 0.0) {
            if (alpha[i] > 1.0) {
                return -std::numeric_limits<double>::infinity();
            }
            throw std::domain_error("log_pdf: density diverges on the boundary for alpha < 1");
        }
        result += (alpha[i] - 1.0) * std::log(z[i]);
    }
    return result;
}

}  // namespace msol
