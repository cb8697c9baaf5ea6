#include "multisol/datasets.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "multisol/error.hpp"
#include "multisol/rng.hpp"

namespace msol {

std::vector<std::size_t> Dataset::class_counts() const {
    std::vector<std::size_t> counts(num_classes, 0);
    for (const auto& y : labels) {
        ++counts.at(y.class_index);
    }
    return counts;
}

Dataset Dataset::subset(std::span<const std::size_t> rows, std::string tag) const {
    Dataset out;
    out.features = Matrix(rows.size(), dim());
    out.labels.reserve(rows.size());
    out.num_classes = num_classes;
    out.split = std::move(tag);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto src = features.row(rows[i]);
        std::copy(src.begin(), src.end(), out.features.row(i).begin());
        out.labels.push_back(labels.at(rows[i]));
    }
    return out;
}

void Dataset::validate() const {
    if (features.rows() != labels.size()) {
        throw std::invalid_argument("dataset: " + std::to_string(features.rows()) +
                                    " feature rows but " + std::to_string(labels.size()) +
                                    " labels");
    }
    for (const auto& y : labels) {
        if (y.class_index >= num_classes) {
            throw std::invalid_argument("dataset: label " + std::to_string(y.class_index) +
                                        " out of range for m=" + std::to_string(num_classes));
        }
    }
}

Dataset make_blobs(const BlobSpec& spec) {
    const std::size_t m = spec.counts.size();
    if (m < 2) {
        throw std::invalid_argument("make_blobs: need at least 2 classes");
    }
    if (spec.dim < 2) {
        throw std::invalid_argument("make_blobs: need at least 2 feature dimensions");
    }
    if (!(spec.stddev > 0.0)) {
        throw std::invalid_argument("make_blobs: stddev must be positive");
    }
    std::size_t n = 0;
    for (std::size_t c : spec.counts) {
        if (c == 0) {
            throw std::invalid_argument("make_blobs: every class needs at least one point");
        }
        n += c;
    }
    Rng rng(spec.seed);
    Dataset out;
    out.features = Matrix(n, spec.dim);
    out.labels.reserve(n);
    out.num_classes = m;
    std::size_t row = 0;
    for (std::size_t j = 0; j < m; ++j) {
        const double angle = 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(m);
        const double cx = spec.radius * std::cos(angle);
        const double cy = spec.radius * std::sin(angle);
        for (std::size_t p = 0; p < spec.counts[j]; ++p, ++row) {
            for (std::size_t d = 0; d < spec.dim; ++d) {
                const double centre = d == 0 ? cx : (d == 1 ? cy : 0.0);
                out.features(row, d) = centre + spec.stddev * rng.normal();
            }
            out.labels.push_back(HardLabel{j});
        }
    }
    return out;
}

namespace {

std::vector<unsigned char> read_all(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open " + path.string());
    }
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t read_be32(const std::vector<unsigned char>& buf, std::size_t offset,
                        const std::filesystem::path& path) {
    if (offset + 4 > buf.size()) {
        throw FormatError(path.string() + ": truncated IDX header");
    }
    return (std::uint32_t{buf[offset]} << 24) | (std::uint32_t{buf[offset + 1]} << 16) |
           (std::uint32_t{buf[offset + 2]} << 8) | std::uint32_t{buf[offset + 3]};
}

std::string hex(std::uint32_t v) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "0x%08X", v);
    return buf;
}

std::string trim(std::string s) {
    const auto not_space = [](unsigned char c) { return !std::isspace(c); };
    s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
    s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
    return s;
}

std::vector<std::string> split_row(const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        cells.push_back(trim(cell));
    }
    if (!line.empty() && line.back() == ',') {
        cells.emplace_back();
    }
    return cells;
}

}  // namespace

Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels) {
    constexpr std::uint32_t kImageMagic = 0x00000803;
    constexpr std::uint32_t kLabelMagic = 0x00000801;

    const auto img = read_all(images);
    const auto lab = read_all(labels);

    const auto img_magic = read_be32(img, 0, images);
    if (img_magic != kImageMagic) {
        throw FormatError(images.string() + ": bad IDX image magic " + hex(img_magic) +
                          " (expected 0x00000803)");
    }
    const auto lab_magic = read_be32(lab, 0, labels);
    if (lab_magic != kLabelMagic) {
        throw FormatError(labels.string() + ": bad IDX label magic " + hex(lab_magic) +
                          " (expected 0x00000801)");
    }
    const std::size_t n = read_be32(img, 4, images);
    const std::size_t rows = read_be32(img, 8, images);
    const std::size_t cols = read_be32(img, 12, images);
    const std::size_t n_labels = read_be32(lab, 4, labels);
    if (n != n_labels) {
        throw FormatError("IDX count mismatch: " + std::to_string(n) + " images in " +
                          images.string() + " but " + std::to_string(n_labels) + " labels in " +
                          labels.string());
    }
    const std::size_t d = rows * cols;
    if (img.size() < 16 + n * d) {
        throw FormatError(images.string() + ": truncated image data (" +
                          std::to_string(img.size()) + " bytes, need " +
                          std::to_string(16 + n * d) + ")");
    }
    if (lab.size() < 8 + n) {
        throw FormatError(labels.string() + ": truncated label data (" +
                          std::to_string(lab.size()) + " bytes, need " + std::to_string(8 + n) +
                          ")");
    }
    Dataset out;
    out.features = Matrix(n, d);
    for (std::size_t i = 0; i < n * d; ++i) {
        out.features.data()[i] = static_cast<double>(img[16 + i]) / 255.0;
    }
    out.labels.reserve(n);
    std::size_t max_label = 0;
    for (std::size_t i = 0; i < n; ++i) {
        out.labels.push_back(HardLabel{lab[8 + i]});
        max_label = std::max<std::size_t>(max_label, lab[8 + i]);
    }
    out.num_classes = n == 0 ? 0 : max_label + 1;
    return out;
}

Dataset load_csv(const std::filesystem::path& path, const std::string& label_column,
                 std::optional<std::size_t> num_classes) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open " + path.string());
    }
    std::string line;
    if (!std::getline(in, line) || trim(line).empty()) {
        throw FormatError(path.string() + ": empty file (header row required)");
    }
    const auto header = split_row(trim(line));
    const auto label_it = std::find(header.begin(), header.end(), label_column);
    if (label_it == header.end()) {
        throw FormatError(path.string() + ": unknown column '" + label_column + "'");
    }
    const auto label_idx = static_cast<std::size_t>(label_it - header.begin());
    const std::size_t d = header.size() - 1;

    std::vector<double> values;
    std::vector<HardLabel> labels;
    std::size_t line_no = 1;
    std::size_t max_label = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) {
            continue;
        }
        const auto cells = split_row(trim(line));
        if (cells.size() != header.size()) {
            throw FormatError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                              std::to_string(header.size()) + " cells, found " +
                              std::to_string(cells.size()));
        }
        for (std::size_t c = 0; c < cells.size(); ++c) {
            double v = 0.0;
            std::size_t used = 0;
            try {
                v = std::stod(cells[c], &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used == 0 || used != cells[c].size()) {
                throw FormatError(path.string() + ":" + std::to_string(line_no) +
                                  ": non-numeric cell '" + cells[c] + "' in column '" + header[c] +
                                  "'");
            }
            if (c == label_idx) {
                if (v < 0.0 || v != std::floor(v)) {
                    throw FormatError(path.string() + ":" + std::to_string(line_no) +
                                      ": label must be a non-negative integer, got '" + cells[c] +
                                      "'");
                }
                const auto y = static_cast<std::size_t>(v);
                if (num_classes && y >= *num_classes) {
                    throw FormatError(path.string() + ":" + std::to_string(line_no) + ": label " +
                                      std::to_string(y) + " out of range for m=" +
                                      std::to_string(*num_classes));
                }
                max_label = std::max(max_label, y);
                labels.push_back(HardLabel{y});
            } else {
                values.push_back(v);
            }
        }
    }
    if (labels.empty()) {
        throw FormatError(path.string() + ": no data rows");
    }
    Dataset out;
    out.features = Matrix(labels.size(), d, std::move(values));
    out.labels = std::move(labels);
    out.num_classes = num_classes.value_or(max_label + 1);
    return out;
}

void write_csv(const Dataset& data, const std::filesystem::path& path,
               const std::string& label_column) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    }
    for (std::size_t c = 0; c < data.dim(); ++c) {
        out << 'f' << (c + 1) << ',';
    }
    out << label_column << '\n';
    char buf[40];
    for (std::size_t i = 0; i < data.size(); ++i) {
        for (std::size_t c = 0; c < data.dim(); ++c) {
            std::snprintf(buf, sizeof buf, "%.17g", data.features(i, c));
            out << buf << ',';
        }
        out << data.labels[i].class_index << '\n';
    }
    if (!out) {
        throw std::runtime_error("write failed: " + path.string());
    }
}

Splits split(const Dataset& data, std::array<double, 3> fractions, std::uint64_t seed,
             bool stratified) {
    double total = 0.0;
    for (double f : fractions) {
        if (!(f >= 0.0)) {
            throw std::invalid_argument("split: fractions must be non-negative");
        }
        total += f;
    }
    if (std::abs(total - 1.0) > 1e-9) {
        throw std::invalid_argument("split: fractions sum to " + std::to_string(total) +
                                    ", expected 1");
    }
    if (data.size() == 0) {
        throw std::invalid_argument("split: empty dataset");
    }
    Rng rng(seed);
    std::array<std::vector<std::size_t>, 3> parts;
    const auto assign = [&](std::vector<std::size_t> idx) {
        rng.shuffle(idx);
        const auto n = static_cast<double>(idx.size());
        const auto n_train = static_cast<std::size_t>(std::llround(fractions[0] * n));
        const auto n_val =
            std::min(idx.size() - n_train, static_cast<std::size_t>(std::llround(fractions[1] * n)));
        for (std::size_t i = 0; i < idx.size(); ++i) {
            const int which = i < n_train ? 0 : (i < n_train + n_val ? 1 : 2);
            parts[which].push_back(idx[i]);
        }
    };
    if (stratified) {
        std::vector<std::vector<std::size_t>> by_class(data.num_classes);
        for (std::size_t i = 0; i < data.size(); ++i) {
            by_class.at(data.labels[i].class_index).push_back(i);
        }
        for (auto& idx : by_class) {
            assign(std::move(idx));
        }
    } else {
        std::vector<std::size_t> idx(data.size());
        for (std::size_t i = 0; i < idx.size(); ++i) {
            idx[i] = i;
        }
        assign(std::move(idx));
    }
    for (auto& p : parts) {
        std::sort(p.begin(), p.end());
    }
    return Splits{data.subset(parts[0], "train"), data.subset(parts[1], "validation"),
                  data.subset(parts[2], "test")};
}

}  // namespace msol
