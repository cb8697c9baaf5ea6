#include "experiment_config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "multisol/rng.hpp"

namespace msol::cli {

using nlohmann::json;

namespace {

std::string_view to_string(DatasetKind kind) {
    switch (kind) {
        case DatasetKind::blobs: return "blobs";
        case DatasetKind::idx: return "idx";
        case DatasetKind::csv: return "csv";
    }
    return "unknown";
}

std::string_view to_string(Indicator ind) {
    return ind == Indicator::smoothed ? "smoothed" : "hard";
}

/// Walks one JSON object, collecting type errors and unknown keys instead of
/// stopping at the first one.
class ObjectReader {
public:
    ObjectReader(const json& obj, std::string prefix, std::vector<std::string>& errors)
        : obj_(obj), prefix_(std::move(prefix)), errors_(errors) {
        if (!obj_.is_object()) {
            fail("", "must be an object");
        }
    }

    ~ObjectReader() = default;
    ObjectReader(const ObjectReader&) = delete;
    ObjectReader& operator=(const ObjectReader&) = delete;

    bool has(const std::string& key) {
        known_.insert(key);
        return obj_.is_object() && obj_.contains(key);
    }

    const json* raw(const std::string& key) {
        return has(key) ? &obj_.at(key) : nullptr;
    }

    void number(const std::string& key, double& out) {
        if (const json* v = raw(key)) {
            if (v->is_number()) {
                out = v->get<double>();
            } else {
                fail(key, "must be a number");
            }
        }
    }

    template <typename U>
    void unsigned_int(const std::string& key, U& out) {
        if (const json* v = raw(key)) {
            if (v->is_number_unsigned() || (v->is_number_integer() && v->get<long long>() >= 0)) {
                out = static_cast<U>(v->get<unsigned long long>());
            } else {
                fail(key, "must be a non-negative integer");
            }
        }
    }

    void boolean(const std::string& key, bool& out) {
        if (const json* v = raw(key)) {
            if (v->is_boolean()) {
                out = v->get<bool>();
            } else {
                fail(key, "must be true or false");
            }
        }
    }

    void string(const std::string& key, std::string& out) {
        if (const json* v = raw(key)) {
            if (v->is_string()) {
                out = v->get<std::string>();
            } else {
                fail(key, "must be a string");
            }
        }
    }

    template <typename U>
    void unsigned_list(const std::string& key, std::vector<U>& out) {
        if (const json* v = raw(key)) {
            if (!v->is_array()) {
                fail(key, "must be an array of non-negative integers");
                return;
            }
            std::vector<U> tmp;
            for (const auto& e : *v) {
                if (!(e.is_number_unsigned() || (e.is_number_integer() && e.get<long long>() >= 0))) {
                    fail(key, "must be an array of non-negative integers");
                    return;
                }
                tmp.push_back(static_cast<U>(e.get<unsigned long long>()));
            }
            out = std::move(tmp);
        }
    }

    void fail(const std::string& key, const std::string& message) {
        errors_.push_back(path(key) + ": " + message);
    }

    std::string path(const std::string& key) const {
        if (key.empty()) {
            return prefix_.empty() ? "config" : prefix_;
        }
        return prefix_.empty() ? key : prefix_ + "." + key;
    }

    /// Reports keys that were never asked for.
    void finish() {
        if (!obj_.is_object()) {
            return;
        }
        for (const auto& [key, value] : obj_.items()) {
            if (!known_.count(key)) {
                errors_.push_back(path(key) + ": unknown key");
            }
        }
    }

private:
    const json& obj_;
    std::string prefix_;
    std::vector<std::string>& errors_;
    std::set<std::string> known_;
};

void read_dataset(const json& doc, DatasetConfig& d, std::vector<std::string>& errors) {
    ObjectReader r(doc, "dataset", errors);
    std::string kind = std::string(to_string(d.kind));
    r.string("kind", kind);
    if (kind == "blobs") {
        d.kind = DatasetKind::blobs;
    } else if (kind == "idx") {
        d.kind = DatasetKind::idx;
    } else if (kind == "csv") {
        d.kind = DatasetKind::csv;
    } else {
        r.fail("kind", "must be one of blobs, idx, csv (got '" + kind + "')");
    }

    r.unsigned_list("counts", d.counts);
    r.number("radius", d.radius);
    r.number("stddev", d.stddev);
    r.unsigned_int("dim", d.dim);
    r.unsigned_int("data_seed", d.data_seed);
    r.string("train_images", d.train_images);
    r.string("train_labels", d.train_labels);
    r.string("test_images", d.test_images);
    r.string("test_labels", d.test_labels);
    r.number("validation_fraction", d.validation_fraction);
    r.string("path", d.path);
    r.string("label_column", d.label_column);
    if (const json* v = r.raw("num_classes")) {
        if (v->is_null()) {
            d.num_classes.reset();
        } else if (v->is_number_unsigned() && v->get<std::size_t>() >= 2) {
            d.num_classes = v->get<std::size_t>();
        } else {
            r.fail("num_classes", "must be an integer >= 2 or null");
        }
    }
    if (const json* v = r.raw("split")) {
        if (v->is_array() && v->size() == 3 && std::all_of(v->begin(), v->end(), [](const json& e) {
                return e.is_number();
            })) {
            for (std::size_t i = 0; i < 3; ++i) {
                d.split[i] = (*v)[i].get<double>();
            }
        } else {
            r.fail("split", "must be an array of three numbers (train, validation, test)");
        }
    }
    r.unsigned_int("split_seed", d.split_seed);
    r.boolean("stratified", d.stratified);
    r.finish();

    switch (d.kind) {
        case DatasetKind::blobs:
            if (d.counts.size() < 2) {
                r.fail("counts", "blobs need at least 2 classes");
            }
            for (auto c : d.counts) {
                if (c == 0) {
                    r.fail("counts", "every class needs at least one point");
                    break;
                }
            }
            if (!(d.stddev > 0.0)) {
                r.fail("stddev", "must be positive");
            }
            if (!(d.radius >= 0.0)) {
                r.fail("radius", "must be non-negative");
            }
            if (d.dim < 2) {
                r.fail("dim", "must be at least 2");
            }
            break;
        case DatasetKind::idx:
            for (const auto& [key, value] :
                 {std::pair{"train_images", &d.train_images}, std::pair{"train_labels", &d.train_labels},
                  std::pair{"test_images", &d.test_images}, std::pair{"test_labels", &d.test_labels}}) {
                if (value->empty()) {
                    r.fail(key, "required for idx datasets");
                }
            }
            if (!(d.validation_fraction > 0.0 && d.validation_fraction < 1.0)) {
                r.fail("validation_fraction", "must lie in (0, 1)");
            }
            break;
        case DatasetKind::csv:
            if (d.path.empty()) {
                r.fail("path", "required for csv datasets");
            }
            break;
    }
    if (d.kind != DatasetKind::idx) {
        double sum = 0.0;
        bool ok = true;
        for (double f : d.split) {
            ok = ok && f >= 0.0;
            sum += f;
        }
        if (!ok || std::abs(sum - 1.0) > 1e-9 || !(d.split[0] > 0.0) || !(d.split[1] > 0.0) ||
            !(d.split[2] > 0.0)) {
            r.fail("split", "fractions must be positive and sum to 1");
        }
    }
}

void read_loss(const json& doc, LossSelector& loss, std::vector<std::string>& errors) {
    ObjectReader r(doc, "loss", errors);
    std::string kind = std::string(to_string(loss.kind));
    r.string("kind", kind);
    try {
        loss.kind = parse_loss_kind(kind);
    } catch (const std::invalid_argument& e) {
        r.fail("kind", e.what());
    }
    std::string score = std::string(to_string(loss.multisol.score_kind));
    r.string("score", score);
    try {
        loss.multisol.score_kind = parse_score_kind(score);
    } catch (const std::invalid_argument& e) {
        r.fail("score", e.what());
    }
    r.number("alpha", loss.multisol.alpha);
    r.unsigned_int("n_thresholds", loss.multisol.n_thresholds);
    r.number("lambda", loss.multisol.lambda);
    r.unsigned_int("seed", loss.multisol.seed);
    std::string indicator = std::string(to_string(loss.multisol.indicator));
    r.string("indicator", indicator);
    if (indicator == "smoothed") {
        loss.multisol.indicator = Indicator::smoothed;
    } else {
        r.fail("indicator", "training needs the smoothed indicator (got '" + indicator + "')");
    }
    r.finish();
    if (!(loss.multisol.alpha > 0.0)) {
        r.fail("alpha", "must be positive");
    }
    if (!(loss.multisol.lambda > 0.0)) {
        r.fail("lambda", "must be positive");
    }
    if (loss.multisol.n_thresholds == 0) {
        r.fail("n_thresholds", "must be at least 1");
    }
}

void read_train(const json& doc, TrainConfig& t, std::vector<std::string>& errors) {
    ObjectReader r(doc, "train", errors);
    r.number("learning_rate", t.learning_rate);
    r.unsigned_int("batch_size", t.batch_size);
    r.unsigned_int("max_epochs", t.max_epochs);
    r.unsigned_int("patience", t.patience);
    r.number("weight_decay", t.weight_decay);
    r.finish();
    if (!(t.learning_rate > 0.0)) {
        r.fail("learning_rate", "must be positive");
    }
    if (t.batch_size == 0) {
        r.fail("batch_size", "must be at least 1");
    }
    if (t.max_epochs == 0) {
        r.fail("max_epochs", "must be at least 1");
    }
    if (t.patience == 0) {
        r.fail("patience", "must be at least 1");
    }
    if (!(t.weight_decay >= 0.0)) {
        r.fail("weight_decay", "must be non-negative");
    }
}

}  // namespace

ExperimentConfig parse_config(const json& doc) {
    ExperimentConfig cfg;
    std::vector<std::string> errors;
    ObjectReader r(doc, "", errors);
    if (const json* d = r.raw("dataset")) {
        read_dataset(*d, cfg.dataset, errors);
    } else {
        r.fail("dataset", "required");
    }
    if (const json* m = r.raw("model")) {
        ObjectReader mr(*m, "model", errors);
        mr.unsigned_list("hidden", cfg.hidden);
        mr.finish();
        for (auto h : cfg.hidden) {
            if (h == 0) {
                mr.fail("hidden", "layer sizes must be positive");
                break;
            }
        }
    }
    if (const json* t = r.raw("train")) {
        read_train(*t, cfg.train, errors);
    }
    if (const json* l = r.raw("loss")) {
        read_loss(*l, cfg.train.loss, errors);
    }
    r.unsigned_list("seeds", cfg.seeds);
    if (cfg.seeds.empty()) {
        r.fail("seeds", "need at least one seed");
    }
    r.string("output_dir", cfg.output_dir);
    r.finish();

    if (!errors.empty()) {
        std::string message = "invalid config:";
        for (const auto& e : errors) {
            message += "\n  " + e;
        }
        throw ConfigError(message);
    }
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot read config file " + path.string());
    }
    json doc;
    try {
        in >> doc;
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return parse_config(doc);
}

json to_json(const ExperimentConfig& cfg) {
    const auto& d = cfg.dataset;
    json dataset = {{"kind", to_string(d.kind)}};
    switch (d.kind) {
        case DatasetKind::blobs:
            dataset["counts"] = d.counts;
            dataset["radius"] = d.radius;
            dataset["stddev"] = d.stddev;
            dataset["dim"] = d.dim;
            dataset["data_seed"] = d.data_seed;
            break;
        case DatasetKind::idx:
            dataset["train_images"] = d.train_images;
            dataset["train_labels"] = d.train_labels;
            dataset["test_images"] = d.test_images;
            dataset["test_labels"] = d.test_labels;
            dataset["validation_fraction"] = d.validation_fraction;
            break;
        case DatasetKind::csv:
            dataset["path"] = d.path;
            dataset["label_column"] = d.label_column;
            dataset["num_classes"] = d.num_classes ? json(*d.num_classes) : json(nullptr);
            break;
    }
    if (d.kind != DatasetKind::idx) {
        dataset["split"] = d.split;
    }
    dataset["split_seed"] = d.split_seed;
    dataset["stratified"] = d.stratified;

    const auto& t = cfg.train;
    const auto& l = t.loss.multisol;
    return {{"dataset", dataset},
            {"model", {{"hidden", cfg.hidden}}},
            {"train",
             {{"learning_rate", t.learning_rate},
              {"batch_size", t.batch_size},
              {"max_epochs", t.max_epochs},
              {"patience", t.patience},
              {"weight_decay", t.weight_decay}}},
            {"loss",
             {{"kind", to_string(t.loss.kind)},
              {"score", to_string(l.score_kind)},
              {"alpha", l.alpha},
              {"n_thresholds", l.n_thresholds},
              {"lambda", l.lambda},
              {"seed", l.seed},
              {"indicator", to_string(l.indicator)}}},
            {"seeds", cfg.seeds},
            {"output_dir", cfg.output_dir}};
}

namespace {

void require_file(const std::string& path, const char* field) {
    if (!std::filesystem::is_regular_file(path)) {
        throw ConfigError(std::string("dataset.") + field + ": file not found: " + path);
    }
}

}  // namespace

Splits load_splits(const DatasetConfig& cfg) {
    switch (cfg.kind) {
        case DatasetKind::blobs: {
            BlobSpec spec;
            spec.counts = cfg.counts;
            spec.radius = cfg.radius;
            spec.stddev = cfg.stddev;
            spec.dim = cfg.dim;
            spec.seed = cfg.data_seed;
            return split(make_blobs(spec), cfg.split, cfg.split_seed, cfg.stratified);
        }
        case DatasetKind::idx: {
            require_file(cfg.train_images, "train_images");
            require_file(cfg.train_labels, "train_labels");
            require_file(cfg.test_images, "test_images");
            require_file(cfg.test_labels, "test_labels");
            Dataset train_all = load_idx(cfg.train_images, cfg.train_labels);
            Dataset test = load_idx(cfg.test_images, cfg.test_labels);
            const std::size_t m = std::max(train_all.num_classes, test.num_classes);
            train_all.num_classes = m;
            test.num_classes = m;
            Splits s = split(train_all, {1.0 - cfg.validation_fraction, cfg.validation_fraction, 0.0},
                             cfg.split_seed, cfg.stratified);
            test.split = "test";
            s.test = std::move(test);
            return s;
        }
        case DatasetKind::csv: {
            require_file(cfg.path, "path");
            return split(load_csv(cfg.path, cfg.label_column, cfg.num_classes), cfg.split,
                         cfg.split_seed, cfg.stratified);
        }
    }
    throw std::logic_error("unhandled dataset kind");
}

TrainConfig run_config(const ExperimentConfig& cfg, std::uint64_t seed) {
    TrainConfig t = cfg.train;
    t.seed = seed;
    t.loss.multisol.seed = cfg.train.loss.multisol.seed + seed;
    return t;
}

MlpModel initial_model(const ExperimentConfig& cfg, std::size_t input_dim, std::size_t m,
                       std::uint64_t seed) {
    std::vector<std::size_t> sizes = {input_dim};
    sizes.insert(sizes.end(), cfg.hidden.begin(), cfg.hidden.end());
    sizes.push_back(m);
    return MlpModel(std::move(sizes), mix_seed(seed, 1));
}

}  // namespace msol::cli
