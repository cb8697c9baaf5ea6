#include "cli.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include <omp.h>

#include <CLI11.hpp>

#include "multisol/threshold_tools.hpp"

namespace msol::cli {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------- tables

Summary summarize(const std::vector<double>& xs) {
    if (xs.empty()) {
        throw std::invalid_argument("summarize: no values");
    }
    Summary s;
    s.min = *std::min_element(xs.begin(), xs.end());
    s.max = *std::max_element(xs.begin(), xs.end());
    double sum = 0.0;
    for (double x : xs) {
        sum += x;
    }
    s.mean = sum / static_cast<double>(xs.size());
    if (xs.size() > 1) {
        double ss = 0.0;
        for (double x : xs) {
            ss += (x - s.mean) * (x - s.mean);
        }
        s.std = std::sqrt(ss / static_cast<double>(xs.size() - 1));
    }
    return s;
}

namespace {

bool row_less(const RunResult& a, const RunResult& b) {
    if (a.loss != b.loss) {
        return a.loss < b.loss;
    }
    if (a.value != b.value) {
        return a.value < b.value;  // nullopt sorts first
    }
    return a.seed < b.seed;
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// Short, stable rendering for directory names and table keys.
std::string short_value(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    }
    return out;
}

}  // namespace

void ResultsTable::add(RunResult row) {
    const auto pos = std::upper_bound(rows_.begin(), rows_.end(), row, row_less);
    rows_.insert(pos, std::move(row));
}

std::vector<ResultsTable::Group> ResultsTable::groups() const {
    std::vector<Group> out;
    for (const auto& r : rows_) {
        if (out.empty() || out.back().loss != r.loss || out.back().value != r.value) {
            out.push_back(Group{r.loss, r.value, {}});
        }
        out.back().runs.push_back(&r);
    }
    return out;
}

const std::vector<std::string>& ResultsTable::metric_names() {
    static const std::vector<std::string> names = {"top1_accuracy",   "macro_f1",
                                                   "macro_precision", "macro_recall",
                                                   "macro_accuracy",  "convergence_epoch"};
    return names;
}

double ResultsTable::metric(const RunResult& r, const std::string& name) {
    if (name == "top1_accuracy") return r.test.top1_accuracy;
    if (name == "macro_f1") return r.test.macro_f1;
    if (name == "macro_precision") return r.test.macro_precision;
    if (name == "macro_recall") return r.test.macro_recall;
    if (name == "macro_accuracy") return r.test.macro_accuracy;
    if (name == "convergence_epoch") return static_cast<double>(r.convergence_epoch);
    if (name == "seconds") return r.seconds;
    throw std::invalid_argument("unknown metric column '" + name + "'");
}

void ResultsTable::write_runs_csv(const fs::path& path) const {
    auto out = open_out(path);
    out << "loss,value,seed";
    for (const auto& m : metric_names()) {
        out << ',' << m;
    }
    out << ",seconds\n";
    for (const auto& r : rows_) {
        out << r.loss << ',' << (r.value ? fmt(*r.value) : "") << ',' << r.seed;
        for (const auto& m : metric_names()) {
            out << ',' << fmt(metric(r, m));
        }
        out << ',' << fmt(r.seconds) << '\n';
    }
}

void ResultsTable::write_aggregate_csv(const fs::path& path) const {
    auto out = open_out(path);
    out << "loss,value,metric,runs,mean,std,min,max,range\n";
    for (const auto& g : groups()) {
        for (const auto& m : metric_names()) {
            std::vector<double> xs;
            for (const auto* r : g.runs) {
                xs.push_back(metric(*r, m));
            }
            const Summary s = summarize(xs);
            out << g.loss << ',' << (g.value ? fmt(*g.value) : "") << ',' << m << ','
                << xs.size() << ',' << fmt(s.mean) << ',' << fmt(s.std) << ',' << fmt(s.min)
                << ',' << fmt(s.max) << ',' << fmt(s.range()) << '\n';
        }
    }
}

// ---------------------------------------------------------------- jobs

void run_jobs(std::size_t count, std::size_t jobs, const std::function<void(std::size_t)>& task) {
    jobs = std::max<std::size_t>(1, std::min(jobs, count));
    if (jobs == 1) {
        for (std::size_t i = 0; i < count; ++i) {
            task(i);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> workers;
    for (std::size_t w = 0; w < jobs; ++w) {
        workers.emplace_back([&] {
            // each job already runs alongside others; keep kernels single-threaded
            omp_set_num_threads(1);
            for (std::size_t i = next++; i < count; i = next++) {
                try {
                    task(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) {
                        failure = std::current_exception();
                    }
                }
            }
        });
    }
    for (auto& t : workers) {
        t.join();
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
}

// ---------------------------------------------------------------- commands

namespace {

struct CommonOptions {
    std::string config;
    std::string out;
    std::string seeds;
    std::size_t jobs = 1;
};

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
    std::vector<std::uint64_t> seeds;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) {
            continue;
        }
        const auto dots = item.find("..");
        try {
            if (dots != std::string::npos) {
                const auto lo = std::stoull(item.substr(0, dots));
                const auto hi = std::stoull(item.substr(dots + 2));
                if (hi < lo) {
                    throw ConfigError("--seeds: empty range '" + item + "'");
                }
                for (auto s = lo; s <= hi; ++s) {
                    seeds.push_back(s);
                }
            } else {
                std::size_t used = 0;
                seeds.push_back(std::stoull(item, &used));
                if (used != item.size()) {
                    throw std::invalid_argument(item);
                }
            }
        } catch (const std::logic_error&) {
            throw ConfigError("--seeds: not a seed or range: '" + item + "'");
        }
    }
    if (seeds.empty()) {
        throw ConfigError("--seeds: need at least one seed");
    }
    return seeds;
}

std::vector<double> parse_value_list(const std::string& text) {
    std::vector<double> values;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) {
            continue;
        }
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(item, &used);
        } catch (const std::logic_error&) {
            used = 0;
        }
        if (used != item.size() || used == 0) {
            throw ConfigError("--values: not a number: '" + item + "'");
        }
        if (!(v > 0.0) || !std::isfinite(v)) {
            throw ConfigError("--values: values must be positive (got " + item + ")");
        }
        values.push_back(v);
    }
    if (values.empty()) {
        throw ConfigError("--values: need at least one value");
    }
    return values;
}

ExperimentConfig resolve(const CommonOptions& opts) {
    ExperimentConfig cfg = load_config(opts.config);
    if (!opts.out.empty()) {
        cfg.output_dir = opts.out;
    }
    if (!opts.seeds.empty()) {
        cfg.seeds = parse_seed_list(opts.seeds);
    }
    if (opts.jobs == 0) {
        throw ConfigError("--jobs must be at least 1");
    }
    return cfg;
}

void prepare_output(const ExperimentConfig& cfg) {
    fs::create_directories(cfg.output_dir);
    auto out = open_out(fs::path(cfg.output_dir) / "config.effective.json");
    out << to_json(cfg).dump(2) << '\n';
}

struct RunSpec {
    LossSelector loss;
    std::optional<double> value;
    std::uint64_t seed = 0;
    fs::path dir;
};

RunResult execute(const ExperimentConfig& base, const Splits& splits, const RunSpec& spec) {
    ExperimentConfig cfg = base;
    cfg.train.loss = spec.loss;
    const TrainConfig tc = run_config(cfg, spec.seed);
    MlpModel model =
        initial_model(cfg, splits.train.dim(), splits.train.num_classes, spec.seed);
    const TrainReport report = train(model, splits, tc);

    fs::create_directories(spec.dir);
    json doc = to_json(report);
    doc["seed"] = spec.seed;
    doc["value"] = spec.value ? json(*spec.value) : json(nullptr);
    doc["threshold_seed"] = tc.loss.multisol.seed;
    {
        auto out = open_out(spec.dir / "report.json");
        out << doc.dump(2) << '\n';
    }
    model.save(spec.dir / "model.ckpt");

    RunResult r;
    r.loss = report.loss_name;
    r.value = spec.value;
    r.seed = spec.seed;
    r.test = report.test;
    r.convergence_epoch = report.best_epoch;
    r.seconds = report.seconds;
    return r;
}

ResultsTable execute_all(const ExperimentConfig& cfg, const Splits& splits,
                         const std::vector<RunSpec>& specs, std::size_t jobs) {
    std::vector<RunResult> results(specs.size());
    run_jobs(specs.size(), jobs,
             [&](std::size_t i) { results[i] = execute(cfg, splits, specs[i]); });
    ResultsTable table;
    for (auto& r : results) {
        table.add(std::move(r));
    }
    return table;
}

std::string seed_dir(std::uint64_t seed) {
    return "seed_" + std::to_string(seed);
}

void print_groups(const ResultsTable& table, std::ostream& out) {
    for (const auto& g : table.groups()) {
        std::vector<double> acc;
        std::vector<double> f1;
        for (const auto* r : g.runs) {
            acc.push_back(r->test.top1_accuracy);
            f1.push_back(r->test.macro_f1);
        }
        const auto a = summarize(acc);
        const auto f = summarize(f1);
        out << g.loss;
        if (g.value) {
            out << " value=" << short_value(*g.value);
        }
        out << "  runs=" << g.runs.size() << "  top1=" << a.mean << " (" << a.min << "-" << a.max
            << ")  macro_f1=" << f.mean << " (" << f.min << "-" << f.max << ")\n";
    }
}

int cmd_train(const CommonOptions& opts, std::ostream& out) {
    const ExperimentConfig cfg = resolve(opts);
    const Splits splits = load_splits(cfg.dataset);
    prepare_output(cfg);
    const fs::path root = cfg.output_dir;

    std::vector<RunSpec> specs;
    for (auto seed : cfg.seeds) {
        specs.push_back({cfg.train.loss, std::nullopt, seed, root / seed_dir(seed)});
    }
    const ResultsTable table = execute_all(cfg, splits, specs, opts.jobs);
    table.write_runs_csv(root / "runs.csv");
    table.write_aggregate_csv(root / "aggregate.csv");
    print_groups(table, out);
    return kExitOk;
}

int cmd_sweep(const CommonOptions& opts, const std::string& axis, const std::string& values_text,
              std::ostream& out) {
    if (axis != "alpha" && axis != "lambda") {
        throw ConfigError("--axis must be 'alpha' or 'lambda' (got '" + axis + "')");
    }
    const std::vector<double> values = parse_value_list(values_text);
    const ExperimentConfig cfg = resolve(opts);
    const Splits splits = load_splits(cfg.dataset);
    prepare_output(cfg);
    const fs::path root = cfg.output_dir;

    LossSelector multisol = cfg.train.loss;
    multisol.kind = LossKind::multisol;
    LossSelector ce;
    ce.kind = LossKind::cross_entropy;

    std::vector<RunSpec> specs;
    for (double v : values) {
        LossSelector sel = multisol;
        (axis == "alpha" ? sel.multisol.alpha : sel.multisol.lambda) = v;
        for (auto seed : cfg.seeds) {
            specs.push_back({sel, v, seed,
                             root / sel.name() / (axis + "_" + short_value(v)) / seed_dir(seed)});
        }
    }
    for (auto seed : cfg.seeds) {
        specs.push_back({ce, std::nullopt, seed, root / ce.name() / seed_dir(seed)});
    }
    const ResultsTable table = execute_all(cfg, splits, specs, opts.jobs);
    table.write_runs_csv(root / "runs.csv");
    table.write_aggregate_csv(root / "aggregate.csv");

    auto mean_of = [&](const std::string& loss, std::optional<double> value,
                       const std::string& metric) {
        std::vector<double> xs;
        for (const auto& r : table.rows()) {
            if (r.loss == loss && r.value == value) {
                xs.push_back(ResultsTable::metric(r, metric));
            }
        }
        return summarize(xs).mean;
    };
    const double ce_f1 = mean_of(ce.name(), std::nullopt, "macro_f1");
    const double ce_acc = mean_of(ce.name(), std::nullopt, "top1_accuracy");
    auto csv = open_out(root / "sweep.csv");
    csv << "value,multisol_macro_f1,multisol_acc,ce_macro_f1,ce_acc\n";
    for (double v : values) {
        csv << fmt(v) << ',' << fmt(mean_of(multisol.name(), v, "macro_f1")) << ','
            << fmt(mean_of(multisol.name(), v, "top1_accuracy")) << ',' << fmt(ce_f1) << ','
            << fmt(ce_acc) << '\n';
    }
    out << "sweep over " << axis << ": " << values.size() << " values, " << cfg.seeds.size()
        << " seeds\n";
    print_groups(table, out);
    return kExitOk;
}

int cmd_scores(const CommonOptions& opts, std::ostream& out) {
    const ExperimentConfig cfg = resolve(opts);
    const Splits splits = load_splits(cfg.dataset);
    prepare_output(cfg);
    const fs::path root = cfg.output_dir;

    std::vector<LossSelector> models;
    for (auto kind : {LossKind::cross_entropy, LossKind::weighted_cross_entropy, LossKind::squared}) {
        LossSelector s = cfg.train.loss;
        s.kind = kind;
        models.push_back(s);
    }
    for (auto score : kAllScores) {
        LossSelector s = cfg.train.loss;
        s.kind = LossKind::multisol;
        s.multisol.score_kind = score;
        models.push_back(s);
    }
    std::vector<RunSpec> specs;
    for (const auto& sel : models) {
        for (auto seed : cfg.seeds) {
            specs.push_back({sel, std::nullopt, seed, root / sel.name() / seed_dir(seed)});
        }
    }
    const ResultsTable table = execute_all(cfg, splits, specs, opts.jobs);
    table.write_runs_csv(root / "runs.csv");
    table.write_aggregate_csv(root / "aggregate.csv");

    static const std::vector<std::string> metrics = {"top1_accuracy", "macro_precision",
                                                     "macro_recall", "macro_f1"};
    auto csv = open_out(root / "scores.csv");
    csv << "model";
    for (const auto& m : metrics) {
        csv << ',' << m << "_mean," << m << "_min," << m << "_max";
    }
    csv << '\n';
    for (const auto& sel : models) {
        csv << sel.name();
        for (const auto& m : metrics) {
            std::vector<double> xs;
            for (const auto& r : table.rows()) {
                if (r.loss == sel.name()) {
                    xs.push_back(ResultsTable::metric(r, m));
                }
            }
            const auto s = summarize(xs);
            csv << ',' << fmt(s.mean) << ',' << fmt(s.min) << ',' << fmt(s.max);
        }
        csv << '\n';
    }
    print_groups(table, out);
    return kExitOk;
}

struct HeatmapOptions {
    std::string checkpoint;
    std::size_t grid_k = 60;
    std::optional<double> alpha;
    std::string metric = "top1_accuracy";
};

int cmd_heatmap(const CommonOptions& opts, const HeatmapOptions& h, std::ostream& out) {
    const ExperimentConfig cfg = resolve(opts);
    if (!fs::is_regular_file(h.checkpoint)) {
        throw ConfigError("--checkpoint: file not found: " + h.checkpoint);
    }
    const ScanMetric metric = [&] {
        try {
            return parse_scan_metric(h.metric);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("--metric: ") + e.what());
        }
    }();
    const double alpha = h.alpha.value_or(cfg.train.loss.multisol.alpha);
    if (!(alpha > 0.0)) {
        throw ConfigError("--alpha must be positive");
    }
    const MlpModel model = MlpModel::load(h.checkpoint);
    if (model.num_classes() != 3) {
        throw ConfigError("heatmap export is only supported for 3-class models (checkpoint has " +
                          std::to_string(model.num_classes()) + " classes)");
    }
    const Splits splits = load_splits(cfg.dataset);
    if (splits.test.dim() != model.input_dim() || splits.test.num_classes != 3) {
        throw ConfigError("dataset does not match the checkpoint (features " +
                          std::to_string(splits.test.dim()) + " vs " +
                          std::to_string(model.input_dim()) + ", classes " +
                          std::to_string(splits.test.num_classes) + " vs 3)");
    }
    prepare_output(cfg);
    const fs::path root = cfg.output_dir;

    const Matrix preds = model.forward(splits.test.features);
    const BarycentricGrid grid(h.grid_k, 3);
    const auto result = scan(preds, splits.test.labels, grid, metric);
    heatmap_export(result, DirichletPrior::symmetric(3, alpha), root / "heatmap.csv");

    const auto argmax = scan(preds, splits.test.labels, BarycentricGrid(0, 3), metric);
    const auto centroid = near_optimal_centroid(result);
    json summary = {{"metric", to_string(metric)},
                    {"grid_k", h.grid_k},
                    {"alpha", alpha},
                    {"points", grid.size()},
                    {"best_score", result.best_score},
                    {"best_threshold", result.best_threshold().values()},
                    {"argmax_score", argmax.best_score},
                    {"near_optimal_centroid", centroid.values()}};
    {
        auto f = open_out(root / "heatmap_summary.json");
        f << summary.dump(2) << '\n';
    }
    out << "heatmap: " << grid.size() << " points, best " << to_string(metric) << " "
        << result.best_score << ", argmax " << argmax.best_score << "\n";
    return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"MultiSOL experiments: train, sweep, scores, heatmap"};
    app.require_subcommand(1);

    CommonOptions common;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", common.config, "JSON experiment config")->required();
        sub->add_option("--out", common.out, "output directory (overrides output_dir)");
        sub->add_option("--seeds", common.seeds, "comma list of seeds or ranges like 0..4");
        sub->add_option("--jobs", common.jobs, "independent runs trained concurrently");
    };

    auto* train_cmd = app.add_subcommand("train", "train one model per seed");
    add_common(train_cmd);

    std::string axis;
    std::string values;
    auto* sweep_cmd = app.add_subcommand("sweep", "MultiSOL over alpha or lambda plus a CE baseline");
    add_common(sweep_cmd);
    sweep_cmd->add_option("--axis", axis, "alpha or lambda")->required();
    sweep_cmd->add_option("--values", values, "comma-separated positive values")->required();

    auto* scores_cmd = app.add_subcommand("scores", "CE, weighted CE, squared and four MultiSOL scores");
    add_common(scores_cmd);

    HeatmapOptions heat;
    auto* heat_cmd = app.add_subcommand("heatmap", "threshold scan of a 3-class checkpoint");
    add_common(heat_cmd);
    heat_cmd->add_option("--checkpoint", heat.checkpoint, "model.ckpt from a train run")->required();
    heat_cmd->add_option("--grid-k", heat.grid_k, "grid resolution k");
    heat_cmd->add_option("--alpha", heat.alpha, "symmetric Dirichlet prior parameter");
    heat_cmd->add_option("--metric", heat.metric,
                         "top1_accuracy, accuracy, precision, recall or f1");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (*train_cmd) {
            return cmd_train(common, out);
        }
        if (*sweep_cmd) {
            return cmd_sweep(common, axis, values, out);
        }
        if (*scores_cmd) {
            return cmd_scores(common, out);
        }
        return cmd_heatmap(common, heat, out);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    std::vector<const char*> argv = {"multisol"};
    for (const auto& a : args) {
        argv.push_back(a.c_str());
    }
    return run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace msol::cli
