#include <doctest.h>

#include <cmath>
#include <limits>

#include "multisol/error.hpp"
#include "multisol/train.hpp"
#include "test_support.hpp"

using namespace msol;

namespace {

Splits blob_splits(std::vector<std::size_t> counts, std::uint64_t seed, double stddev = 0.3) {
    BlobSpec spec;
    spec.counts = std::move(counts);
    spec.stddev = stddev;
    spec.seed = seed;
    return split(make_blobs(spec), {0.6, 0.2, 0.2}, seed, true);
}

TrainConfig quick(LossKind kind, double lr = 0.01) {
    TrainConfig cfg;
    cfg.loss.kind = kind;
    cfg.learning_rate = lr;
    cfg.batch_size = 64;
    cfg.max_epochs = 50;
    cfg.patience = 10;
    return cfg;
}

double squared_norm(MlpModel& model) {
    double s = 0.0;
    for (const Matrix* p : model.parameters()) {
        for (double v : p->data()) {
            s += v * v;
        }
    }
    return s;
}

}  // namespace

TEST_CASE("train config defaults") {
    const TrainConfig cfg;
    CHECK(cfg.learning_rate == 1e-4);
    CHECK(cfg.batch_size == 128);
    CHECK(cfg.max_epochs == 500);
    CHECK(cfg.patience == 25);
    CHECK(cfg.weight_decay == 0.0);
    TrainConfig bad;
    bad.batch_size = 0;
    CHECK_THROWS(bad.validate());
}

TEST_CASE("cross-entropy solves separable blobs") {
    const auto data = blob_splits({500, 500, 500}, 1);
    REQUIRE(data.train.size() == 900);
    MlpModel model({2, 32, 16, 3}, 1);
    const auto report = train(model, data, quick(LossKind::cross_entropy));
    CHECK(report.test.top1_accuracy >= 0.95);
    CHECK(report.epochs_run <= 50);
}

TEST_CASE("MultiSOL accuracy solves separable blobs") {
    const auto data = blob_splits({500, 500, 500}, 2);
    MlpModel model({2, 32, 16, 3}, 2);
    auto cfg = quick(LossKind::multisol);
    cfg.loss.multisol.score_kind = ScoreKind::accuracy;
    cfg.loss.multisol.alpha = 1.0;
    cfg.loss.multisol.lambda = 10.0;
    cfg.loss.multisol.n_thresholds = 256;
    const auto report = train(model, data, cfg);
    CHECK(report.test.top1_accuracy >= 0.95);
    CHECK(report.loss_name == "multisol_accuracy");
}

TEST_CASE("fixed seeds reproduce the whole report") {
    const auto data = blob_splits({100, 100, 100}, 3, 0.6);
    auto cfg = quick(LossKind::multisol);
    cfg.loss.multisol.score_kind = ScoreKind::f1;
    cfg.loss.multisol.n_thresholds = 64;
    cfg.max_epochs = 8;
    cfg.seed = 5;
    MlpModel a({2, 8, 3}, 9);
    MlpModel b({2, 8, 3}, 9);
    const auto ra = train(a, data, cfg);
    const auto rb = train(b, data, cfg);
    CHECK(ra.same_results(rb));
    CHECK(a == b);
    cfg.seed = 6;
    MlpModel c({2, 8, 3}, 9);
    CHECK_FALSE(train(c, data, cfg).same_results(ra));
}

TEST_CASE("every loss lowers the training loss within ten epochs") {
    const auto data = blob_splits({120, 120, 120}, 4, 0.6);
    std::vector<LossSelector> selectors;
    for (auto kind : {LossKind::cross_entropy, LossKind::weighted_cross_entropy, LossKind::squared}) {
        LossSelector s;
        s.kind = kind;
        selectors.push_back(s);
    }
    for (auto score : kAllScores) {
        LossSelector s;
        s.kind = LossKind::multisol;
        s.multisol.score_kind = score;
        s.multisol.n_thresholds = 128;
        selectors.push_back(s);
    }
    for (const auto& sel : selectors) {
        TrainConfig cfg = quick(sel.kind, 0.005);
        cfg.loss = sel;
        cfg.max_epochs = 10;
        cfg.patience = 100;
        MlpModel model({2, 16, 3}, 4);
        const auto report = train(model, data, cfg);
        REQUIRE(report.history.size() == 11);
        CHECK_MESSAGE(report.history[10].train_loss < report.history[0].train_loss, sel.name());
    }
}

TEST_CASE("early stopping honours patience and restores the best checkpoint") {
    const auto data = blob_splits({60, 60, 60}, 5, 1.0);
    for (std::size_t patience : {1u, 3u, 6u}) {
        auto cfg = quick(LossKind::cross_entropy, 0.3);  // large steps so validation loss bounces
        cfg.patience = patience;
        cfg.max_epochs = 300;
        MlpModel model({2, 32, 3}, 6);
        const auto report = train(model, data, cfg);
        REQUIRE(report.early_stopped);
        CHECK(report.epochs_run == report.best_epoch + patience);
        CHECK(report.history.size() == report.epochs_run + 1);
        for (const auto& e : report.history) {
            if (e.epoch != report.best_epoch) {
                CHECK(e.validation_loss >= report.best_validation_loss);
            }
            if (e.epoch < report.best_epoch) {
                CHECK(e.validation_loss > report.best_validation_loss);
            }
        }
        const BoundLoss loss(cfg.loss, 3, data.train.labels);
        CHECK(dataset_loss(model, loss, data.validation, cfg.batch_size) ==
              report.best_validation_loss);
        CHECK(evaluate(model, data.test) == report.test);
    }
}

TEST_CASE("weight decay shrinks parameters") {
    const auto data = blob_splits({60, 60, 60}, 6);
    auto cfg = quick(LossKind::cross_entropy);
    cfg.max_epochs = 15;
    cfg.patience = 100;
    MlpModel plain({2, 16, 3}, 7);
    MlpModel decayed({2, 16, 3}, 7);
    train(plain, data, cfg);
    cfg.weight_decay = 1.0;
    train(decayed, data, cfg);
    CHECK(squared_norm(decayed) < squared_norm(plain));
}

TEST_CASE("invalid inputs and NaN losses are reported") {
    auto data = blob_splits({30, 30, 30}, 7);
    MlpModel model({2, 4, 3}, 1);
    Splits empty = data;
    empty.validation = data.validation.subset({}, "validation");
    CHECK_THROWS(train(model, empty, quick(LossKind::cross_entropy)));

    MlpModel wide({3, 4, 3}, 1);
    CHECK_THROWS(train(wide, data, quick(LossKind::cross_entropy)));

    data.train.features(0, 0) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(train(model, data, quick(LossKind::squared)), TrainingError);
}

TEST_CASE("evaluation metrics and report JSON") {
    // constant model predicting class 0 on a balanced three-class set
    auto model = MlpModel::zeros({2, 3});
    model.layers()[0].bias(0, 0) = 5.0;
    Dataset d;
    d.features = Matrix(6, 2);
    d.num_classes = 3;
    for (std::size_t i = 0; i < 6; ++i) {
        d.labels.push_back(HardLabel{i % 3});
    }
    const auto m = evaluate(model, d);
    CHECK(m.top1_accuracy == doctest::Approx(1.0 / 3.0));
    CHECK(m.macro_recall == doctest::Approx(1.0 / 3.0));
    // class 0: precision 1/3; others 0
    CHECK(m.macro_precision == doctest::Approx(1.0 / 9.0));
    // class 0: f1 = 2*2/(4+4+0) = 0.5
    CHECK(m.macro_f1 == doctest::Approx(0.5 / 3.0));

    TrainReport r;
    r.loss_name = "ce";
    r.history.push_back(EpochRecord{});
    const auto j = to_json(r);
    for (const char* key : {"loss", "best_epoch", "convergence_epoch", "best_validation_loss",
                            "epochs_run", "early_stopped", "test", "history", "seconds"}) {
        CHECK_MESSAGE(j.contains(key), key);
    }
    for (const char* key :
         {"top1_accuracy", "macro_accuracy", "macro_precision", "macro_recall", "macro_f1"}) {
        CHECK_MESSAGE(j["test"].contains(key), key);
    }
}

TEST_CASE("dataset loss is a whole-set value, independent of row order and chunking") {
    // splits come out grouped by class; a per-batch average of MultiSOL would
    // see batches missing whole classes
    const auto data = blob_splits({90, 30, 20}, 8, 0.6);
    MlpModel model({2, 8, 3}, 3);
    LossSelector sel;
    sel.kind = LossKind::multisol;
    sel.multisol.score_kind = ScoreKind::precision;
    sel.multisol.n_thresholds = 64;
    const BoundLoss loss(sel, 3, data.train.labels);
    const double whole = loss.evaluate(model.forward(data.validation.features),
                                       data.validation.labels).value;
    CHECK(dataset_loss(model, loss, data.validation, 7) == whole);
    CHECK(dataset_loss(model, loss, data.validation, 1000) == whole);

    std::vector<std::size_t> reversed(data.validation.size());
    for (std::size_t i = 0; i < reversed.size(); ++i) {
        reversed[i] = reversed.size() - 1 - i;
    }
    const auto flipped = data.validation.subset(reversed, "validation");
    CHECK(dataset_loss(model, loss, flipped, 7) == doctest::Approx(whole).epsilon(1e-12));
}
