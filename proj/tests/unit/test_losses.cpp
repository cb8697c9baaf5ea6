#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "multisol/losses.hpp"
#include "multisol/soft_confusion.hpp"
#include "test_support.hpp"

using namespace msol;
using msol::testing::labels_of;
using msol::testing::random_labels;
using msol::testing::random_simplex_rows;

namespace {

Matrix softmax(const Matrix& logits) {
    Matrix out(logits.rows(), logits.cols());
    for (std::size_t i = 0; i < logits.rows(); ++i) {
        double mx = -1e300;
        for (double v : logits.row(i)) {
            mx = std::max(mx, v);
        }
        double s = 0.0;
        for (std::size_t j = 0; j < logits.cols(); ++j) {
            out(i, j) = std::exp(logits(i, j) - mx);
            s += out(i, j);
        }
        for (std::size_t j = 0; j < logits.cols(); ++j) {
            out(i, j) /= s;
        }
    }
    return out;
}

/// Pulls d/dp back through the softmax: g_z = p * (g_p - <g_p, p>).
Matrix through_softmax(const Matrix& probs, const Matrix& grad_p) {
    Matrix out(probs.rows(), probs.cols());
    for (std::size_t i = 0; i < probs.rows(); ++i) {
        double dot = 0.0;
        for (std::size_t j = 0; j < probs.cols(); ++j) {
            dot += grad_p(i, j) * probs(i, j);
        }
        for (std::size_t j = 0; j < probs.cols(); ++j) {
            out(i, j) = probs(i, j) * (grad_p(i, j) - dot);
        }
    }
    return out;
}

Matrix onehots(std::span<const HardLabel> labels, std::size_t m) {
    Matrix out(labels.size(), m);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        out(i, labels[i].class_index) = 1.0;
    }
    return out;
}

LossConfig config(ScoreKind kind, std::size_t n_thresholds, double lambda, double alpha = 1.0) {
    LossConfig cfg;
    cfg.score_kind = kind;
    cfg.n_thresholds = n_thresholds;
    cfg.lambda = lambda;
    cfg.alpha = alpha;
    return cfg;
}

}  // namespace

TEST_CASE("loss config defaults and validation") {
    const LossConfig cfg;
    CHECK(cfg.n_thresholds == 1024);
    CHECK(cfg.lambda == 10.0);
    CHECK(cfg.alpha == 1.0);
    CHECK(cfg.score_kind == ScoreKind::accuracy);
    CHECK_NOTHROW(cfg.validate());
    CHECK_THROWS(config(ScoreKind::f1, 0, 10).validate());
    CHECK_THROWS(config(ScoreKind::f1, 10, 0).validate());
    CHECK_THROWS(config(ScoreKind::f1, 10, 1, -1).validate());
}

TEST_CASE("one-hot predictions drive accuracy loss near -1") {
    const auto labels = labels_of({0, 1, 2, 0, 1, 2, 2, 1});
    const auto cfg = config(ScoreKind::accuracy, 1024, 1e4);
    const auto thresholds = make_thresholds(cfg, 3);
    const Matrix preds = onehots(labels, 3);
    const auto v = multisol(preds, labels, cfg, thresholds);
    CHECK(v.value <= -0.95);

    // same bound through the exact-indicator oracle
    LossConfig hard = cfg;
    hard.indicator = Indicator::hard;
    CHECK(multisol(preds, labels, hard, thresholds).value <= -0.95);
}

TEST_CASE("barycentric predictions at vanishing steepness give -7/12") {
    const auto labels = labels_of({0, 1, 2, 0, 1, 2});
    const auto cfg = config(ScoreKind::accuracy, 64, 1e-9);
    const Matrix preds(6, 3, 1.0 / 3.0);
    const auto v = multisol(preds, labels, cfg, make_thresholds(cfg, 3));
    // oracle: membership 1/4 everywhere, balanced n_j = n / 3
    const double n = 6.0;
    const double nj = 2.0;
    const double acc_j = (0.25 * nj + 0.75 * (n - nj)) / n;
    CHECK(acc_j == doctest::Approx(7.0 / 12.0));
    CHECK(v.value == doctest::Approx(-acc_j).epsilon(1e-8));
    REQUIRE(v.per_class_scores.size() == 3);
    for (double s : v.per_class_scores) {
        CHECK(s == doctest::Approx(acc_j).epsilon(1e-8));
    }
}

TEST_CASE("loss value stays in [-1, 0] and equals minus the mean score") {
    Rng rng(41);
    for (int t = 0; t < 40; ++t) {
        const std::size_t m = 2 + rng.below(4);
        const std::size_t n = 1 + rng.below(12);
        const auto preds = random_simplex_rows(rng, n, m);
        const auto labels = random_labels(rng, n, m);
        const auto kind = kAllScores[rng.below(4)];
        const auto cfg = config(kind, 32, 0.5 + 50 * rng.uniform());
        const auto v = multisol(preds, labels, cfg, make_thresholds(cfg, m));
        REQUIRE(v.value >= -1.0);
        REQUIRE(v.value <= 0.0);
        double mean = 0.0;
        for (double s : v.per_class_scores) {
            mean += s;
        }
        REQUIRE(v.value == doctest::Approx(-mean / static_cast<double>(m)));
    }
}

TEST_CASE("threshold set must match the config and the batch") {
    const auto labels = labels_of({0, 1});
    const Matrix preds{{0.6, 0.4}, {0.3, 0.7}};
    const auto cfg = config(ScoreKind::f1, 16, 10);
    CHECK_THROWS(multisol(preds, labels, cfg, make_thresholds(config(ScoreKind::f1, 8, 10), 2)));
    CHECK_THROWS(multisol(preds, labels, cfg, make_thresholds(cfg, 3)));
    CHECK_THROWS(multisol(preds, labels_of({}), cfg, make_thresholds(cfg, 2)));
    LossConfig hard = cfg;
    hard.indicator = Indicator::hard;
    CHECK_THROWS(multisol_grad(preds, labels, hard, make_thresholds(cfg, 2)));
}

TEST_CASE("gradient on logits matches central differences") {
    Rng rng(42);
    for (auto kind : kAllScores) {
        for (int rep = 0; rep < 3; ++rep) {
            Matrix logits(8, 3);
            for (double& v : logits.data()) {
                v = rng.normal();
            }
            const auto labels = random_labels(rng, 8, 3);
            auto cfg = config(kind, 64, 10.0);
            cfg.seed = static_cast<std::uint64_t>(rep);
            const auto thresholds = make_thresholds(cfg, 3);
            const Matrix probs = softmax(logits);
            const Matrix analytic =
                through_softmax(probs, multisol_grad(probs, labels, cfg, thresholds));
            const double err = msol::testing::max_fd_error(
                [&](const Matrix& z) {
                    return multisol(softmax(z), labels, cfg, thresholds).value;
                },
                logits, analytic, 1e-4);
            CHECK_MESSAGE(err < 1e-4, to_string(kind) << " rep " << rep << " err " << err);
        }
    }
}

TEST_CASE("saturated sigmoids give vanishing gradients") {
    // vertex predictions against thresholds far from every vertex: margins >= 0.4
    Matrix samples(4, 3);
    for (std::size_t r = 0; r < 4; ++r) {
        samples(r, 0) = 0.3 + 0.02 * static_cast<double>(r);
        samples(r, 1) = 0.35;
        samples(r, 2) = 1.0 - samples(r, 0) - samples(r, 1);
    }
    const ThresholdSet thresholds(DirichletPrior::symmetric(3, 1.0), 0, samples);
    const auto labels = labels_of({0, 1, 2});
    const Matrix preds = onehots(labels, 3);
    auto cfg = config(ScoreKind::f1, 4, 200.0);  // lambda * margin >= 60
    const Matrix g = multisol_grad(preds, labels, cfg, thresholds);
    for (double v : g.data()) {
        CHECK(std::abs(v) < 1e-10);
    }
}

TEST_CASE("permuting classes permutes the gradient") {
    Rng rng(43);
    const std::size_t n = 9;
    const auto preds = random_simplex_rows(rng, n, 3);
    const auto labels = random_labels(rng, n, 3);
    // symmetric prior: permuting the columns of every threshold keeps the set a
    // valid sample, so permute thresholds too
    const auto cfg = config(ScoreKind::f1, 50, 10.0);
    const auto thresholds = make_thresholds(cfg, 3);
    const std::size_t perm[] = {2, 0, 1};
    Matrix pp(n, 3);
    std::vector<HardLabel> pl(n);
    Matrix pt(thresholds.size(), 3);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < 3; ++j) {
            pp(i, perm[j]) = preds(i, j);
        }
        pl[i].class_index = perm[labels[i].class_index];
    }
    for (std::size_t r = 0; r < thresholds.size(); ++r) {
        for (std::size_t j = 0; j < 3; ++j) {
            pt(r, perm[j]) = thresholds.samples()(r, j);
        }
    }
    const ThresholdSet permuted(thresholds.prior(), 0, pt);
    const Matrix g = multisol_grad(preds, labels, cfg, thresholds);
    const Matrix gp = multisol_grad(pp, pl, cfg, permuted);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < 3; ++j) {
            CHECK(gp(i, perm[j]) == doctest::Approx(g(i, j)).epsilon(1e-12));
        }
    }
    CHECK(multisol(pp, pl, cfg, permuted).value ==
          doctest::Approx(multisol(preds, labels, cfg, thresholds).value).epsilon(1e-12));
}

TEST_CASE("exact indicators make accuracy loss the threshold-averaged hard accuracy") {
    Rng rng(44);
    for (int t = 0; t < 20; ++t) {
        const std::size_t m = 2 + rng.below(4);
        const std::size_t n = 1 + rng.below(20);
        const std::size_t nt = 1 + rng.below(128);
        const auto preds = random_simplex_rows(rng, n, m);
        const auto labels = random_labels(rng, n, m);
        auto cfg = config(ScoreKind::accuracy, nt, 10.0);
        cfg.indicator = Indicator::hard;
        cfg.seed = static_cast<std::uint64_t>(t);
        const auto thresholds = make_thresholds(cfg, m);
        double brute = 0.0;
        for (std::size_t r = 0; r < nt; ++r) {
            brute += macro_score(ScoreKind::accuracy,
                                 hard_confusions(preds, labels, thresholds.sample(r)));
        }
        brute /= static_cast<double>(nt);
        REQUIRE(std::abs(-multisol(preds, labels, cfg, thresholds).value - brute) <= 1e-12);
    }
}

TEST_CASE("loss and gradient are deterministic") {
    Rng rng(45);
    const auto preds = random_simplex_rows(rng, 30, 4);
    const auto labels = random_labels(rng, 30, 4);
    const auto cfg = config(ScoreKind::precision, 100, 15.0);
    const auto a = make_thresholds(cfg, 4);
    const auto b = make_thresholds(cfg, 4);
    CHECK(multisol(preds, labels, cfg, a).value == multisol(preds, labels, cfg, b).value);
    CHECK(multisol_grad(preds, labels, cfg, a) == multisol_grad(preds, labels, cfg, b));
}

TEST_CASE("cross-entropy values") {
    const auto labels = labels_of({0, 1, 2, 1});
    CHECK(cross_entropy(onehots(labels, 3), labels).value <= 1e-11);
    const Matrix uniform(4, 3, 1.0 / 3.0);
    CHECK(cross_entropy(uniform, labels).value == doctest::Approx(std::log(3.0)));

    const auto balanced = labels_of({0, 1, 2, 0, 1, 2});
    Rng rng(46);
    const auto preds = random_simplex_rows(rng, 6, 3);
    const auto w = ClassWeights::balanced(balanced, 3);
    for (double x : w.w) {
        CHECK(x == doctest::Approx(1.0));
    }
    CHECK(cross_entropy(preds, balanced, w).value ==
          doctest::Approx(cross_entropy(preds, balanced).value));

    const auto skewed = labels_of({0, 0, 0, 1});
    const auto ws = ClassWeights::balanced(skewed, 2);
    CHECK(ws.w[0] == doctest::Approx(4.0 / 6.0));
    CHECK(ws.w[1] == doctest::Approx(2.0));
    CHECK_THROWS(ClassWeights::balanced(skewed, 3));
    CHECK_THROWS(cross_entropy(preds, labels_of({})));
}

TEST_CASE("squared loss values") {
    const auto labels = labels_of({0, 2, 1});
    CHECK(squared_loss(onehots(labels, 3), labels).value == 0.0);
    CHECK(squared_loss(Matrix(3, 3, 1.0 / 3.0), labels).value == doctest::Approx(2.0 / 3.0));
    Rng rng(47);
    for (int t = 0; t < 100; ++t) {
        const auto p = random_simplex_rows(rng, 5, 4);
        const auto y = random_labels(rng, 5, 4);
        const double v = squared_loss(p, y).value;
        REQUIRE(v >= 0.0);
        REQUIRE(v <= 2.0);
    }
}

TEST_CASE("loss selector names") {
    LossSelector s;
    s.kind = LossKind::multisol;
    s.multisol.score_kind = ScoreKind::f1;
    CHECK(s.name() == "multisol_f1");
    s.kind = LossKind::weighted_cross_entropy;
    CHECK(s.name() == "weighted_ce");
    for (auto kind : {LossKind::multisol, LossKind::cross_entropy, LossKind::weighted_cross_entropy,
                      LossKind::squared}) {
        CHECK(parse_loss_kind(to_string(kind)) == kind);
    }
    CHECK_THROWS(parse_loss_kind("focal"));
}
