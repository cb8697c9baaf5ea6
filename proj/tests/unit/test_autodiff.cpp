#include <doctest.h>

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "multisol/autodiff.hpp"
#include "multisol/error.hpp"
#include "multisol/losses.hpp"
#include "multisol/mlp.hpp"
#include "test_support.hpp"

using namespace msol;
using msol::testing::max_fd_error;
using msol::testing::random_labels;

namespace {

Matrix random_matrix(Rng& rng, std::size_t r, std::size_t c, double scale = 1.0) {
    Matrix m(r, c);
    for (double& v : m.data()) {
        v = scale * rng.normal();
    }
    return m;
}

/// Gradient of `build(x)` (a scalar op chain) with respect to x, via the tape.
Matrix tape_grad(const Matrix& x, const std::function<ad::Var(ad::Var)>& build) {
    ad::Tape tape;
    const ad::Var v = tape.variable(x);
    const ad::Var out = build(v);
    tape.backward(out);
    return v.grad();
}

double tape_value(const Matrix& x, const std::function<ad::Var(ad::Var)>& build) {
    ad::Tape tape;
    return build(tape.constant(x)).value()(0, 0);
}

void check_op(const Matrix& x, const std::function<ad::Var(ad::Var)>& build, const char* name,
              double tol = 1e-6) {
    const Matrix g = tape_grad(x, build);
    const double err =
        max_fd_error([&](const Matrix& z) { return tape_value(z, build); }, x, g, 1e-5);
    CHECK_MESSAGE(err < tol, name << " err " << err);
}

std::vector<LossSelector> all_selectors(double lambda, std::size_t n_thresholds) {
    std::vector<LossSelector> out;
    for (auto score : kAllScores) {
        LossSelector s;
        s.kind = LossKind::multisol;
        s.multisol.score_kind = score;
        s.multisol.lambda = lambda;
        s.multisol.n_thresholds = n_thresholds;
        out.push_back(s);
    }
    for (auto kind : {LossKind::cross_entropy, LossKind::weighted_cross_entropy, LossKind::squared}) {
        LossSelector s;
        s.kind = kind;
        out.push_back(s);
    }
    return out;
}

}  // namespace

TEST_CASE("elementwise and reduction ops differentiate correctly") {
    Rng rng(51);
    const Matrix x = random_matrix(rng, 3, 4);
    const Matrix w = random_matrix(rng, 4, 2);
    const Matrix pos = [&] {
        Matrix p = random_matrix(rng, 3, 4);
        for (double& v : p.data()) {
            v = 0.5 + std::abs(v);
        }
        return p;
    }();

    check_op(x, [&](ad::Var v) { return ad::sum(ad::matmul(v, v.tape()->constant(w))); }, "matmul");
    check_op(w, [&](ad::Var v) { return ad::sum(ad::square(ad::matmul(v.tape()->constant(x), v))); },
             "matmul rhs");
    check_op(x, [&](ad::Var v) {
        return ad::mean(ad::square(ad::add_row(v, v.tape()->constant(Matrix{{1, 2, 3, 4}}))));
    }, "add_row");
    check_op(x, [&](ad::Var v) { return ad::sum(ad::mul(v, ad::sigmoid(v))); }, "mul+sigmoid");
    check_op(x, [&](ad::Var v) { return ad::sum(ad::div(v, v.tape()->constant(pos))); }, "div lhs");
    check_op(pos, [&](ad::Var v) { return ad::sum(ad::div(v.tape()->constant(x), v)); }, "div rhs");
    check_op(x, [&](ad::Var v) {
        return ad::sum(ad::sub(ad::scale(v, 3.0), ad::add_scalar(ad::square(v), 1.0)));
    }, "sub/scale/add_scalar");
    check_op(x, [&](ad::Var v) { return ad::sum(ad::square(ad::relu(v))); }, "relu");
    check_op(pos, [&](ad::Var v) { return ad::sum(ad::log_clamped(v, 1e-12)); }, "log");
    check_op(x, [&](ad::Var v) {
        return ad::sum(ad::mul(ad::softmax_rows(v), v.tape()->constant(pos)));
    }, "softmax");
    check_op(x, [&](ad::Var v) { return ad::sum(ad::square(ad::column_sum(v))); }, "column_sum");
    check_op(x, [&](ad::Var v) { return ad::sum(ad::add(v, ad::square(v))); }, "add");

    const Matrix probs = [&] {
        ad::Tape t;
        return ad::softmax_rows(t.constant(x)).value();
    }();
    const auto thresholds = sample_thresholds(DirichletPrior::symmetric(4, 1.0), 20, 2);
    check_op(probs, [&](ad::Var v) {
        return ad::sum(ad::mul(ad::smoothed_membership(v, thresholds.samples(), 8.0),
                               v.tape()->constant(pos)));
    }, "smoothed_membership", 1e-5);
}

TEST_CASE("log clamp blocks gradient below the floor") {
    const Matrix x{{1e-20, 0.5}};
    const Matrix g = tape_grad(x, [](ad::Var v) { return ad::sum(ad::log_clamped(v, 1e-12)); });
    CHECK(g(0, 0) == 0.0);
    CHECK(g(0, 1) == doctest::Approx(2.0));
}

TEST_CASE("tape misuse is rejected") {
    ad::Tape tape;
    const ad::Var a = tape.variable(Matrix{{1, 2}});
    CHECK_THROWS(tape.backward(a));  // not scalar
    CHECK_THROWS(ad::add(a, tape.constant(Matrix{{1, 2, 3}})));
    CHECK_THROWS(tape.backward(ad::Var{}));
    ad::Tape other;
    CHECK_THROWS(other.backward(ad::sum(a)));
    const ad::Var s = ad::sum(a);
    tape.backward(s);
    CHECK_THROWS(tape.backward(s));
    CHECK(a.grad() == Matrix{{1, 1}});
}

TEST_CASE("constants receive no gradient") {
    ad::Tape tape;
    const ad::Var c = tape.constant(Matrix{{1, 2}});
    const ad::Var v = tape.variable(Matrix{{3, 4}});
    tape.backward(ad::sum(ad::mul(c, v)));
    CHECK_FALSE(tape.requires_grad(c));
    CHECK(c.grad().empty());
    CHECK(v.grad() == Matrix{{1, 2}});
}

TEST_CASE("zero network outputs the barycenter") {
    const auto model = MlpModel::zeros({5, 7, 4});
    Rng rng(52);
    const Matrix out = model.forward(random_matrix(rng, 6, 5));
    for (double v : out.data()) {
        CHECK(v == doctest::Approx(0.25).epsilon(1e-15));
    }
    CHECK_THROWS(model.forward(Matrix(2, 3)));
}

TEST_CASE("softmax ignores a per-row shift of the final logits") {
    Rng rng(53);
    MlpModel model({3, 6, 3}, 1);
    const Matrix x = random_matrix(rng, 5, 3);
    const Matrix before = model.forward(x);
    for (double& b : model.layers().back().bias.data()) {
        b += 17.0;
    }
    const Matrix after = model.forward(x);
    for (std::size_t i = 0; i < before.size(); ++i) {
        CHECK(after.data()[i] == doctest::Approx(before.data()[i]).epsilon(1e-12));
    }
}

TEST_CASE("hand-computed forward pass") {
    // 1 feature -> 1 hidden ReLU unit -> 2 outputs
    auto model = MlpModel::zeros({1, 1, 2});
    model.layers()[0].weights(0, 0) = 2.0;
    model.layers()[0].bias(0, 0) = -1.0;
    model.layers()[1].weights(0, 0) = 1.0;
    model.layers()[1].weights(0, 1) = -0.5;
    model.layers()[1].bias(0, 1) = 0.25;
    const Matrix out = model.forward(Matrix{{1.5}, {0.2}});
    // x=1.5: h = relu(2) = 2, logits (2, -0.75)
    const double e = std::exp(2.0 - (-0.75));
    CHECK(out(0, 0) == doctest::Approx(e / (1 + e)).epsilon(1e-12));
    // x=0.2: h = relu(-0.6) = 0, logits (0, 0.25)
    const double f = std::exp(0.25);
    CHECK(out(1, 1) == doctest::Approx(f / (1 + f)).epsilon(1e-12));
}

TEST_CASE("initialization is seeded Kaiming-uniform with zero biases") {
    const MlpModel a({10, 20, 3}, 4);
    const MlpModel b({10, 20, 3}, 4);
    const MlpModel c({10, 20, 3}, 5);
    CHECK(a == b);
    CHECK_FALSE(a == c);
    CHECK(a.parameter_count() == 10 * 20 + 20 + 20 * 3 + 3);
    const double bound = std::sqrt(6.0 / 10.0);
    for (double w : a.layers()[0].weights.data()) {
        CHECK(std::abs(w) <= bound);
    }
    for (double v : a.layers()[1].bias.data()) {
        CHECK(v == 0.0);
    }
    CHECK_THROWS(MlpModel({4}, 0));
    CHECK_THROWS(MlpModel({4, 0, 3}, 0));
    CHECK_THROWS(MlpModel({4, 1}, 0));
}

TEST_CASE("parameter gradients match finite differences for every loss") {
    Rng rng(54);
    for (const auto& sel : all_selectors(10.0, 32)) {
        double worst = 0.0;
        for (int rep = 0; rep < 3; ++rep) {
            MlpModel model({2, 5, 3}, 100 + rep);
            const Matrix x = random_matrix(rng, 4, 2);
            std::vector<HardLabel> labels = {{0}, {1}, {2}, {static_cast<std::size_t>(rep % 3)}};
            const BoundLoss loss(sel, 3, labels);

            ad::Tape tape;
            const auto rec = model.record(tape, x);
            tape.backward(loss.apply(rec.probs, labels));
            auto params = model.parameters();
            for (std::size_t k = 0; k < params.size(); ++k) {
                Matrix& p = *params[k];
                const Matrix base = p;
                Matrix g = rec.params[k].grad();
                if (g.empty()) {
                    g = Matrix(p.rows(), p.cols());
                }
                const double err = max_fd_error(
                    [&](const Matrix& probe) {
                        p = probe;
                        const double v = loss.evaluate(model.forward(x), labels).value;
                        p = base;
                        return v;
                    },
                    base, g, 1e-4);
                worst = std::max(worst, err);
            }
        }
        CHECK_MESSAGE(worst < 1e-3, sel.name() << " max relative error " << worst);
    }
}

TEST_CASE("tape loss equals the direct evaluation") {
    Rng rng(55);
    MlpModel model({3, 8, 4}, 9);
    const Matrix x = random_matrix(rng, 10, 3);
    const auto labels = random_labels(rng, 10, 4);
    std::vector<HardLabel> all = labels;
    for (std::size_t j = 0; j < 4; ++j) {
        all.push_back(HardLabel{j});
    }
    for (const auto& sel : all_selectors(20.0, 64)) {
        const BoundLoss loss(sel, 4, all);
        ad::Tape tape;
        const auto rec = model.record(tape, x);
        const double taped = loss.apply(rec.probs, labels).value()(0, 0);
        CHECK(taped == doctest::Approx(loss.evaluate(model.forward(x), labels).value)
                           .epsilon(1e-10));
    }
}

TEST_CASE("cross-entropy gradient vanishes at perfect predictions") {
    // a model whose logits are huge in the correct class
    auto model = MlpModel::zeros({3, 3});
    for (std::size_t j = 0; j < 3; ++j) {
        model.layers()[0].weights(j, j) = 60.0;
    }
    const Matrix x{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
    std::vector<HardLabel> labels = {{0}, {1}, {2}};
    LossSelector sel;
    sel.kind = LossKind::cross_entropy;
    const BoundLoss loss(sel, 3, labels);
    ad::Tape tape;
    const auto rec = model.record(tape, x);
    tape.backward(loss.apply(rec.probs, labels));
    for (const auto& p : rec.params) {
        for (double g : p.grad().data()) {
            CHECK(std::abs(g) < 1e-8);
        }
    }
}

TEST_CASE("duplicating a sample doubles its share of a summed loss") {
    Rng rng(56);
    MlpModel model({2, 4, 3}, 3);
    const Matrix x1{{0.3, -0.7}};
    const Matrix x2{{0.3, -0.7}, {0.3, -0.7}};
    std::vector<HardLabel> y1 = {{1}};
    std::vector<HardLabel> y2 = {{1}, {1}};
    auto grads = [&](const Matrix& x, const std::vector<HardLabel>& y) {
        ad::Tape tape;
        const auto rec = model.record(tape, x);
        // summed (not averaged) CE
        const ad::Var loss = ad::scale(ad::cross_entropy_loss(rec.probs, y, std::nullopt),
                                       static_cast<double>(y.size()));
        tape.backward(loss);
        std::vector<Matrix> out;
        for (const auto& p : rec.params) {
            out.push_back(p.grad());
        }
        return out;
    };
    const auto g1 = grads(x1, y1);
    const auto g2 = grads(x2, y2);
    for (std::size_t k = 0; k < g1.size(); ++k) {
        for (std::size_t i = 0; i < g1[k].size(); ++i) {
            CHECK(g2[k].data()[i] == doctest::Approx(2.0 * g1[k].data()[i]).epsilon(1e-12));
        }
    }
}

TEST_CASE("checkpoint round trip and corruption diagnostics") {
    msol::testing::TempDir dir("ckpt");
    const MlpModel model({4, 6, 5, 3}, 77);
    model.save(dir / "m.ckpt");
    CHECK(MlpModel::load(dir / "m.ckpt") == model);

    {
        std::ofstream f(dir / "bad.ckpt", std::ios::binary);
        f << "NOTMAGIC";
    }
    CHECK_THROWS_AS(MlpModel::load(dir / "bad.ckpt"), FormatError);

    const auto size = std::filesystem::file_size(dir / "m.ckpt");
    std::filesystem::copy_file(dir / "m.ckpt", dir / "short.ckpt");
    std::filesystem::resize_file(dir / "short.ckpt", size - 5);
    CHECK_THROWS_AS(MlpModel::load(dir / "short.ckpt"), FormatError);

    std::filesystem::copy_file(dir / "m.ckpt", dir / "long.ckpt");
    {
        std::ofstream f(dir / "long.ckpt", std::ios::binary | std::ios::app);
        f << 'x';
    }
    CHECK_THROWS_AS(MlpModel::load(dir / "long.ckpt"), FormatError);
    CHECK_THROWS(MlpModel::load(dir / "missing.ckpt"));
}

TEST_CASE("Adam update matches the textbook recurrence") {
    Matrix p{{1.0, -2.0}};
    std::vector<Matrix*> params = {&p};
    Adam adam(0.1);
    const std::vector<Matrix> g1 = {Matrix{{0.5, -1.0}}};
    const std::vector<Matrix> g2 = {Matrix{{0.2, 0.3}}};
    adam.step(params, g1);
    adam.step(params, g2);
    // oracle
    double expected[2] = {1.0, -2.0};
    const double grads[2][2] = {{0.5, -1.0}, {0.2, 0.3}};
    for (std::size_t i = 0; i < 2; ++i) {
        double m = 0.0;
        double v = 0.0;
        for (int t = 1; t <= 2; ++t) {
            const double g = grads[t - 1][i];
            m = 0.9 * m + 0.1 * g;
            v = 0.999 * v + 0.001 * g * g;
            const double mh = m / (1 - std::pow(0.9, t));
            const double vh = v / (1 - std::pow(0.999, t));
            expected[i] -= 0.1 * mh / (std::sqrt(vh) + 1e-8);
        }
        CHECK(p(0, i) == doctest::Approx(expected[i]).epsilon(1e-14));
    }
    CHECK(adam.steps() == 2);
    CHECK_THROWS(adam.step(params, {}));
}
