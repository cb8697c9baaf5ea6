#include "multisol/kernels.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "multisol/simplex.hpp"

namespace msol::kernels {

namespace {

void check_membership_shapes(const Matrix& preds, const Matrix& thresholds, double lambda) {
    if (preds.cols() != thresholds.cols()) {
        throw std::invalid_argument("membership: prediction and threshold dimensions differ");
    }
    if (thresholds.rows() == 0) {
        throw std::invalid_argument("membership: empty threshold set");
    }
    if (!(lambda > 0.0)) {
        throw std::invalid_argument("membership: lambda must be positive");
    }
}

// Pairwise sigmoids for one (sample, threshold) pair. s[j*m+k] holds
// sigmoid(lambda * a_jk) with a_jk = p_j - p_k - t_j + t_k, and
// s[k*m+j] = sigmoid(-lambda * a_jk), each computed without cancellation.
// slope[j*m+k] is lambda, or 0 where the argument was clamped.
void pairwise_sigmoids(const double* p, const double* t, double lambda, std::size_t m, double* s,
                       double* slope) {
    for (std::size_t j = 0; j < m; ++j) {
        for (std::size_t k = j + 1; k < m; ++k) {
            double a = lambda * ((p[j] - p[k]) - (t[j] - t[k]));
            double d = lambda;
            if (a > kSigmoidClamp) {
                a = kSigmoidClamp;
                d = 0.0;
            } else if (a < -kSigmoidClamp) {
                a = -kSigmoidClamp;
                d = 0.0;
            }
            const double e = std::exp(-std::abs(a));
            const double hi = 1.0 / (1.0 + e);
            const double lo = e * hi;
            s[j * m + k] = a >= 0.0 ? hi : lo;
            s[k * m + j] = a >= 0.0 ? lo : hi;
            slope[j * m + k] = d;
            slope[k * m + j] = d;
        }
    }
}

void products(const double* s, std::size_t m, double* prod) {
    for (std::size_t j = 0; j < m; ++j) {
        double acc = 1.0;
        for (std::size_t k = 0; k < m; ++k) {
            if (k != j) {
                acc *= s[j * m + k];
            }
        }
        prod[j] = acc;
    }
}

struct Scratch {
    explicit Scratch(std::size_t m) : s(m * m), slope(m * m), prod(m) {}
    std::vector<double> s;
    std::vector<double> slope;
    std::vector<double> prod;
};

void membership_row(const Matrix& preds, const Matrix& thresholds, double lambda, std::size_t i,
                    Matrix& out, Scratch& sc) {
    const std::size_t m = preds.cols();
    const double* p = preds.row(i).data();
    double* o = out.row(i).data();
    for (std::size_t j = 0; j < m; ++j) {
        o[j] = 0.0;
    }
    for (std::size_t r = 0; r < thresholds.rows(); ++r) {
        pairwise_sigmoids(p, thresholds.row(r).data(), lambda, m, sc.s.data(), sc.slope.data());
        products(sc.s.data(), m, sc.prod.data());
        for (std::size_t j = 0; j < m; ++j) {
            o[j] += sc.prod[j];
        }
    }
    const double inv = 1.0 / static_cast<double>(thresholds.rows());
    for (std::size_t j = 0; j < m; ++j) {
        o[j] *= inv;
    }
}

void membership_vjp_row(const Matrix& preds, const Matrix& thresholds, double lambda,
                        const Matrix& grad_out, std::size_t i, Matrix& grad_preds, Scratch& sc) {
    const std::size_t m = preds.cols();
    const double* p = preds.row(i).data();
    const double inv = 1.0 / static_cast<double>(thresholds.rows());
    double* gp = grad_preds.row(i).data();
    for (std::size_t j = 0; j < m; ++j) {
        gp[j] = 0.0;
    }
    bool any = false;
    for (std::size_t j = 0; j < m; ++j) {
        any = any || grad_out(i, j) != 0.0;
    }
    if (!any) {
        return;
    }
    for (std::size_t r = 0; r < thresholds.rows(); ++r) {
        pairwise_sigmoids(p, thresholds.row(r).data(), lambda, m, sc.s.data(), sc.slope.data());
        products(sc.s.data(), m, sc.prod.data());
        for (std::size_t j = 0; j < m; ++j) {
            const double g = grad_out(i, j) * inv * sc.prod[j];
            if (g == 0.0) {
                continue;
            }
            for (std::size_t k = 0; k < m; ++k) {
                if (k == j) {
                    continue;
                }
                // d prod_j / d a_jk = prod_j * sigmoid(-a_jk) * lambda
                const double c = g * sc.s[k * m + j] * sc.slope[j * m + k];
                gp[j] += c;
                gp[k] -= c;
            }
        }
    }
}

void hard_membership_row(const Matrix& preds, const Matrix& thresholds, std::size_t i,
                         Matrix& out) {
    const std::size_t m = preds.cols();
    auto o = out.row(i);
    for (std::size_t j = 0; j < m; ++j) {
        o[j] = 0.0;
    }
    for (std::size_t r = 0; r < thresholds.rows(); ++r) {
        const auto d = classify(preds.row(i), thresholds.row(r));
        if (!d.on_boundary) {
            o[d.label.class_index] += 1.0;
        }
    }
    const double inv = 1.0 / static_cast<double>(thresholds.rows());
    for (std::size_t j = 0; j < m; ++j) {
        o[j] *= inv;
    }
}

void matmul_row(const Matrix& a, const Matrix& b, std::size_t i, Matrix& c) {
    double* ci = c.row(i).data();
    for (std::size_t j = 0; j < c.cols(); ++j) {
        ci[j] = 0.0;
    }
    for (std::size_t k = 0; k < a.cols(); ++k) {
        const double aik = a(i, k);
        if (aik == 0.0) {
            continue;
        }
        const double* bk = b.row(k).data();
        for (std::size_t j = 0; j < b.cols(); ++j) {
            ci[j] += aik * bk[j];
        }
    }
}

void matmul_at_b_row(const Matrix& a, const Matrix& b, std::size_t k, Matrix& c) {
    double* ck = c.row(k).data();
    for (std::size_t j = 0; j < c.cols(); ++j) {
        ck[j] = 0.0;
    }
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double aik = a(i, k);
        if (aik == 0.0) {
            continue;
        }
        const double* bi = b.row(i).data();
        for (std::size_t j = 0; j < b.cols(); ++j) {
            ck[j] += aik * bi[j];
        }
    }
}

void matmul_a_bt_row(const Matrix& a, const Matrix& b, std::size_t i, Matrix& c) {
    const double* ai = a.row(i).data();
    for (std::size_t j = 0; j < b.rows(); ++j) {
        const double* bj = b.row(j).data();
        double acc = 0.0;
        for (std::size_t k = 0; k < a.cols(); ++k) {
            acc += ai[k] * bj[k];
        }
        c(i, j) = acc;
    }
}

void prepare(Matrix& out, std::size_t rows, std::size_t cols) {
    if (out.rows() != rows || out.cols() != cols) {
        out = Matrix(rows, cols);
    }
}

long long as_index(std::size_t n) { return static_cast<long long>(n); }

}  // namespace

void smoothed_membership_serial(const Matrix& preds, const Matrix& thresholds, double lambda,
                                Matrix& out) {
    check_membership_shapes(preds, thresholds, lambda);
    prepare(out, preds.rows(), preds.cols());
    Scratch sc(preds.cols());
    for (std::size_t i = 0; i < preds.rows(); ++i) {
        membership_row(preds, thresholds, lambda, i, out, sc);
    }
}

void smoothed_membership_parallel(const Matrix& preds, const Matrix& thresholds, double lambda,
                                  Matrix& out) {
    check_membership_shapes(preds, thresholds, lambda);
    prepare(out, preds.rows(), preds.cols());
    const long long n = as_index(preds.rows());
#pragma omp parallel
    {
        Scratch sc(preds.cols());
#pragma omp for schedule(static)
        for (long long i = 0; i < n; ++i) {
            membership_row(preds, thresholds, lambda, static_cast<std::size_t>(i), out, sc);
        }
    }
}

void smoothed_membership_vjp_serial(const Matrix& preds, const Matrix& thresholds, double lambda,
                                    const Matrix& grad_out, Matrix& grad_preds) {
    check_membership_shapes(preds, thresholds, lambda);
    if (!grad_out.same_shape(preds)) {
        throw std::invalid_argument("membership vjp: gradient shape mismatch");
    }
    prepare(grad_preds, preds.rows(), preds.cols());
    Scratch sc(preds.cols());
    for (std::size_t i = 0; i < preds.rows(); ++i) {
        membership_vjp_row(preds, thresholds, lambda, grad_out, i, grad_preds, sc);
    }
}

void smoothed_membership_vjp_parallel(const Matrix& preds, const Matrix& thresholds,
                                      double lambda, const Matrix& grad_out, Matrix& grad_preds) {
    check_membership_shapes(preds, thresholds, lambda);
    if (!grad_out.same_shape(preds)) {
        throw std::invalid_argument("membership vjp: gradient shape mismatch");
    }
    prepare(grad_preds, preds.rows(), preds.cols());
    const long long n = as_index(preds.rows());
#pragma omp parallel
    {
        Scratch sc(preds.cols());
#pragma omp for schedule(static)
        for (long long i = 0; i < n; ++i) {
            membership_vjp_row(preds, thresholds, lambda, grad_out, static_cast<std::size_t>(i),
                               grad_preds, sc);
        }
    }
}

void hard_membership_serial(const Matrix& preds, const Matrix& thresholds, Matrix& out) {
    check_membership_shapes(preds, thresholds, 1.0);
    prepare(out, preds.rows(), preds.cols());
    for (std::size_t i = 0; i < preds.rows(); ++i) {
        hard_membership_row(preds, thresholds, i, out);
    }
}

void hard_membership_parallel(const Matrix& preds, const Matrix& thresholds, Matrix& out) {
    check_membership_shapes(preds, thresholds, 1.0);
    prepare(out, preds.rows(), preds.cols());
    const long long n = as_index(preds.rows());
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < n; ++i) {
        hard_membership_row(preds, thresholds, static_cast<std::size_t>(i), out);
    }
}

void matmul_serial(const Matrix& a, const Matrix& b, Matrix& c) {
    if (a.cols() != b.rows()) {
        throw std::invalid_argument("matmul: inner dimensions differ");
    }
    prepare(c, a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        matmul_row(a, b, i, c);
    }
}

void matmul_parallel(const Matrix& a, const Matrix& b, Matrix& c) {
    if (a.cols() != b.rows()) {
        throw std::invalid_argument("matmul: inner dimensions differ");
    }
    prepare(c, a.rows(), b.cols());
    const long long n = as_index(a.rows());
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < n; ++i) {
        matmul_row(a, b, static_cast<std::size_t>(i), c);
    }
}

void matmul_at_b_serial(const Matrix& a, const Matrix& b, Matrix& c) {
    if (a.rows() != b.rows()) {
        throw std::invalid_argument("matmul_at_b: row counts differ");
    }
    prepare(c, a.cols(), b.cols());
    for (std::size_t k = 0; k < a.cols(); ++k) {
        matmul_at_b_row(a, b, k, c);
    }
}

void matmul_at_b_parallel(const Matrix& a, const Matrix& b, Matrix& c) {
    if (a.rows() != b.rows()) {
        throw std::invalid_argument("matmul_at_b: row counts differ");
    }
    prepare(c, a.cols(), b.cols());
    const long long n = as_index(a.cols());
#pragma omp parallel for schedule(static)
    for (long long k = 0; k < n; ++k) {
        matmul_at_b_row(a, b, static_cast<std::size_t>(k), c);
    }
}

void matmul_a_bt_serial(const Matrix& a, const Matrix& b, Matrix& c) {
    if (a.cols() != b.cols()) {
        throw std::invalid_argument("matmul_a_bt: column counts differ");
    }
    prepare(c, a.rows(), b.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        matmul_a_bt_row(a, b, i, c);
    }
}

void matmul_a_bt_parallel(const Matrix& a, const Matrix& b, Matrix& c) {
    if (a.cols() != b.cols()) {
        throw std::invalid_argument("matmul_a_bt: column counts differ");
    }
    prepare(c, a.rows(), b.rows());
    const long long n = as_index(a.rows());
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < n; ++i) {
        matmul_a_bt_row(a, b, static_cast<std::size_t>(i), c);
    }
}

int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

}  // namespace msol::kernels
