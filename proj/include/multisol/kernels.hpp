#pragma once

// Data-parallel inner loops. Every kernel exists twice: a plain serial
// reference and an OpenMP version parallel over output rows. Each output
// element is reduced in the same fixed order by both, so results are
// bit-identical regardless of thread count.

#include "multisol/matrix.hpp"

namespace msol::kernels {

/// Sigmoid arguments are clamped to +/- this value; derivatives vanish beyond it.
inline constexpr double kSigmoidClamp = 500.0;

/// out(i,j) = (1/N) sum_r prod_{k != j} sigmoid(lambda (p_ij - p_ik - t_rj + t_rk)).
/// preds: n x m, thresholds: N x m, out resized to n x m.
void smoothed_membership_serial(const Matrix& preds, const Matrix& thresholds, double lambda,
                                Matrix& out);
void smoothed_membership_parallel(const Matrix& preds, const Matrix& thresholds, double lambda,
                                  Matrix& out);

/// Vector-Jacobian product of smoothed_membership: given dL/dout, writes dL/dpreds.
void smoothed_membership_vjp_serial(const Matrix& preds, const Matrix& thresholds, double lambda,
                                    const Matrix& grad_out, Matrix& grad_preds);
void smoothed_membership_vjp_parallel(const Matrix& preds, const Matrix& thresholds,
                                      double lambda, const Matrix& grad_out, Matrix& grad_preds);

/// out(i,j) = fraction of thresholds r with preds row i strictly inside R_j(t_r).
void hard_membership_serial(const Matrix& preds, const Matrix& thresholds, Matrix& out);
void hard_membership_parallel(const Matrix& preds, const Matrix& thresholds, Matrix& out);

/// c = a * b
void matmul_serial(const Matrix& a, const Matrix& b, Matrix& c);
void matmul_parallel(const Matrix& a, const Matrix& b, Matrix& c);

/// c = a^T * b
void matmul_at_b_serial(const Matrix& a, const Matrix& b, Matrix& c);
void matmul_at_b_parallel(const Matrix& a, const Matrix& b, Matrix& c);

/// c = a * b^T
void matmul_a_bt_serial(const Matrix& a, const Matrix& b, Matrix& c);
void matmul_a_bt_parallel(const Matrix& a, const Matrix& b, Matrix& c);

/// Number of OpenMP threads the parallel kernels will use (1 without OpenMP).
int max_threads();

}  // namespace msol::kernels
