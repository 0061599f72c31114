#pragma once

#include <cstddef>
#include <functional>

#include "mixco/tensor.hpp"

namespace mixco {

/// a[m x k] * b[k x n]. Each output sums over k in ascending index order.
[[nodiscard]] Tensor matmul(const Tensor& a, const Tensor& b);

/// a[m x k] * b[n x k]^T, i.e. the matrix of row dot products a_i . b_j.
[[nodiscard]] Tensor matmul_bt(const Tensor& a, const Tensor& b);

/// a[k x m]^T * b[k x n]; used for weight gradients.
[[nodiscard]] Tensor matmul_at(const Tensor& a, const Tensor& b);

[[nodiscard]] double dot(std::span<const double> a, std::span<const double> b);

/// Row-wise log-softmax with max subtraction. Throws DomainError on NaN/Inf.
[[nodiscard]] Tensor log_softmax(const Tensor& logits);
[[nodiscard]] Tensor softmax(const Tensor& logits);

/// Scalar loss together with its gradient with respect to the loss input.
struct LossGrad {
    double value = 0.0;
    Tensor grad;
};

/// -(1/n) sum_ij t_ij log softmax(l)_ij, gradient (softmax(l) - t)/n.
/// Each target row must be a distribution (nonnegative, sums to 1 within 1e-9).
[[nodiscard]] LossGrad soft_cross_entropy(const Tensor& logits, const Tensor& targets);

/// Mean KL(t || softmax(l)) over rows, with 0 log 0 = 0. Same gradient as
/// soft_cross_entropy; the value differs by the mean target entropy.
[[nodiscard]] LossGrad kl_divergence_to_logits(const Tensor& logits, const Tensor& targets);

/// Mean over rows of the Shannon entropy of each target row (0 log 0 = 0).
[[nodiscard]] double mean_row_entropy(const Tensor& targets);

/// Rows divided by max(eps, ||row||_2).
[[nodiscard]] Tensor l2_normalize_rows(const Tensor& x, double eps);

/// Vector-Jacobian product of l2_normalize_rows at x.
[[nodiscard]] Tensor l2_normalize_rows_backward(const Tensor& x, double eps, const Tensor& grad_out);

struct GradCheckReport {
    double max_relative_error = 0.0;
    std::size_t worst_coordinate = 0;
    double analytic_value = 0.0;
    double numeric_value = 0.0;
};

using ScalarFunction = std::function<double(const Tensor&)>;

/// Central-difference check of `analytic` (the gradient of f at point).
/// Relative error per coordinate: |a - n| / max(1e-12, |a| + |n|).
[[nodiscard]] GradCheckReport finite_difference_check(const ScalarFunction& f, const Tensor& point,
                                                      const Tensor& analytic, double step);

/// Keeps the report with the larger error.
[[nodiscard]] GradCheckReport worse_of(const GradCheckReport& a, const GradCheckReport& b);

}  // namespace mixco
