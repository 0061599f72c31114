#include "mixco/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "mixco/errors.hpp"

namespace mixco {

namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
    if (a.shape() != b.shape()) {
        throw DimensionError(std::string(what) + ": shapes " + a.shape_string() + " and " +
                             b.shape_string() + " differ");
    }
}

void require_finite(const Tensor& t, const char* what) {
    if (!t.all_finite()) {
        throw DomainError(std::string(what) + ": non-finite input");
    }
}

void require_distribution_rows(const Tensor& targets) {
    for (std::size_t i = 0; i < targets.rows(); ++i) {
        double sum = 0.0;
        for (double t : targets.row(i)) {
            if (!(t >= 0.0)) {
                throw ContractError("target row " + std::to_string(i) + " has a negative or NaN entry");
            }
            sum += t;
        }
        if (std::abs(sum - 1.0) > 1e-9) {
            throw ContractError("target row " + std::to_string(i) + " sums to " + std::to_string(sum) +
                                ", not 1");
        }
    }
}

}  // namespace

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        s += a[i] * b[i];
    }
    return s;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.cols() != b.rows()) {
        throw DimensionError("matmul: inner dimensions of " + a.shape_string() + " and " +
                             b.shape_string() + " disagree");
    }
    const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    Tensor out({m, n});
    // i-p-j loop order: each out(i, j) still accumulates p = 0, 1, ... in order.
    for (std::size_t i = 0; i < m; ++i) {
        auto dst = out.row(i);
        for (std::size_t p = 0; p < k; ++p) {
            const double aip = a(i, p);
            const auto src = b.row(p);
            for (std::size_t j = 0; j < n; ++j) {
                dst[j] += aip * src[j];
            }
        }
    }
    return out;
}

Tensor matmul_bt(const Tensor& a, const Tensor& b) {
    if (a.cols() != b.cols()) {
        throw DimensionError("matmul_bt: column counts of " + a.shape_string() + " and " +
                             b.shape_string() + " disagree");
    }
    const std::size_t m = a.rows(), n = b.rows();
    Tensor out({m, n});
    for (std::size_t i = 0; i < m; ++i) {
        const auto ai = a.row(i);
        for (std::size_t j = 0; j < n; ++j) {
            out(i, j) = dot(ai, b.row(j));
        }
    }
    return out;
}

Tensor matmul_at(const Tensor& a, const Tensor& b) {
    if (a.rows() != b.rows()) {
        throw DimensionError("matmul_at: row counts of " + a.shape_string() + " and " +
                             b.shape_string() + " disagree");
    }
    const std::size_t k = a.rows(), m = a.cols(), n = b.cols();
    Tensor out({m, n});
    // p outermost: every out(i, j) accumulates rows p = 0, 1, ... in order.
    for (std::size_t p = 0; p < k; ++p) {
        const auto ap = a.row(p);
        const auto bp = b.row(p);
        for (std::size_t i = 0; i < m; ++i) {
            const double api = ap[i];
            auto dst = out.row(i);
            for (std::size_t j = 0; j < n; ++j) {
                dst[j] += api * bp[j];
            }
        }
    }
    return out;
}

Tensor log_softmax(const Tensor& logits) {
    if (logits.cols() < 1) {
        throw DimensionError("log_softmax: need at least one class, got " + logits.shape_string());
    }
    require_finite(logits, "log_softmax");
    Tensor out(logits.shape());
    for (std::size_t i = 0; i < logits.rows(); ++i) {
        const auto row = logits.row(i);
        const double mx = *std::max_element(row.begin(), row.end());
        double sum = 0.0;
        for (double l : row) {
            sum += std::exp(l - mx);
        }
        const double log_sum = std::log(sum);
        auto dst = out.row(i);
        for (std::size_t j = 0; j < row.size(); ++j) {
            dst[j] = (row[j] - mx) - log_sum;
        }
    }
    return out;
}

Tensor softmax(const Tensor& logits) {
    Tensor out = log_softmax(logits);
    for (double& v : out.values()) {
        v = std::exp(v);
    }
    return out;
}

LossGrad soft_cross_entropy(const Tensor& logits, const Tensor& targets) {
    require_same_shape(logits, targets, "soft_cross_entropy");
    require_distribution_rows(targets);
    const Tensor logp = log_softmax(logits);
    const std::size_t n = logits.rows();
    const double inv_n = 1.0 / static_cast<double>(n);

    LossGrad result{0.0, Tensor(logits.shape())};
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double row_loss = 0.0;
        for (std::size_t j = 0; j < logits.cols(); ++j) {
            const double t = targets(i, j);
            if (t != 0.0) {
                row_loss -= t * logp(i, j);
            }
            result.grad(i, j) = (std::exp(logp(i, j)) - t) * inv_n;
        }
        total += row_loss;
    }
    result.value = total * inv_n;
    return result;
}

double mean_row_entropy(const Tensor& targets) {
    double total = 0.0;
    for (std::size_t i = 0; i < targets.rows(); ++i) {
        for (double t : targets.row(i)) {
            if (t > 0.0) {
                total -= t * std::log(t);
            }
        }
    }
    return targets.rows() == 0 ? 0.0 : total / static_cast<double>(targets.rows());
}

LossGrad kl_divergence_to_logits(const Tensor& logits, const Tensor& targets) {
    require_same_shape(logits, targets, "kl_divergence_to_logits");
    require_distribution_rows(targets);
    const Tensor logp = log_softmax(logits);
    const std::size_t n = logits.rows();
    const double inv_n = 1.0 / static_cast<double>(n);

    LossGrad result{0.0, Tensor(logits.shape())};
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double row_kl = 0.0;
        for (std::size_t j = 0; j < logits.cols(); ++j) {
            const double t = targets(i, j);
            if (t > 0.0) {
                row_kl += t * (std::log(t) - logp(i, j));
            }
            result.grad(i, j) = (std::exp(logp(i, j)) - t) * inv_n;
        }
        total += row_kl;
    }
    result.value = total * inv_n;
    return result;
}

Tensor l2_normalize_rows(const Tensor& x, double eps) {
    if (!(eps > 0.0)) {
        throw ConfigError("l2_normalize_rows: eps must be positive");
    }
    Tensor out(x.shape());
    for (std::size_t i = 0; i < x.rows(); ++i) {
        const auto r = x.row(i);
        const double norm = std::max(eps, std::sqrt(dot(r, r)));
        auto dst = out.row(i);
        for (std::size_t j = 0; j < r.size(); ++j) {
            dst[j] = r[j] / norm;
        }
    }
    return out;
}

Tensor l2_normalize_rows_backward(const Tensor& x, double eps, const Tensor& grad_out) {
    require_same_shape(x, grad_out, "l2_normalize_rows_backward");
    Tensor grad_in(x.shape());
    for (std::size_t i = 0; i < x.rows(); ++i) {
        const auto r = x.row(i);
        const auto g = grad_out.row(i);
        auto dst = grad_in.row(i);
        const double raw_norm = std::sqrt(dot(r, r));
        if (raw_norm <= eps) {
            // Constant divisor on the guarded branch.
            for (std::size_t j = 0; j < r.size(); ++j) {
                dst[j] = g[j] / eps;
            }
            continue;
        }
        // d(x/|x|) = (g - y (y.g)) / |x|
        double yg = 0.0;
        for (std::size_t j = 0; j < r.size(); ++j) {
            yg += (r[j] / raw_norm) * g[j];
        }
        for (std::size_t j = 0; j < r.size(); ++j) {
            dst[j] = (g[j] - (r[j] / raw_norm) * yg) / raw_norm;
        }
    }
    return grad_in;
}

GradCheckReport finite_difference_check(const ScalarFunction& f, const Tensor& point,
                                        const Tensor& analytic, double step) {
    if (!(step > 0.0)) {
        throw ConfigError("finite_difference_check: step must be positive");
    }
    require_same_shape(point, analytic, "finite_difference_check");

    GradCheckReport report;
    Tensor probe = point;
    for (std::size_t i = 0; i < point.size(); ++i) {
        const double original = probe[i];
        probe[i] = original + step;
        const double f_plus = f(probe);
        probe[i] = original - step;
        const double f_minus = f(probe);
        probe[i] = original;
        if (!std::isfinite(f_plus) || !std::isfinite(f_minus)) {
            throw DomainError("finite_difference_check: non-finite function value at coordinate " +
                              std::to_string(i));
        }
        const double numeric = (f_plus - f_minus) / (2.0 * step);
        const double a = analytic[i];
        const double rel = std::abs(a - numeric) / std::max(1e-12, std::abs(a) + std::abs(numeric));
        if (i == 0 || rel > report.max_relative_error) {
            report = {rel, i, a, numeric};
        }
    }
    return report;
}

GradCheckReport worse_of(const GradCheckReport& a, const GradCheckReport& b) {
    return b.max_relative_error > a.max_relative_error ? b : a;
}

}  // namespace mixco
