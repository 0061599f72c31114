#include "mixco/contrastive.hpp"

#include <cmath>
#include <string>

#include "mixco/errors.hpp"
#include "mixco/numerics.hpp"

namespace mixco {

namespace {

void require_positive_temperature(double tau, const char* name) {
    if (!(tau > 0.0) || !std::isfinite(tau)) {
        throw ConfigError(std::string(name) + " must be a positive finite temperature");
    }
}

void require_cols(const Tensor& t, std::size_t c, const char* what) {
    if (t.rank() != 2 || t.cols() != c) {
        throw DimensionError(std::string(what) + " must have " + std::to_string(c) + " columns, got " +
                             t.shape_string());
    }
}

void require_unit_rows(const Tensor& t, const char* what) {
    for (std::size_t i = 0; i < t.rows(); ++i) {
        const auto r = t.row(i);
        if (std::abs(std::sqrt(dot(r, r)) - 1.0) > 1e-9) {
            throw ContractError(std::string(what) + " row " + std::to_string(i) + " is not unit-norm");
        }
    }
}

// out_i += scale * sum_j g(i, col0 + j) * rows_j
void add_weighted_rows(Tensor& out, const Tensor& g, std::size_t col0, const Tensor& rows, double scale) {
    for (std::size_t i = 0; i < out.rows(); ++i) {
        auto dst = out.row(i);
        for (std::size_t j = 0; j < rows.rows(); ++j) {
            const double w = g(i, col0 + j) * scale;
            const auto src = rows.row(j);
            for (std::size_t c = 0; c < dst.size(); ++c) {
                dst[c] += w * src[c];
            }
        }
    }
}

template <typename LossFn>
MixcoResult mixco_with(LossFn&& loss_fn, const Tensor& v_mix, const Tensor& keys, const Tensor& queue,
                       std::span<const double> lambdas, double tau_mix) {
    const Tensor logits = build_mixco_logits(v_mix, keys, queue, tau_mix);
    const MixcoTargets targets = build_mixco_targets(lambdas, keys.rows(), queue.rows());
    if (targets.matrix.rows() != v_mix.rows()) {
        throw DimensionError("mixco_loss: " + std::to_string(v_mix.rows()) +
                             " mixed rows but batch of " + std::to_string(keys.rows()) + " keys");
    }
    const LossGrad lg = loss_fn(logits, targets.matrix);

    MixcoResult r{lg.value, Tensor(v_mix.shape()), Tensor(keys.shape())};
    const double inv_tau = 1.0 / tau_mix;
    add_weighted_rows(r.grad_mix, lg.grad, 0, keys, inv_tau);
    add_weighted_rows(r.grad_mix, lg.grad, keys.rows(), queue, inv_tau);
    // d/dk_j = sum_i G(i, j) v_mix_i / tau
    for (std::size_t j = 0; j < keys.rows(); ++j) {
        auto dst = r.grad_keys.row(j);
        for (std::size_t i = 0; i < v_mix.rows(); ++i) {
            const double w = lg.grad(i, j) * inv_tau;
            const auto src = v_mix.row(i);
            for (std::size_t c = 0; c < dst.size(); ++c) {
                dst[c] += w * src[c];
            }
        }
    }
    return r;
}

}  // namespace

std::vector<double> sample_mix_coefficients(std::size_t count, Rng& rng) {
    std::vector<double> lambdas(count);
    for (double& l : lambdas) {
        l = rng.uniform_open();
    }
    return lambdas;
}

MixedHalfBatch mixup_half_batch(const Tensor& x, Rng& rng) {
    if (x.rank() != 2 || x.rows() < 2 || x.rows() % 2 != 0) {
        throw ConfigError("mix-up needs an even batch of at least 2 rows, got " + x.shape_string());
    }
    const auto lambdas = sample_mix_coefficients(x.rows() / 2, rng);
    return mixup_half_batch(x, lambdas);
}

MixedHalfBatch mixup_half_batch(const Tensor& x, std::span<const double> lambdas) {
    if (x.rank() != 2 || x.rows() < 2 || x.rows() % 2 != 0) {
        throw ConfigError("mix-up needs an even batch of at least 2 rows, got " + x.shape_string());
    }
    const std::size_t half = x.rows() / 2;
    if (lambdas.size() != half) {
        throw DimensionError("mix-up expects " + std::to_string(half) + " coefficients, got " +
                             std::to_string(lambdas.size()));
    }
    MixedHalfBatch out{Tensor({half, x.cols()}), {lambdas.begin(), lambdas.end()}};
    for (std::size_t i = 0; i < half; ++i) {
        const double lam = lambdas[i];
        if (!(lam >= 0.0 && lam <= 1.0)) {
            throw ContractError("mix-up coefficient " + std::to_string(i) + " outside [0, 1]");
        }
        const auto a = x.row(i);
        const auto b = x.row(MixedHalfBatch::partner(i, x.rows()));
        auto dst = out.x_mix.row(i);
        for (std::size_t c = 0; c < dst.size(); ++c) {
            dst[c] = lam * a[c] + (1.0 - lam) * b[c];
        }
    }
    return out;
}

ContrastInstance ContrastInstance::make(Tensor queries, Tensor keys, Tensor queue, double temperature) {
    require_positive_temperature(temperature, "tau");
    if (queries.shape() != keys.shape()) {
        throw DimensionError("queries " + queries.shape_string() + " and keys " + keys.shape_string() +
                             " differ in shape");
    }
    require_cols(queue, queries.cols(), "queue");
    require_unit_rows(queries, "query");
    require_unit_rows(keys, "key");
    require_unit_rows(queue, "queue");
    return ContrastInstance{std::move(queries), std::move(keys), std::move(queue), temperature};
}

ContrastResult contrastive_loss(const Tensor& queries, const Tensor& keys, const Tensor& queue,
                                double temperature) {
    require_positive_temperature(temperature, "tau");
    if (queries.shape() != keys.shape() || queries.rank() != 2) {
        throw DimensionError("queries " + queries.shape_string() + " and keys " + keys.shape_string() +
                             " differ in shape");
    }
    const std::size_t b = queries.rows();
    const std::size_t c = queries.cols();
    require_cols(queue, c, "queue");
    const std::size_t k = queue.rows();

    ContrastResult r;
    r.grad_queries = Tensor({b, c});
    if (k == 0) {
        // Softmax over a single logit: the loss is identically zero.
        r.degenerate = true;
        return r;
    }

    const double inv_tau = 1.0 / temperature;
    Tensor logits({b, k + 1});
    Tensor targets({b, k + 1});
    for (std::size_t i = 0; i < b; ++i) {
        logits(i, 0) = dot(queries.row(i), keys.row(i)) * inv_tau;
        for (std::size_t j = 0; j < k; ++j) {
            logits(i, j + 1) = dot(queries.row(i), queue.row(j)) * inv_tau;
        }
        targets(i, 0) = 1.0;
    }
    const LossGrad lg = soft_cross_entropy(logits, targets);
    r.value = lg.value;
    for (std::size_t i = 0; i < b; ++i) {
        auto dst = r.grad_queries.row(i);
        const auto key = keys.row(i);
        const double w = lg.grad(i, 0) * inv_tau;
        for (std::size_t cc = 0; cc < c; ++cc) {
            dst[cc] += w * key[cc];
        }
    }
    add_weighted_rows(r.grad_queries, lg.grad, 1, queue, inv_tau);
    return r;
}

ContrastResult contrastive_loss(const ContrastInstance& inst) {
    return contrastive_loss(inst.queries, inst.keys, inst.queue, inst.temperature);
}

ContrastResult simclr_contrastive_loss(const Tensor& v, const Tensor& v_prime, double temperature) {
    require_positive_temperature(temperature, "tau");
    if (v.shape() != v_prime.shape() || v.rank() != 2) {
        throw DimensionError("views " + v.shape_string() + " and " + v_prime.shape_string() +
                             " differ in shape");
    }
    const std::size_t b = v.rows();
    if (b < 2) {
        throw ConfigError("in-batch contrastive loss needs B >= 2");
    }
    const double inv_tau = 1.0 / temperature;
    Tensor logits = matmul_bt(v, v_prime);
    for (double& l : logits.values()) {
        l *= inv_tau;
    }
    Tensor targets({b, b});
    for (std::size_t i = 0; i < b; ++i) {
        targets(i, i) = 1.0;
    }
    const LossGrad lg = soft_cross_entropy(logits, targets);

    ContrastResult r{lg.value, Tensor(v.shape()), Tensor(v.shape()), false};
    add_weighted_rows(r.grad_queries, lg.grad, 0, v_prime, inv_tau);
    for (std::size_t j = 0; j < b; ++j) {
        auto dst = r.grad_keys.row(j);
        for (std::size_t i = 0; i < b; ++i) {
            const double w = lg.grad(i, j) * inv_tau;
            const auto src = v.row(i);
            for (std::size_t cc = 0; cc < dst.size(); ++cc) {
                dst[cc] += w * src[cc];
            }
        }
    }
    return r;
}

Tensor build_mixco_logits(const Tensor& v_mix, const Tensor& keys, const Tensor& queue, double tau_mix) {
    require_positive_temperature(tau_mix, "tau_mix");
    const std::size_t c = v_mix.cols();
    require_cols(keys, c, "keys");
    require_cols(queue, c, "queue");
    const std::size_t b = keys.rows();
    const std::size_t k = queue.rows();
    const double inv_tau = 1.0 / tau_mix;
    Tensor logits({v_mix.rows(), b + k});
    for (std::size_t i = 0; i < v_mix.rows(); ++i) {
        const auto q = v_mix.row(i);
        for (std::size_t j = 0; j < b; ++j) {
            logits(i, j) = dot(q, keys.row(j)) * inv_tau;
        }
        for (std::size_t j = 0; j < k; ++j) {
            logits(i, b + j) = dot(q, queue.row(j)) * inv_tau;
        }
    }
    return logits;
}

MixcoTargets build_mixco_targets(std::span<const double> lambdas, std::size_t batch, std::size_t queue_size) {
    if (batch < 2 || batch % 2 != 0) {
        throw ConfigError("MixCo targets need an even batch size >= 2, got " + std::to_string(batch));
    }
    const std::size_t half = batch / 2;
    if (lambdas.size() != half) {
        throw DimensionError("expected " + std::to_string(half) + " mix coefficients, got " +
                             std::to_string(lambdas.size()));
    }
    MixcoTargets t{Tensor({half, batch + queue_size})};
    for (std::size_t i = 0; i < half; ++i) {
        const double lam = lambdas[i];
        if (!(lam > 0.0 && lam < 1.0)) {
            throw ContractError("mix coefficient " + std::to_string(i) + " = " + std::to_string(lam) +
                                " is outside (0, 1)");
        }
        t.matrix(i, i) = lam;
        t.matrix(i, MixedHalfBatch::partner(i, batch)) = 1.0 - lam;
    }
    return t;
}

MixcoResult mixco_loss(const Tensor& v_mix, const Tensor& keys, const Tensor& queue,
                       std::span<const double> lambdas, double tau_mix) {
    return mixco_with(soft_cross_entropy, v_mix, keys, queue, lambdas, tau_mix);
}

MixcoResult mixco_loss_kl(const Tensor& v_mix, const Tensor& keys, const Tensor& queue,
                          std::span<const double> lambdas, double tau_mix) {
    return mixco_with(kl_divergence_to_logits, v_mix, keys, queue, lambdas, tau_mix);
}

double total_loss(double l_contrast, double l_mixco, double beta) {
    if (!(beta >= 0.0)) {
        throw ConfigError("beta must be >= 0");
    }
    return l_contrast + beta * l_mixco;
}

}  // namespace mixco
