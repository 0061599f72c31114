#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mixco/rng.hpp"
#include "mixco/tensor.hpp"

namespace mixco {

/// Half-batch mix-up: row i of x_mix is lambdas[i] * x[i] + (1 - lambdas[i]) * x[i + B/2].
struct MixedHalfBatch {
    Tensor x_mix;
    std::vector<double> lambdas;

    /// Mixing partner of mixed row i in a batch of size B.
    [[nodiscard]] static std::size_t partner(std::size_t i, std::size_t batch) { return i + batch / 2; }
};

/// Draws B/2 coefficients, each uniform on the open interval (0, 1).
[[nodiscard]] std::vector<double> sample_mix_coefficients(std::size_t count, Rng& rng);

/// Mixes the first half of x with the second half using fresh coefficients.
[[nodiscard]] MixedHalfBatch mixup_half_batch(const Tensor& x, Rng& rng);

/// Same with caller-supplied coefficients. Values in the closed interval
/// [0, 1] are accepted here so the endpoints can be exercised.
[[nodiscard]] MixedHalfBatch mixup_half_batch(const Tensor& x, std::span<const double> lambdas);

/// Queries v, keys v', negative queue and temperature for the MoCo loss.
struct ContrastInstance {
    Tensor queries;   // B x C
    Tensor keys;      // B x C
    Tensor queue;     // K x C, K may be 0
    double temperature = 0.2;

    /// Validates shapes, unit-norm rows (1e-9) and tau > 0.
    static ContrastInstance make(Tensor queries, Tensor keys, Tensor queue, double temperature);
};

struct ContrastResult {
    double value = 0.0;
    Tensor grad_queries;
    Tensor grad_keys;         // filled only where keys receive gradient (in-batch mode)
    bool degenerate = false;  // no negatives: loss identically zero
};

/// InfoNCE with a queue. Logit row i is [q_i.k_i, q_i.queue_0, ...] / tau with
/// the positive at column 0; the loss is the mean over rows of the
/// cross-entropy against column 0. Gradient only with respect to queries.
[[nodiscard]] ContrastResult contrastive_loss(const Tensor& queries, const Tensor& keys,
                                              const Tensor& queue, double temperature);
[[nodiscard]] ContrastResult contrastive_loss(const ContrastInstance& inst);

/// In-batch negatives: logits v v'^T / tau, positive on the diagonal.
/// Gradients with respect to both views.
[[nodiscard]] ContrastResult simclr_contrastive_loss(const Tensor& v, const Tensor& v_prime,
                                                     double temperature);

/// [(B/2) x (B+K)] logits: v_mix . keys^T then v_mix . queue^T, all / tau_mix.
[[nodiscard]] Tensor build_mixco_logits(const Tensor& v_mix, const Tensor& keys, const Tensor& queue,
                                        double tau_mix);

/// Soft targets: row i holds lambda_i at column i, 1 - lambda_i at column
/// i + B/2, zeros elsewhere including every queue column.
struct MixcoTargets {
    Tensor matrix;
};

[[nodiscard]] MixcoTargets build_mixco_targets(std::span<const double> lambdas, std::size_t batch,
                                               std::size_t queue_size);

struct MixcoResult {
    double value = 0.0;
    Tensor grad_mix;   // (B/2) x C
    Tensor grad_keys;  // B x C; only consumed when keys are trainable
};

/// Semi-positive loss as soft cross-entropy over the (B+K)-way logits.
[[nodiscard]] MixcoResult mixco_loss(const Tensor& v_mix, const Tensor& keys, const Tensor& queue,
                                     std::span<const double> lambdas, double tau_mix);

/// Divergence form of the same objective: value lower by the mean target
/// entropy, identical gradients.
[[nodiscard]] MixcoResult mixco_loss_kl(const Tensor& v_mix, const Tensor& keys, const Tensor& queue,
                                        std::span<const double> lambdas, double tau_mix);

/// l_contrast + beta * l_mixco.
[[nodiscard]] double total_loss(double l_contrast, double l_mixco, double beta);

}  // namespace mixco
