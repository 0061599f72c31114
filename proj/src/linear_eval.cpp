#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "mixco/errors.hpp"
#include "mixco/numerics.hpp"
#include "mixco/training.hpp"

namespace mixco {

namespace {

Tensor probe_logits(const LinearProbe& probe, const Tensor& x) {
    Tensor logits = matmul_bt(x, probe.weight);
    for (std::size_t i = 0; i < logits.rows(); ++i) {
        auto r = logits.row(i);
        for (std::size_t j = 0; j < r.size(); ++j) {
            r[j] += probe.bias[j];
        }
    }
    return logits;
}

}  // namespace

double probe_accuracy(const LinearProbe& probe, const Tensor& x, std::span<const int> labels) {
    if (labels.empty()) {
        return 0.0;
    }
    const Tensor logits = probe_logits(probe, x);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < logits.rows(); ++i) {
        const auto r = logits.row(i);
        const auto pred = std::distance(r.begin(), std::max_element(r.begin(), r.end()));
        if (pred == labels[i]) {
            ++correct;
        }
    }
    return static_cast<double>(correct) / static_cast<double>(labels.size());
}

ProbeResult train_linear_probe(const Tensor& train_x, std::span<const int> train_y, const Tensor& test_x,
                               std::span<const int> test_y, int class_count, const ProbeConfig& cfg) {
    if (class_count < 2) {
        throw ConfigError("linear probe needs at least 2 classes");
    }
    if (train_x.rows() != train_y.size() || test_x.rows() != test_y.size() || train_x.cols() != test_x.cols()) {
        throw DimensionError("linear probe: embedding/label counts disagree");
    }
    if (cfg.batch_size == 0) {
        throw ConfigError("probe_batch_size: must be >= 1");
    }
    std::vector<bool> seen(static_cast<std::size_t>(class_count), false);
    for (int y : train_y) {
        if (y < 0 || y >= class_count) {
            throw ConfigError("linear probe: label " + std::to_string(y) + " out of range");
        }
        seen[static_cast<std::size_t>(y)] = true;
    }
    for (int c = 0; c < class_count; ++c) {
        if (!seen[static_cast<std::size_t>(c)]) {
            throw ConfigError("linear probe: class " + std::to_string(c) + " is absent from the training split");
        }
    }

    const auto classes = static_cast<std::size_t>(class_count);
    const std::size_t dim = train_x.cols();
    const std::size_t n = train_x.rows();
    LinearProbe probe{Tensor({classes, dim}), Tensor({1, classes})};
    Tensor vel_w({classes, dim});
    Tensor vel_b({1, classes});
    Rng rng = Rng::derive(cfg.seed, "probe");

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double lr = cfg.lr0 * 0.5 *
                          (1.0 + std::cos(std::numbers::pi * static_cast<double>(epoch) /
                                          static_cast<double>(cfg.epochs)));
        const auto order = rng.permutation(n);
        for (std::size_t start = 0; start < n; start += cfg.batch_size) {
            const std::size_t stop = std::min(n, start + cfg.batch_size);
            const std::span<const std::size_t> idx(order.data() + start, stop - start);
            const Tensor xb = gather_rows(train_x, idx);
            Tensor grad = softmax(probe_logits(probe, xb));
            const double inv_nb = 1.0 / static_cast<double>(idx.size());
            for (std::size_t i = 0; i < idx.size(); ++i) {
                grad(i, static_cast<std::size_t>(train_y[idx[i]])) -= 1.0;
            }
            for (double& g : grad.values()) {
                g *= inv_nb;
            }
            const Tensor gw = matmul_at(grad, xb);
            for (std::size_t i = 0; i < probe.weight.size(); ++i) {
                vel_w[i] = cfg.momentum * vel_w[i] + gw[i] + cfg.weight_decay * probe.weight[i];
                probe.weight[i] -= lr * vel_w[i];
            }
            for (std::size_t j = 0; j < classes; ++j) {
                double gb = 0.0;
                for (std::size_t i = 0; i < grad.rows(); ++i) {
                    gb += grad(i, j);
                }
                vel_b[j] = cfg.momentum * vel_b[j] + gb;
                probe.bias[j] -= lr * vel_b[j];
            }
        }
        if (!probe.weight.all_finite() || !probe.bias.all_finite()) {
            throw DivergenceError("linear probe diverged at epoch " + std::to_string(epoch + 1));
        }
    }
    return {probe_accuracy(probe, test_x, test_y), std::move(probe)};
}

ProbeResult linear_eval(const EncoderParams& encoder, const Dataset& train, const Dataset& test,
                        const ProbeConfig& cfg) {
    const Tensor train_v = embed(encoder, train.features);
    const Tensor test_v = embed(encoder, test.features);
    return train_linear_probe(train_v, train.labels, test_v, test.labels, std::max(train.class_count, test.class_count),
                              cfg);
}

}  // namespace mixco
