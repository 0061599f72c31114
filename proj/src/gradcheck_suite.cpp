#include "mixco/gradcheck_suite.hpp"

#include <algorithm>
#include <functional>

#include "mixco/contrastive.hpp"
#include "mixco/encoder.hpp"
#include "mixco/moco.hpp"
#include "mixco/rng.hpp"
#include "mixco/training.hpp"

namespace mixco {

namespace {

constexpr double kStep = 1e-5;

Tensor random_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
    Tensor t({rows, cols});
    for (double& v : t.values()) {
        v = rng.normal();
    }
    return t;
}

Tensor random_unit_rows(std::size_t rows, std::size_t cols, Rng& rng) {
    return l2_normalize_rows(random_matrix(rows, cols, rng), kNormEps);
}

// Random biases keep every row away from the all-ReLUs-dead point, where
// the output normalization is not differentiable.
EncoderParams random_encoder(const std::vector<std::size_t>& layers, Rng& rng) {
    EncoderParams p = init_encoder(layers, rng);
    for (auto& b : p.biases) {
        for (double& v : b.values()) {
            v = rng.normal(0.0, 0.5);
        }
    }
    return p;
}

Tensor random_distribution_rows(std::size_t rows, std::size_t cols, Rng& rng) {
    Tensor t({rows, cols});
    for (std::size_t i = 0; i < rows; ++i) {
        double sum = 0.0;
        for (double& v : t.row(i)) {
            v = rng.uniform_open();
            sum += v;
        }
        for (double& v : t.row(i)) {
            v /= sum;
        }
    }
    return t;
}

class Recorder {
public:
    void add(const std::string& name, const GradCheckReport& r) {
        auto it = std::find_if(entries_.begin(), entries_.end(), [&](const auto& e) { return e.name == name; });
        if (it == entries_.end()) {
            entries_.push_back({name, r, 1});
        } else {
            it->worst = worse_of(it->worst, r);
            ++it->instances;
        }
    }

    std::vector<GradSuiteEntry> take() { return std::move(entries_); }

private:
    std::vector<GradSuiteEntry> entries_;
};

// Checks every parameter block of `params` for a scalar objective whose
// analytic gradient is `grads`.
void check_encoder_blocks(Recorder& rec, const std::string& name, const EncoderParams& params,
                          const EncoderGrads& grads,
                          const std::function<double(const EncoderParams&)>& objective) {
    for (std::size_t l = 0; l < params.layer_count(); ++l) {
        rec.add(name, finite_difference_check(
                          [&](const Tensor& w) {
                              EncoderParams p = params;
                              p.weights[l] = w;
                              return objective(p);
                          },
                          params.weights[l], grads.weights[l], kStep));
        rec.add(name, finite_difference_check(
                          [&](const Tensor& b) {
                              EncoderParams p = params;
                              p.biases[l] = b;
                              return objective(p);
                          },
                          params.biases[l], grads.biases[l], kStep));
    }
}

}  // namespace

double GradSuiteReport::worst_relative_error() const {
    double worst = 0.0;
    for (const auto& e : entries) {
        worst = std::max(worst, e.worst.max_relative_error);
    }
    return worst;
}

GradSuiteReport run_gradient_suite(std::uint64_t seed, std::size_t instances) {
    Recorder rec;
    for (std::size_t inst = 0; inst < instances; ++inst) {
        Rng rng = Rng::derive(seed + inst, "gradcheck");
        const std::size_t b = 2 * (1 + rng.below(4));  // 2..8, even
        const std::size_t k = 1 + rng.below(8);        // 1..8
        const std::size_t c = 2 + rng.below(7);        // 2..8
        const double tau = rng.uniform(0.1, 1.0);
        const double tau_mix = rng.uniform(0.1, 1.0);

        // Softmax-family losses on raw logits.
        {
            const Tensor logits = random_matrix(b, k + 2, rng);
            const Tensor targets = random_distribution_rows(b, k + 2, rng);
            rec.add("soft_cross_entropy",
                    finite_difference_check([&](const Tensor& l) { return soft_cross_entropy(l, targets).value; },
                                            logits, soft_cross_entropy(logits, targets).grad, kStep));
            rec.add("kl_divergence_to_logits",
                    finite_difference_check(
                        [&](const Tensor& l) { return kl_divergence_to_logits(l, targets).value; }, logits,
                        kl_divergence_to_logits(logits, targets).grad, kStep));
        }
        // Row normalization through a linear functional.
        {
            const Tensor x = random_matrix(b, c, rng);
            const Tensor w = random_matrix(b, c, rng);
            auto f = [&](const Tensor& in) {
                const Tensor y = l2_normalize_rows(in, kNormEps);
                double s = 0.0;
                for (std::size_t i = 0; i < y.size(); ++i) {
                    s += w[i] * y[i];
                }
                return s;
            };
            rec.add("l2_normalize_rows", finite_difference_check(f, x, l2_normalize_rows_backward(x, kNormEps, w), kStep));
        }

        const Tensor queries = random_unit_rows(b, c, rng);
        const Tensor keys = random_unit_rows(b, c, rng);
        const Tensor queue = random_unit_rows(k, c, rng);
        {
            const ContrastResult r = contrastive_loss(queries, keys, queue, tau);
            rec.add("contrastive_loss",
                    finite_difference_check(
                        [&](const Tensor& q) { return contrastive_loss(q, keys, queue, tau).value; }, queries,
                        r.grad_queries, kStep));
        }
        {
            const ContrastResult r = simclr_contrastive_loss(queries, keys, tau);
            rec.add("simclr_contrastive_loss",
                    finite_difference_check(
                        [&](const Tensor& v) { return simclr_contrastive_loss(v, keys, tau).value; }, queries,
                        r.grad_queries, kStep));
            rec.add("simclr_contrastive_loss",
                    finite_difference_check(
                        [&](const Tensor& v2) { return simclr_contrastive_loss(queries, v2, tau).value; }, keys,
                        r.grad_keys, kStep));
        }
        {
            const Tensor v_mix = random_unit_rows(b / 2, c, rng);
            const auto lambdas = sample_mix_coefficients(b / 2, rng);
            const MixcoResult r = mixco_loss(v_mix, keys, queue, lambdas, tau_mix);
            rec.add("mixco_loss",
                    finite_difference_check(
                        [&](const Tensor& vm) { return mixco_loss(vm, keys, queue, lambdas, tau_mix).value; },
                        v_mix, r.grad_mix, kStep));
            rec.add("mixco_loss",
                    finite_difference_check(
                        [&](const Tensor& kk) { return mixco_loss(v_mix, kk, queue, lambdas, tau_mix).value; },
                        keys, r.grad_keys, kStep));
        }

        // Full objective through the encoder.
        const std::size_t d = 3 + rng.below(4);
        const std::size_t hidden = 4 + rng.below(5);
        const std::vector<std::size_t> layers{d, hidden, c};
        RunConfig cfg;
        cfg.layers = layers;
        cfg.batch_size = b;
        cfg.tau = tau;
        cfg.tau_mix = tau_mix;
        cfg.beta = rng.uniform(0.25, 1.5);
        const Tensor x_q = random_matrix(b, d, rng);
        const Tensor x_k = random_matrix(b, d, rng);
        const auto lambdas = sample_mix_coefficients(b / 2, rng);
        {
            MoCoState state = init_moco(layers, k, 0.9, rng);
            state.query = random_encoder(layers, rng);
            state.key = random_encoder(layers, rng);
            const MocoStep step = moco_step(state, x_q, x_k, lambdas, cfg);
            check_encoder_blocks(rec, "moco+mixco composite", state.query, step.query_grads,
                                 [&](const EncoderParams& p) {
                                     MoCoState s = state;
                                     s.query = p;
                                     return moco_step(s, x_q, x_k, lambdas, cfg).losses.total;
                                 });
        }
        {
            const EncoderParams params = random_encoder(layers, rng);
            const SimclrStep step = simclr_step(params, x_q, x_k, lambdas, cfg);
            check_encoder_blocks(rec, "simclr+mixco composite", params, step.grads, [&](const EncoderParams& p) {
                return simclr_step(p, x_q, x_k, lambdas, cfg).losses.total;
            });
        }
    }
    return {rec.take()};
}

}  // namespace mixco
