#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>

#include "mixco/contrastive.hpp"
#include "mixco/errors.hpp"
#include "mixco/training.hpp"

namespace mixco {

namespace {

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

std::string format_metrics_line(const MetricsRecord& r) {
    return "epoch=" + std::to_string(r.epoch) + " l_contrast=" + fmt17(r.l_contrast) +
           " l_mixco=" + fmt17(r.l_mixco) + " l_total=" + fmt17(r.l_total) + " lr=" + fmt17(r.lr);
}

MetricsRecord parse_metrics_line(const std::string& line) {
    MetricsRecord r;
    std::istringstream ss(line);
    std::string field;
    const char* expected[] = {"epoch", "l_contrast", "l_mixco", "l_total", "lr"};
    for (const char* name : expected) {
        if (!(ss >> field)) {
            throw FormatError("metrics line is missing field '" + std::string(name) + "'", 0);
        }
        const auto eq = field.find('=');
        if (eq == std::string::npos || field.substr(0, eq) != name) {
            throw FormatError("metrics line has '" + field + "' where '" + name + "' was expected", 0);
        }
        const std::string value = field.substr(eq + 1);
        if (std::string(name) == "epoch") {
            r.epoch = std::stoul(value);
        } else {
            const double v = std::strtod(value.c_str(), nullptr);
            if (std::string(name) == "l_contrast") r.l_contrast = v;
            else if (std::string(name) == "l_mixco") r.l_mixco = v;
            else if (std::string(name) == "l_total") r.l_total = v;
            else r.lr = v;
        }
    }
    return r;
}

void write_metrics_log(const std::filesystem::path& path, std::span<const MetricsRecord> records) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw FileError("cannot open '" + path.string() + "' for writing");
    }
    for (const auto& r : records) {
        out << format_metrics_line(r) << '\n';
    }
    if (!out) {
        throw FileError("write to '" + path.string() + "' failed");
    }
}

void write_timing_log(const std::filesystem::path& path, std::span<const MetricsRecord> records) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw FileError("cannot open '" + path.string() + "' for writing");
    }
    for (const auto& r : records) {
        out << "epoch=" << r.epoch << " wall_seconds=" << fmt17(r.wall_seconds) << '\n';
    }
}

double learning_rate_at(const RunConfig& cfg, std::size_t epoch_index) {
    if (cfg.lr_schedule == LrSchedule::constant || cfg.epochs == 0) {
        return cfg.lr;
    }
    const double progress = static_cast<double>(epoch_index) / static_cast<double>(cfg.epochs);
    return cfg.lr * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

MocoStep moco_step(const MoCoState& state, const Tensor& x_q, const Tensor& x_k,
                   std::span<const double> lambdas, const RunConfig& cfg) {
    MocoStep step;
    const Encoded q = encode(state.query, x_q);
    step.keys = key_forward_no_grad(state, x_k);

    const ContrastResult contrast = contrastive_loss(q.v, step.keys, state.queue, cfg.tau);
    step.query_grads = encoder_backward(state.query, q.trace, contrast.grad_queries);
    step.losses.contrast = contrast.value;

    if (!lambdas.empty()) {
        const MixedHalfBatch mixed = mixup_half_batch(x_q, lambdas);
        const Encoded qm = encode(state.query, mixed.x_mix);
        const MixcoResult mix = mixco_loss(qm.v, step.keys, state.queue, lambdas, cfg.tau_mix);
        step.losses.mixco = mix.value;
        if (cfg.beta != 0.0) {
            accumulate(step.query_grads, encoder_backward(state.query, qm.trace, mix.grad_mix), cfg.beta);
        }
    }
    step.losses.total = total_loss(step.losses.contrast, step.losses.mixco, cfg.beta);
    return step;
}

SimclrStep simclr_step(const EncoderParams& params, const Tensor& x_q, const Tensor& x_k,
                       std::span<const double> lambdas, const RunConfig& cfg) {
    SimclrStep step;
    const Encoded q = encode(params, x_q);
    const Encoded k = encode(params, x_k);
    const ContrastResult contrast = simclr_contrastive_loss(q.v, k.v, cfg.tau);
    step.losses.contrast = contrast.value;
    step.grads = encoder_backward(params, q.trace, contrast.grad_queries);
    Tensor grad_keys = contrast.grad_keys;

    if (!lambdas.empty()) {
        const MixedHalfBatch mixed = mixup_half_batch(x_q, lambdas);
        const Encoded qm = encode(params, mixed.x_mix);
        const Tensor no_queue({0, params.output_dim()});
        const MixcoResult mix = mixco_loss(qm.v, k.v, no_queue, lambdas, cfg.tau_mix);
        step.losses.mixco = mix.value;
        if (cfg.beta != 0.0) {
            accumulate(step.grads, encoder_backward(params, qm.trace, mix.grad_mix), cfg.beta);
            for (std::size_t i = 0; i < grad_keys.size(); ++i) {
                grad_keys[i] += cfg.beta * mix.grad_keys[i];
            }
        }
    }
    accumulate(step.grads, encoder_backward(params, k.trace, grad_keys));
    step.losses.total = total_loss(step.losses.contrast, step.losses.mixco, cfg.beta);
    return step;
}

EncoderParams initial_encoder(const RunConfig& cfg) {
    cfg.validate();
    Rng init_rng = Rng::derive(cfg.seed, "init");
    return init_encoder(cfg.layers, init_rng, cfg.seed);
}

PretrainResult pretrain(const RunConfig& cfg, const UnlabeledView& data, const EpochCallback& on_epoch) {
    cfg.validate();
    if (data.dim() != cfg.input_dim()) {
        throw ConfigError("layers: input size " + std::to_string(cfg.input_dim()) +
                          " does not match dataset dimension " + std::to_string(data.dim()));
    }
    if (cfg.batch_size > data.size()) {
        throw ConfigError("batch_size: larger than the dataset (" + std::to_string(data.size()) + " rows)");
    }

    if (!data.features().all_finite()) {
        throw DomainError("pretraining data contains non-finite features");
    }

    Rng init_rng = Rng::derive(cfg.seed, "init");
    Rng batch_rng = Rng::derive(cfg.seed, "batches");
    Rng aug_rng = Rng::derive(cfg.seed, "augment");
    Rng mix_rng = Rng::derive(cfg.seed, "mix");

    PretrainResult result;
    if (cfg.uses_queue()) {
        result.moco = init_moco(cfg.layers, cfg.queue_size, cfg.key_momentum, init_rng, cfg.seed);
    } else {
        result.encoder = init_encoder(cfg.layers, init_rng, cfg.seed);
    }
    EncoderParams& trained = cfg.uses_queue() ? result.moco->query : result.encoder;
    SgdVelocity velocity = init_velocity(trained);

    const auto clock_start = std::chrono::steady_clock::now();
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        const SgdConfig sgd{learning_rate_at(cfg, epoch), cfg.sgd_momentum, cfg.weight_decay};
        const auto batches = epoch_batches(data.size(), cfg.batch_size, batch_rng);

        double sum_contrast = 0.0, sum_mixco = 0.0, sum_total = 0.0;
        std::size_t counted = 0;
        for (std::size_t b = 0; b < batches.size(); ++b) {
            const Tensor x = gather_rows(data.features(), batches[b]);
            const Views views = two_views(x, cfg.augment, aug_rng);
            std::vector<double> lambdas;
            if (cfg.mixco_active()) {
                lambdas = sample_mix_coefficients(cfg.batch_size / 2, mix_rng);
            }

            StepLosses losses;
            try {
                if (cfg.uses_queue()) {
                    MoCoState& state = *result.moco;
                    if (cfg.skip_warmup_loss && !state.queue_warm()) {
                        enqueue_dequeue(state, key_forward_no_grad(state, views.key));
                        continue;
                    }
                    MocoStep step = moco_step(state, views.query, views.key, lambdas, cfg);
                    losses = step.losses;
                    if (!std::isfinite(losses.total)) {
                        throw DivergenceError("non-finite loss");
                    }
                    apply_sgd_step(state.query, step.query_grads, sgd, velocity);
                    momentum_update(state);
                    enqueue_dequeue(state, step.keys);
                } else {
                    SimclrStep step = simclr_step(result.encoder, views.query, views.key, lambdas, cfg);
                    losses = step.losses;
                    if (!std::isfinite(losses.total)) {
                        throw DivergenceError("non-finite loss");
                    }
                    apply_sgd_step(result.encoder, step.grads, sgd, velocity);
                }
            } catch (const DivergenceError& e) {
                throw DivergenceError("training diverged at epoch " + std::to_string(epoch + 1) + ", batch " +
                                      std::to_string(b + 1) + ": " + e.what());
            } catch (const DomainError& e) {
                throw DivergenceError("training diverged at epoch " + std::to_string(epoch + 1) + ", batch " +
                                      std::to_string(b + 1) + ": " + e.what());
            }
            sum_contrast += losses.contrast;
            sum_mixco += losses.mixco;
            sum_total += losses.total;
            ++counted;
        }

        MetricsRecord rec;
        rec.epoch = epoch + 1;
        rec.lr = sgd.lr;
        if (counted > 0) {
            const double n = static_cast<double>(counted);
            rec.l_contrast = sum_contrast / n;
            rec.l_mixco = sum_mixco / n;
            rec.l_total = sum_total / n;
        }
        rec.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - clock_start).count();
        result.metrics.push_back(rec);
        if (on_epoch) {
            on_epoch(rec);
        }
    }
    if (cfg.uses_queue()) {
        result.encoder = result.moco->query;
    }
    return result;
}

}  // namespace mixco
