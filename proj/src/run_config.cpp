#include <charconv>
#include <cmath>
#include <cstdio>
#include <string>

#include "mixco/errors.hpp"
#include "mixco/training.hpp"

namespace mixco {

namespace {

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double parse_double(const std::string& key, const std::string& value) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc{} || ptr != value.data() + value.size() || !std::isfinite(v)) {
        throw ConfigError(key + ": expected a finite number, got '" + value + "'");
    }
    return v;
}

std::uint64_t parse_unsigned(const std::string& key, const std::string& value) {
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc{} || ptr != value.data() + value.size()) {
        throw ConfigError(key + ": expected a non-negative integer, got '" + value + "'");
    }
    return v;
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1") {
        return true;
    }
    if (value == "false" || value == "0") {
        return false;
    }
    throw ConfigError(key + ": expected true or false, got '" + value + "'");
}

std::vector<std::size_t> parse_layers(const std::string& key, const std::string& value) {
    std::vector<std::size_t> out;
    std::size_t pos = 0;
    while (pos <= value.size()) {
        const auto comma = value.find(',', pos);
        const std::string tok = value.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
        out.push_back(parse_unsigned(key, tok));
        if (comma == std::string::npos) {
            break;
        }
        pos = comma + 1;
    }
    return out;
}

Mode parse_mode(const std::string& value) {
    if (value == "moco") return Mode::moco;
    if (value == "moco+mixco") return Mode::moco_mixco;
    if (value == "simclr") return Mode::simclr;
    if (value == "simclr+mixco") return Mode::simclr_mixco;
    throw ConfigError("mode: expected moco, moco+mixco, simclr or simclr+mixco, got '" + value + "'");
}

}  // namespace

std::string to_string(Mode m) {
    switch (m) {
        case Mode::moco: return "moco";
        case Mode::moco_mixco: return "moco+mixco";
        case Mode::simclr: return "simclr";
        case Mode::simclr_mixco: return "simclr+mixco";
    }
    return "?";
}

std::string to_string(LrSchedule s) { return s == LrSchedule::cosine ? "cosine" : "constant"; }

void RunConfig::validate() const {
    if (layers.size() < 2) {
        throw ConfigError("layers: need at least input and output sizes");
    }
    for (std::size_t s : layers) {
        if (s < 1) {
            throw ConfigError("layers: sizes must be >= 1");
        }
    }
    if (batch_size < 2 || batch_size % 2 != 0) {
        throw ConfigError("batch_size: must be even and >= 2");
    }
    if (uses_queue()) {
        if (queue_size < batch_size || queue_size % batch_size != 0) {
            throw ConfigError("queue_size: must be a positive multiple of batch_size in moco modes");
        }
    } else if (queue_size != 0) {
        throw ConfigError("queue_size: must be 0 in simclr modes");
    }
    if (!(lr >= 0.0)) throw ConfigError("lr: must be >= 0");
    if (!(key_momentum >= 0.0 && key_momentum <= 1.0)) throw ConfigError("key_momentum: must lie in [0, 1]");
    if (!(sgd_momentum >= 0.0 && sgd_momentum < 1.0)) throw ConfigError("sgd_momentum: must lie in [0, 1)");
    if (!(weight_decay >= 0.0)) throw ConfigError("weight_decay: must be >= 0");
    if (!(tau > 0.0)) throw ConfigError("tau: must be > 0");
    if (!(tau_mix > 0.0)) throw ConfigError("tau_mix: must be > 0");
    if (!(beta >= 0.0)) throw ConfigError("beta: must be >= 0");
    augment.validate();
}

std::vector<std::pair<std::string, std::string>> to_key_values(const RunConfig& cfg) {
    std::string layers;
    for (std::size_t i = 0; i < cfg.layers.size(); ++i) {
        layers += (i ? "," : "") + std::to_string(cfg.layers[i]);
    }
    return {
        {"mode", to_string(cfg.mode)},
        {"layers", layers},
        {"batch_size", std::to_string(cfg.batch_size)},
        {"queue_size", std::to_string(cfg.queue_size)},
        {"epochs", std::to_string(cfg.epochs)},
        {"lr", fmt_double(cfg.lr)},
        {"lr_schedule", to_string(cfg.lr_schedule)},
        {"key_momentum", fmt_double(cfg.key_momentum)},
        {"sgd_momentum", fmt_double(cfg.sgd_momentum)},
        {"weight_decay", fmt_double(cfg.weight_decay)},
        {"tau", fmt_double(cfg.tau)},
        {"tau_mix", fmt_double(cfg.tau_mix)},
        {"beta", fmt_double(cfg.beta)},
        {"seed", std::to_string(cfg.seed)},
        {"aug_noise_sigma", fmt_double(cfg.augment.noise_sigma)},
        {"aug_mask_fraction", fmt_double(cfg.augment.mask_fraction)},
        {"aug_scale_lo", fmt_double(cfg.augment.scale_lo)},
        {"aug_scale_hi", fmt_double(cfg.augment.scale_hi)},
        {"skip_warmup_loss", cfg.skip_warmup_loss ? "true" : "false"},
    };
}

bool apply_key_value(RunConfig& cfg, const std::string& key, const std::string& value) {
    if (key == "mode") cfg.mode = parse_mode(value);
    else if (key == "layers") cfg.layers = parse_layers(key, value);
    else if (key == "batch_size") cfg.batch_size = parse_unsigned(key, value);
    else if (key == "queue_size") cfg.queue_size = parse_unsigned(key, value);
    else if (key == "epochs") cfg.epochs = parse_unsigned(key, value);
    else if (key == "lr") cfg.lr = parse_double(key, value);
    else if (key == "lr_schedule") {
        if (value == "cosine") cfg.lr_schedule = LrSchedule::cosine;
        else if (value == "constant") cfg.lr_schedule = LrSchedule::constant;
        else throw ConfigError("lr_schedule: expected cosine or constant, got '" + value + "'");
    }
    else if (key == "key_momentum") cfg.key_momentum = parse_double(key, value);
    else if (key == "sgd_momentum") cfg.sgd_momentum = parse_double(key, value);
    else if (key == "weight_decay") cfg.weight_decay = parse_double(key, value);
    else if (key == "tau") cfg.tau = parse_double(key, value);
    else if (key == "tau_mix") cfg.tau_mix = parse_double(key, value);
    else if (key == "beta") cfg.beta = parse_double(key, value);
    else if (key == "seed") cfg.seed = parse_unsigned(key, value);
    else if (key == "aug_noise_sigma") cfg.augment.noise_sigma = parse_double(key, value);
    else if (key == "aug_mask_fraction") cfg.augment.mask_fraction = parse_double(key, value);
    else if (key == "aug_scale_lo") cfg.augment.scale_lo = parse_double(key, value);
    else if (key == "aug_scale_hi") cfg.augment.scale_hi = parse_double(key, value);
    else if (key == "skip_warmup_loss") cfg.skip_warmup_loss = parse_bool(key, value);
    else return false;
    return true;
}

}  // namespace mixco
