#include "mixco/encoder.hpp"

#include <cmath>
#include <string>

#include "binary_io.hpp"
#include "encoder_io.hpp"
#include "mixco/errors.hpp"
#include "mixco/numerics.hpp"

namespace mixco {

namespace {

void validate_sizes(std::span<const std::size_t> sizes) {
    if (sizes.size() < 2) {
        throw ConfigError("encoder needs at least 2 layer sizes (input and output)");
    }
    for (std::size_t s : sizes) {
        if (s < 1) {
            throw ConfigError("encoder layer sizes must be >= 1");
        }
    }
}

Tensor affine(const Tensor& x, const Tensor& w, const Tensor& b) {
    Tensor h = matmul_bt(x, w);
    for (std::size_t i = 0; i < h.rows(); ++i) {
        auto r = h.row(i);
        for (std::size_t j = 0; j < r.size(); ++j) {
            r[j] += b[j];
        }
    }
    return h;
}

Tensor relu(const Tensor& h) {
    Tensor out = h;
    for (double& v : out.values()) {
        v = v > 0.0 ? v : 0.0;
    }
    return out;
}

void check_input(const EncoderParams& params, const Tensor& x) {
    if (x.rank() != 2 || x.cols() != params.input_dim()) {
        throw DimensionError("encoder expects inputs with " + std::to_string(params.input_dim()) +
                             " columns, got " + x.shape_string());
    }
}

}  // namespace

std::size_t EncoderParams::parameter_count() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l < weights.size(); ++l) {
        n += weights[l].size() + biases[l].size();
    }
    return n;
}

bool bitwise_equal(const EncoderParams& a, const EncoderParams& b) noexcept {
    if (a.layer_sizes != b.layer_sizes || a.seed != b.seed || a.weights.size() != b.weights.size()) {
        return false;
    }
    for (std::size_t l = 0; l < a.weights.size(); ++l) {
        if (!bitwise_equal(a.weights[l], b.weights[l]) || !bitwise_equal(a.biases[l], b.biases[l])) {
            return false;
        }
    }
    return true;
}

EncoderParams init_encoder(std::span<const std::size_t> layer_sizes, Rng& rng, std::uint64_t seed_tag) {
    validate_sizes(layer_sizes);
    EncoderParams p;
    p.layer_sizes.assign(layer_sizes.begin(), layer_sizes.end());
    p.seed = seed_tag;
    for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
        const std::size_t fan_in = layer_sizes[l];
        const std::size_t fan_out = layer_sizes[l + 1];
        const double stddev = 1.0 / std::sqrt(static_cast<double>(fan_in));
        Tensor w({fan_out, fan_in});
        for (double& v : w.values()) {
            v = rng.normal(0.0, stddev);
        }
        p.weights.push_back(std::move(w));
        p.biases.emplace_back(std::vector<std::size_t>{1, fan_out});
    }
    return p;
}

Encoded encode(const EncoderParams& params, const Tensor& x) {
    check_input(params, x);
    Encoded out;
    Tensor act = x;
    const std::size_t layers = params.layer_count();
    for (std::size_t l = 0; l < layers; ++l) {
        Tensor h = affine(act, params.weights[l], params.biases[l]);
        out.trace.layer_inputs.push_back(std::move(act));
        act = (l + 1 < layers) ? relu(h) : h;
        out.trace.pre_activations.push_back(std::move(h));
    }
    for (std::size_t i = 0; i < act.rows(); ++i) {
        const auto r = act.row(i);
        if (std::sqrt(dot(r, r)) <= kNormEps) {
            out.degenerate = true;
        }
    }
    out.v = l2_normalize_rows(act, kNormEps);
    return out;
}

Tensor embed(const EncoderParams& params, const Tensor& x) {
    check_input(params, x);
    Tensor act = x;
    for (std::size_t l = 0; l < params.layer_count(); ++l) {
        Tensor h = affine(act, params.weights[l], params.biases[l]);
        act = (l + 1 < params.layer_count()) ? relu(h) : std::move(h);
    }
    return l2_normalize_rows(act, kNormEps);
}

EncoderGrads encoder_backward(const EncoderParams& params, const ForwardTrace& trace,
                              const Tensor& grad_v) {
    const std::size_t layers = params.layer_count();
    if (trace.layer_inputs.size() != layers || trace.pre_activations.size() != layers) {
        throw ContractError("forward trace has " + std::to_string(trace.layer_inputs.size()) +
                            " layers, parameters have " + std::to_string(layers));
    }
    if (grad_v.shape() != trace.pre_activations.back().shape()) {
        throw ContractError("output gradient shape " + grad_v.shape_string() +
                            " does not match the traced output " +
                            trace.pre_activations.back().shape_string());
    }
    for (std::size_t l = 0; l < layers; ++l) {
        if (trace.layer_inputs[l].cols() != params.weights[l].cols() ||
            trace.pre_activations[l].cols() != params.weights[l].rows()) {
            throw ContractError("forward trace does not match parameters at layer " + std::to_string(l));
        }
    }

    EncoderGrads g;
    g.weights.resize(layers);
    g.biases.resize(layers);
    Tensor delta = l2_normalize_rows_backward(trace.pre_activations.back(), kNormEps, grad_v);
    for (std::size_t l = layers; l-- > 0;) {
        if (l + 1 < layers) {
            const Tensor& h = trace.pre_activations[l];
            for (std::size_t i = 0; i < delta.size(); ++i) {
                if (!(h[i] > 0.0)) {
                    delta[i] = 0.0;
                }
            }
        }
        g.weights[l] = matmul_at(delta, trace.layer_inputs[l]);
        Tensor db({1, delta.cols()});
        for (std::size_t i = 0; i < delta.rows(); ++i) {
            for (std::size_t j = 0; j < delta.cols(); ++j) {
                db[j] += delta(i, j);
            }
        }
        g.biases[l] = std::move(db);
        delta = matmul(delta, params.weights[l]);
    }
    g.input = std::move(delta);
    return g;
}

EncoderGrads zero_grads_like(const EncoderParams& params) {
    EncoderGrads g;
    for (std::size_t l = 0; l < params.layer_count(); ++l) {
        g.weights.emplace_back(params.weights[l].shape());
        g.biases.emplace_back(params.biases[l].shape());
    }
    return g;
}

void accumulate(EncoderGrads& acc, const EncoderGrads& g, double scale) {
    for (std::size_t l = 0; l < acc.weights.size(); ++l) {
        for (std::size_t i = 0; i < acc.weights[l].size(); ++i) {
            acc.weights[l][i] += scale * g.weights[l][i];
        }
        for (std::size_t i = 0; i < acc.biases[l].size(); ++i) {
            acc.biases[l][i] += scale * g.biases[l][i];
        }
    }
}

SgdVelocity init_velocity(const EncoderParams& params) {
    SgdVelocity v;
    for (std::size_t l = 0; l < params.layer_count(); ++l) {
        v.weights.emplace_back(params.weights[l].shape());
        v.biases.emplace_back(params.biases[l].shape());
    }
    return v;
}

namespace {

void sgd_update(Tensor& param, const Tensor& grad, Tensor& velocity, const SgdConfig& cfg) {
    for (std::size_t i = 0; i < param.size(); ++i) {
        velocity[i] = cfg.momentum * velocity[i] + grad[i] + cfg.weight_decay * param[i];
        param[i] -= cfg.lr * velocity[i];
    }
}

}  // namespace

void apply_sgd_step(EncoderParams& params, const EncoderGrads& grads, const SgdConfig& cfg,
                    SgdVelocity& velocity) {
    if (!(cfg.lr >= 0.0)) {
        throw ConfigError("learning rate must be >= 0");
    }
    if (!(cfg.momentum >= 0.0 && cfg.momentum < 1.0)) {
        throw ConfigError("optimizer momentum must lie in [0, 1)");
    }
    if (grads.weights.size() != params.layer_count() || velocity.weights.size() != params.layer_count()) {
        throw ContractError("gradient/velocity layer count does not match parameters");
    }
    for (std::size_t l = 0; l < params.layer_count(); ++l) {
        if (!grads.weights[l].all_finite() || !grads.biases[l].all_finite()) {
            throw DivergenceError("non-finite gradient in layer " + std::to_string(l));
        }
    }
    for (std::size_t l = 0; l < params.layer_count(); ++l) {
        sgd_update(params.weights[l], grads.weights[l], velocity.weights[l], cfg);
        sgd_update(params.biases[l], grads.biases[l], velocity.biases[l], cfg);
    }
}

std::string serialize_encoder(const EncoderParams& params) {
    io::ByteWriter w;
    w.line("MIXCO-ENCODER 1");
    detail::write_encoder_header(w, params);
    detail::write_encoder_payload(w, params);
    return w.bytes();
}

EncoderParams deserialize_encoder(std::string_view bytes) {
    io::ByteReader r(bytes);
    const std::size_t start = r.offset();
    if (r.line() != "MIXCO-ENCODER 1") {
        throw FormatError("not an encoder checkpoint (bad magic/version line)", start);
    }
    EncoderParams p = detail::read_encoder_header(r);
    detail::read_encoder_payload(r, p);
    r.expect_end();
    return p;
}

void save_encoder(const EncoderParams& params, const std::filesystem::path& path) {
    io::write_file(path, serialize_encoder(params));
}

EncoderParams load_encoder(const std::filesystem::path& path) {
    return deserialize_encoder(io::read_file(path));
}

namespace detail {

void write_encoder_header(io::ByteWriter& w, const EncoderParams& params) {
    w.line("seed " + std::to_string(params.seed));
    std::string layers = "layers " + std::to_string(params.layer_sizes.size());
    for (std::size_t s : params.layer_sizes) {
        layers += " " + std::to_string(s);
    }
    w.line(layers);
}

void write_encoder_payload(io::ByteWriter& w, const EncoderParams& params) {
    for (std::size_t l = 0; l < params.layer_count(); ++l) {
        w.tensor(params.weights[l]);
        w.tensor(params.biases[l]);
    }
}

EncoderParams read_encoder_header(io::ByteReader& r) {
    EncoderParams p;
    std::size_t at = r.offset();
    auto seed = r.keyed_line("seed");
    if (seed.size() != 2) {
        throw FormatError("malformed seed line", at);
    }
    p.seed = io::parse_u64(seed[1], at);

    at = r.offset();
    auto layers = r.keyed_line("layers");
    if (layers.size() < 2) {
        throw FormatError("malformed layers line", at);
    }
    const auto count = io::parse_u64(layers[1], at);
    if (count < 2 || layers.size() != count + 2) {
        throw FormatError("layers line lists the wrong number of sizes", at);
    }
    for (std::size_t i = 0; i < count; ++i) {
        const auto s = io::parse_u64(layers[i + 2], at);
        if (s == 0 || s > (1U << 20)) {
            throw FormatError("implausible layer size " + layers[i + 2], at);
        }
        p.layer_sizes.push_back(s);
    }
    return p;
}

void read_encoder_payload(io::ByteReader& r, EncoderParams& p) {
    p.weights.clear();
    p.biases.clear();
    for (std::size_t l = 0; l + 1 < p.layer_sizes.size(); ++l) {
        p.weights.push_back(r.tensor({p.layer_sizes[l + 1], p.layer_sizes[l]}));
        p.biases.push_back(r.tensor({1, p.layer_sizes[l + 1]}));
    }
}

}  // namespace detail

}  // namespace mixco
