#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "mixco/rng.hpp"
#include "mixco/tensor.hpp"

namespace mixco {

/// Row-norm floor used by the encoder's output normalization.
inline constexpr double kNormEps = 1e-12;

/// MLP weights. Layer l maps layer_sizes[l] -> layer_sizes[l+1]; weight l is
/// stored out x in, bias l is a 1 x out row. ReLU sits between affine layers,
/// the last affine layer feeds the row-wise L2 normalization.
struct EncoderParams {
    std::vector<std::size_t> layer_sizes;
    std::vector<Tensor> weights;
    std::vector<Tensor> biases;
    std::uint64_t seed = 0;

    [[nodiscard]] std::size_t layer_count() const noexcept { return weights.size(); }
    [[nodiscard]] std::size_t input_dim() const { return layer_sizes.front(); }
    [[nodiscard]] std::size_t output_dim() const { return layer_sizes.back(); }
    [[nodiscard]] std::size_t parameter_count() const;
};

[[nodiscard]] bool bitwise_equal(const EncoderParams& a, const EncoderParams& b) noexcept;

/// Per-layer values kept by encode() for the backward pass.
struct ForwardTrace {
    std::vector<Tensor> layer_inputs;      // input to affine layer l
    std::vector<Tensor> pre_activations;   // affine output of layer l
};

struct Encoded {
    Tensor v;             // unit-norm rows
    ForwardTrace trace;
    bool degenerate = false;  // some row hit the normalization guard
};

struct EncoderGrads {
    std::vector<Tensor> weights;
    std::vector<Tensor> biases;
    Tensor input;
};

/// Weights ~ N(0, 1/fan_in), biases zero. Records the rng seed tag passed in.
[[nodiscard]] EncoderParams init_encoder(std::span<const std::size_t> layer_sizes, Rng& rng,
                                         std::uint64_t seed_tag = 0);

[[nodiscard]] Encoded encode(const EncoderParams& params, const Tensor& x);

/// Forward pass without keeping a trace.
[[nodiscard]] Tensor embed(const EncoderParams& params, const Tensor& x);

[[nodiscard]] EncoderGrads encoder_backward(const EncoderParams& params, const ForwardTrace& trace,
                                            const Tensor& grad_v);

[[nodiscard]] EncoderGrads zero_grads_like(const EncoderParams& params);
/// acc += scale * g, block by block.
void accumulate(EncoderGrads& acc, const EncoderGrads& g, double scale = 1.0);

struct SgdConfig {
    double lr = 0.05;
    double momentum = 0.9;
    double weight_decay = 1e-4;
};

/// Momentum buffers, one per parameter tensor.
struct SgdVelocity {
    std::vector<Tensor> weights;
    std::vector<Tensor> biases;
};

[[nodiscard]] SgdVelocity init_velocity(const EncoderParams& params);

/// velocity = momentum * velocity + grad + weight_decay * param;
/// param -= lr * velocity. Throws DivergenceError on non-finite gradients.
void apply_sgd_step(EncoderParams& params, const EncoderGrads& grads, const SgdConfig& cfg,
                    SgdVelocity& velocity);

// Checkpoint layout (all integers ASCII, payload little-endian IEEE-754):
//
//   MIXCO-ENCODER 1\n
//   seed <u64>\n
//   layers <count> <size_0> ... <size_{count-1}>\n
//   <for each layer: weight (out*in f64, row-major), bias (out f64)>
[[nodiscard]] std::string serialize_encoder(const EncoderParams& params);
[[nodiscard]] EncoderParams deserialize_encoder(std::string_view bytes);
void save_encoder(const EncoderParams& params, const std::filesystem::path& path);
[[nodiscard]] EncoderParams load_encoder(const std::filesystem::path& path);

}  // namespace mixco
