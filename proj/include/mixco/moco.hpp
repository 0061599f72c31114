#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>

#include "mixco/encoder.hpp"
#include "mixco/rng.hpp"
#include "mixco/tensor.hpp"

namespace mixco {

/// Query encoder, EMA key encoder and the FIFO queue of past keys.
///
/// The queue is stored K x C (one key per row). Batches are written at
/// queue_ptr, so with K a multiple of B a write never wraps mid-batch and
/// the oldest B keys are always the ones overwritten.
struct MoCoState {
    EncoderParams query;
    EncoderParams key;
    Tensor queue;
    std::size_t queue_ptr = 0;
    double momentum = 0.999;
    std::size_t keys_enqueued = 0;  // real keys written so far

    [[nodiscard]] std::size_t queue_size() const { return queue.rows(); }
    /// All initial random rows have been replaced by real keys.
    [[nodiscard]] bool queue_warm() const { return keys_enqueued >= queue_size(); }
};

[[nodiscard]] bool bitwise_equal(const MoCoState& a, const MoCoState& b) noexcept;

/// Key encoder copies the query encoder bit for bit; queue rows are random
/// unit vectors; queue_ptr = 0.
[[nodiscard]] MoCoState init_moco(std::span<const std::size_t> layer_sizes, std::size_t queue_size,
                                  double momentum, Rng& rng, std::uint64_t seed_tag = 0);

/// key = m * key + (1 - m) * query, elementwise. Evaluated with std::lerp so
/// each result stays between the old key value and the query value.
void momentum_update(MoCoState& state);

/// Writes keys at rows [queue_ptr, queue_ptr + B) and advances the pointer mod K.
void enqueue_dequeue(MoCoState& state, const Tensor& keys);

/// Key-encoder forward pass. Returns plain values: no trace is kept, so no
/// gradient can be routed back into the key parameters.
[[nodiscard]] Tensor key_forward_no_grad(const MoCoState& state, const Tensor& x_k);

// Checkpoint layout:
//
//   MIXCO-MOCO 1\n
//   seed <u64>\n
//   layers <count> <size_0> ...\n
//   queue <K> <C> <queue_ptr> <keys_enqueued>\n
//   momentum <hex float>\n
//   <query encoder payload> <key encoder payload> <queue K*C f64>
//
// Encoder payloads use the encoder checkpoint layout; all f64 little-endian.
[[nodiscard]] std::string serialize_moco(const MoCoState& state);
[[nodiscard]] MoCoState deserialize_moco(std::string_view bytes);
void save_moco(const MoCoState& state, const std::filesystem::path& path);
[[nodiscard]] MoCoState load_moco(const std::filesystem::path& path);

}  // namespace mixco
