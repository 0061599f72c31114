#include "mixco/moco.hpp"

#include <bit>
#include <cmath>
#include <string>

#include "binary_io.hpp"
#include "encoder_io.hpp"
#include "mixco/errors.hpp"
#include "mixco/numerics.hpp"

namespace mixco {

bool bitwise_equal(const MoCoState& a, const MoCoState& b) noexcept {
    return bitwise_equal(a.query, b.query) && bitwise_equal(a.key, b.key) &&
           bitwise_equal(a.queue, b.queue) && a.queue_ptr == b.queue_ptr &&
           std::bit_cast<std::uint64_t>(a.momentum) == std::bit_cast<std::uint64_t>(b.momentum) &&
           a.keys_enqueued == b.keys_enqueued;
}

MoCoState init_moco(std::span<const std::size_t> layer_sizes, std::size_t queue_size, double momentum,
                    Rng& rng, std::uint64_t seed_tag) {
    if (!(momentum >= 0.0 && momentum <= 1.0)) {
        throw ConfigError("key-encoder momentum must lie in [0, 1]");
    }
    MoCoState s;
    s.query = init_encoder(layer_sizes, rng, seed_tag);
    s.key = s.query;
    s.momentum = momentum;
    const std::size_t c = s.query.output_dim();
    Tensor raw({queue_size, c});
    for (double& v : raw.values()) {
        v = rng.normal();
    }
    s.queue = l2_normalize_rows(raw, kNormEps);
    return s;
}

void momentum_update(MoCoState& state) {
    const double t = 1.0 - state.momentum;
    for (std::size_t l = 0; l < state.key.layer_count(); ++l) {
        auto blend = [t](Tensor& key, const Tensor& query) {
            for (std::size_t i = 0; i < key.size(); ++i) {
                key[i] = std::lerp(key[i], query[i], t);
            }
        };
        blend(state.key.weights[l], state.query.weights[l]);
        blend(state.key.biases[l], state.query.biases[l]);
    }
}

void enqueue_dequeue(MoCoState& state, const Tensor& keys) {
    const std::size_t k = state.queue_size();
    const std::size_t b = keys.rows();
    if (keys.cols() != state.queue.cols()) {
        throw DimensionError("keys " + keys.shape_string() + " do not match queue " +
                             state.queue.shape_string());
    }
    if (b > k) {
        throw ConfigError("batch of " + std::to_string(b) + " keys exceeds queue size " + std::to_string(k));
    }
    if (b == 0 || k % b != 0) {
        throw ConfigError("queue size " + std::to_string(k) + " is not a multiple of batch size " +
                          std::to_string(b));
    }
    for (std::size_t i = 0; i < b; ++i) {
        const auto src = keys.row(i);
        std::copy(src.begin(), src.end(), state.queue.row(state.queue_ptr + i).begin());
    }
    state.queue_ptr = (state.queue_ptr + b) % k;
    state.keys_enqueued += b;
}

Tensor key_forward_no_grad(const MoCoState& state, const Tensor& x_k) { return embed(state.key, x_k); }

std::string serialize_moco(const MoCoState& state) {
    io::ByteWriter w;
    w.line("MIXCO-MOCO 1");
    detail::write_encoder_header(w, state.query);
    w.line("queue " + std::to_string(state.queue.rows()) + " " + std::to_string(state.queue.cols()) + " " +
           std::to_string(state.queue_ptr) + " " + std::to_string(state.keys_enqueued));
    w.line("momentum " + io::format_hex_double(state.momentum));
    detail::write_encoder_payload(w, state.query);
    detail::write_encoder_payload(w, state.key);
    w.tensor(state.queue);
    return w.bytes();
}

MoCoState deserialize_moco(std::string_view bytes) {
    io::ByteReader r(bytes);
    if (r.line() != "MIXCO-MOCO 1") {
        throw FormatError("not a MoCo checkpoint (bad magic/version line)", 0);
    }
    MoCoState s;
    s.query = detail::read_encoder_header(r);

    std::size_t at = r.offset();
    const auto q = r.keyed_line("queue");
    if (q.size() != 5) {
        throw FormatError("malformed queue line", at);
    }
    const auto k = io::parse_u64(q[1], at);
    const auto c = io::parse_u64(q[2], at);
    s.queue_ptr = io::parse_u64(q[3], at);
    s.keys_enqueued = io::parse_u64(q[4], at);
    if (c != s.query.output_dim() || (k > 0 && s.queue_ptr >= k) || (k == 0 && s.queue_ptr != 0)) {
        throw FormatError("queue geometry inconsistent with encoder", at);
    }

    at = r.offset();
    const auto m = r.keyed_line("momentum");
    if (m.size() != 2) {
        throw FormatError("malformed momentum line", at);
    }
    s.momentum = io::parse_hex_double(m[1], at);

    s.key.layer_sizes = s.query.layer_sizes;
    s.key.seed = s.query.seed;
    detail::read_encoder_payload(r, s.query);
    detail::read_encoder_payload(r, s.key);
    s.queue = r.tensor({k, c});
    r.expect_end();
    return s;
}

void save_moco(const MoCoState& state, const std::filesystem::path& path) {
    io::write_file(path, serialize_moco(state));
}

MoCoState load_moco(const std::filesystem::path& path) { return deserialize_moco(io::read_file(path)); }

}  // namespace mixco
