#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mixco/data.hpp"
#include "mixco/encoder.hpp"
#include "mixco/moco.hpp"
#include "mixco/tensor.hpp"

namespace mixco {

enum class Mode { moco, moco_mixco, simclr, simclr_mixco };
enum class LrSchedule { cosine, constant };

[[nodiscard]] std::string to_string(Mode m);
[[nodiscard]] std::string to_string(LrSchedule s);

struct RunConfig {
    std::vector<std::size_t> layers{20, 64, 64};
    std::size_t batch_size = 64;
    std::size_t queue_size = 1024;
    std::size_t epochs = 50;
    double lr = 0.05;
    LrSchedule lr_schedule = LrSchedule::cosine;
    double key_momentum = 0.999;
    double sgd_momentum = 0.9;
    double weight_decay = 1e-4;
    double tau = 0.2;
    double tau_mix = 0.05;
    double beta = 1.0;
    std::uint64_t seed = 0;
    Mode mode = Mode::moco_mixco;
    AugmentConfig augment{0.3, 0.2, 0.8, 1.2};
    // While the queue still holds initial random rows, skip the update (keys are still enqueued).
    bool skip_warmup_loss = false;

    [[nodiscard]] bool mixco_active() const { return mode == Mode::moco_mixco || mode == Mode::simclr_mixco; }
    [[nodiscard]] bool uses_queue() const { return mode == Mode::moco || mode == Mode::moco_mixco; }
    [[nodiscard]] std::size_t input_dim() const { return layers.front(); }
    [[nodiscard]] std::size_t embed_dim() const { return layers.back(); }

    /// Throws ConfigError naming the offending field.
    void validate() const;
};

/// Ordered key=value rendering; every double printed with 17 significant digits.
[[nodiscard]] std::vector<std::pair<std::string, std::string>> to_key_values(const RunConfig& cfg);

/// Sets one field from text. Returns false for keys RunConfig does not own;
/// throws ConfigError("<key>: ...") when the value does not parse.
bool apply_key_value(RunConfig& cfg, const std::string& key, const std::string& value);

/// Mean losses of one epoch. wall_seconds is kept out of the metrics log
/// (see write_metrics_log) so that logs of identical runs are identical.
struct MetricsRecord {
    std::size_t epoch = 0;  // 1-based
    double l_contrast = 0.0;
    double l_mixco = 0.0;
    double l_total = 0.0;
    double lr = 0.0;
    double wall_seconds = 0.0;
};

[[nodiscard]] std::string format_metrics_line(const MetricsRecord& r);
[[nodiscard]] MetricsRecord parse_metrics_line(const std::string& line);
void write_metrics_log(const std::filesystem::path& path, std::span<const MetricsRecord> records);
/// epoch and wall_seconds per line, alongside the metrics log.
void write_timing_log(const std::filesystem::path& path, std::span<const MetricsRecord> records);

struct StepLosses {
    double contrast = 0.0;
    double mixco = 0.0;
    double total = 0.0;
};

/// Result of one MoCo forward/backward. Only the query encoder receives a
/// gradient; the key embeddings are returned for enqueueing.
struct MocoStep {
    StepLosses losses;
    EncoderGrads query_grads;
    Tensor keys;
};

/// lambdas empty means the MixCo term is off.
[[nodiscard]] MocoStep moco_step(const MoCoState& state, const Tensor& x_q, const Tensor& x_k,
                                 std::span<const double> lambdas, const RunConfig& cfg);

/// In-batch variant: both views go through the same encoder and both carry gradient.
struct SimclrStep {
    StepLosses losses;
    EncoderGrads grads;
};

[[nodiscard]] SimclrStep simclr_step(const EncoderParams& params, const Tensor& x_q, const Tensor& x_k,
                                     std::span<const double> lambdas, const RunConfig& cfg);

[[nodiscard]] double learning_rate_at(const RunConfig& cfg, std::size_t epoch_index);

struct PretrainResult {
    EncoderParams encoder;           // the trained query encoder
    std::optional<MoCoState> moco;   // present in queue modes
    std::vector<MetricsRecord> metrics;
};

using EpochCallback = std::function<void(const MetricsRecord&)>;

/// Runs the full self-supervised loop. Random streams are split by purpose
/// (init, batches, augment, mix), so drawing mix coefficients never shifts
/// the batch order or the augmentations. Throws DivergenceError naming the
/// epoch and batch on a non-finite loss.
[[nodiscard]] PretrainResult pretrain(const RunConfig& cfg, const UnlabeledView& data,
                                      const EpochCallback& on_epoch = {});

/// A freshly initialized encoder exactly as pretrain() would start from.
[[nodiscard]] EncoderParams initial_encoder(const RunConfig& cfg);

struct LinearProbe {
    Tensor weight;  // classes x C
    Tensor bias;    // 1 x classes
};

struct ProbeConfig {
    std::size_t epochs = 100;
    double lr0 = 3.0 * 64.0 / 256.0;
    std::size_t batch_size = 64;
    double momentum = 0.9;
    double weight_decay = 0.0;
    std::uint64_t seed = 0;
};

struct ProbeResult {
    double accuracy = 0.0;
    LinearProbe probe;
};

/// Multinomial logistic regression on frozen embeddings: zero-initialized
/// probe, minibatch SGD with momentum, cosine decay from lr0 per epoch.
/// Throws ConfigError if a class is missing from the training split.
[[nodiscard]] ProbeResult linear_eval(const EncoderParams& encoder, const Dataset& train, const Dataset& test,
                                      const ProbeConfig& cfg);
[[nodiscard]] ProbeResult train_linear_probe(const Tensor& train_x, std::span<const int> train_y,
                                             const Tensor& test_x, std::span<const int> test_y, int class_count,
                                             const ProbeConfig& cfg);
[[nodiscard]] double probe_accuracy(const LinearProbe& probe, const Tensor& x, std::span<const int> labels);

/// +infinity with degenerate=true when the index is undefined.
struct ClusterIndex {
    double value = 0.0;
    bool degenerate = false;
};

/// Mean over clusters of max_j (s_i + s_j) / |c_i - c_j|, s = mean distance to centroid.
[[nodiscard]] ClusterIndex davies_bouldin(const Tensor& embeddings, std::span<const int> labels);
/// [B / (k - 1)] / [W / (N - k)] with B, W the between/within sums of squares.
[[nodiscard]] ClusterIndex calinski_harabasz(const Tensor& embeddings, std::span<const int> labels);

// Embedding export: first line
//   # mixco-embeddings v1 N=<N> C=<C> columns=label,v0..v<C-1>
// then one line per sample: label followed by C values ("%.17g", space separated).
void export_embeddings(const EncoderParams& encoder, const Dataset& dataset, const std::filesystem::path& path);
void write_embeddings(const Tensor& embeddings, std::span<const int> labels, const std::filesystem::path& path);

struct EmbeddingTable {
    Tensor embeddings;
    std::vector<int> labels;
};
[[nodiscard]] EmbeddingTable load_embeddings(const std::filesystem::path& path);

}  // namespace mixco
