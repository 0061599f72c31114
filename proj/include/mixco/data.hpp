#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "mixco/rng.hpp"
#include "mixco/tensor.hpp"

namespace mixco {

struct Dataset {
    Tensor features;          // N x D
    std::vector<int> labels;  // length N, values in [0, class_count)
    int class_count = 0;

    [[nodiscard]] std::size_t size() const { return labels.size(); }
    [[nodiscard]] std::size_t dim() const { return features.cols(); }
    /// Throws ContractError if any invariant is broken.
    void validate() const;
};

[[nodiscard]] bool bitwise_equal(const Dataset& a, const Dataset& b) noexcept;

/// Features-only view handed to pretraining; labels are not reachable through it.
class UnlabeledView {
public:
    explicit UnlabeledView(const Dataset& d) : features_(&d.features) {}
    explicit UnlabeledView(const Tensor& features) : features_(&features) {}

    [[nodiscard]] const Tensor& features() const noexcept { return *features_; }
    [[nodiscard]] std::size_t size() const { return features_->rows(); }
    [[nodiscard]] std::size_t dim() const { return features_->cols(); }

private:
    const Tensor* features_;
};

struct ClusterSpec {
    int class_count = 10;
    std::size_t per_class = 500;
    std::size_t dim = 20;
    double center_spread = 2.0;  // side of the hypercube [-s/2, s/2]^D holding the centers
    double within_sigma = 1.0;
};

/// Class c contributes per_class consecutive rows drawn N(center_c, sigma^2 I).
[[nodiscard]] Dataset generate_gaussian_clusters(const ClusterSpec& spec, Rng& rng);

/// Stratified split: from each class, round(test_fraction * count) rows go
/// to the test split (chosen by a seeded shuffle). Row order within each
/// split follows the original order.
[[nodiscard]] std::pair<Dataset, Dataset> split_train_test(const Dataset& d, double test_fraction, Rng& rng);

[[nodiscard]] Dataset subset(const Dataset& d, std::span<const std::size_t> indices);

struct AugmentConfig {
    double noise_sigma = 0.0;
    double mask_fraction = 0.0;  // in [0, 1)
    double scale_lo = 1.0;
    double scale_hi = 1.0;

    void validate() const;
    /// floor(mask_fraction * dim) coordinates zeroed per row.
    [[nodiscard]] std::size_t masked_count(std::size_t dim) const;
};

struct Views {
    Tensor query;
    Tensor key;
};

/// Two independent corruptions of each row: multiplicative scale ~ U[lo, hi],
/// additive N(0, sigma^2) noise, then masked_count(D) coordinates set to zero.
[[nodiscard]] Views two_views(const Tensor& x, const AugmentConfig& cfg, Rng& rng);
[[nodiscard]] Tensor augment(const Tensor& x, const AugmentConfig& cfg, Rng& rng);

/// One epoch of shuffled full batches; the last N mod B indices of the
/// permutation are dropped.
[[nodiscard]] std::vector<std::vector<std::size_t>> epoch_batches(std::size_t n, std::size_t batch, Rng& rng);

// Dataset file layout:
//
//   MIXCO-DATASET 1\n
//   <N> <D> <class_count>\n
//   <N*D f64 features, row-major> <N i32 labels>
//
// Numbers in the header are ASCII decimal; the payload is little-endian.
[[nodiscard]] std::string serialize_dataset(const Dataset& d);
[[nodiscard]] Dataset deserialize_dataset(std::string_view bytes);
void save_dataset(const Dataset& d, const std::filesystem::path& path);
[[nodiscard]] Dataset load_dataset(const std::filesystem::path& path);

}  // namespace mixco
