#include "mixco/data.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "binary_io.hpp"
#include "mixco/errors.hpp"

namespace mixco {

void Dataset::validate() const {
    if (features.rank() != 2 || features.rows() != labels.size()) {
        throw ContractError("dataset has " + std::to_string(labels.size()) + " labels for features " +
                            features.shape_string());
    }
    if (class_count < 2 || labels.size() < static_cast<std::size_t>(class_count)) {
        throw ContractError("dataset needs N >= class_count >= 2");
    }
    for (int l : labels) {
        if (l < 0 || l >= class_count) {
            throw ContractError("label " + std::to_string(l) + " outside [0, " + std::to_string(class_count) + ")");
        }
    }
}

bool bitwise_equal(const Dataset& a, const Dataset& b) noexcept {
    return a.class_count == b.class_count && a.labels == b.labels && bitwise_equal(a.features, b.features);
}

Dataset generate_gaussian_clusters(const ClusterSpec& spec, Rng& rng) {
    if (spec.class_count < 2 || spec.per_class < 1 || spec.dim < 1) {
        throw ConfigError("cluster spec needs class_count >= 2, per_class >= 1, dim >= 1");
    }
    if (!(spec.within_sigma > 0.0) || !(spec.center_spread >= 0.0)) {
        throw ConfigError("cluster spec needs within_sigma > 0 and center_spread >= 0");
    }
    const auto k = static_cast<std::size_t>(spec.class_count);
    Tensor centers({k, spec.dim});
    for (double& c : centers.values()) {
        c = rng.uniform(-0.5 * spec.center_spread, 0.5 * spec.center_spread);
    }
    Dataset d;
    d.class_count = spec.class_count;
    d.features = Tensor({k * spec.per_class, spec.dim});
    d.labels.reserve(k * spec.per_class);
    for (std::size_t c = 0; c < k; ++c) {
        for (std::size_t p = 0; p < spec.per_class; ++p) {
            auto row = d.features.row(c * spec.per_class + p);
            for (std::size_t j = 0; j < spec.dim; ++j) {
                row[j] = centers(c, j) + spec.within_sigma * rng.normal();
            }
            d.labels.push_back(static_cast<int>(c));
        }
    }
    return d;
}

Dataset subset(const Dataset& d, std::span<const std::size_t> indices) {
    Dataset out;
    out.class_count = d.class_count;
    out.features = gather_rows(d.features, indices);
    out.labels.reserve(indices.size());
    for (std::size_t i : indices) {
        out.labels.push_back(d.labels[i]);
    }
    return out;
}

std::pair<Dataset, Dataset> split_train_test(const Dataset& d, double test_fraction, Rng& rng) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
        throw ConfigError("test fraction must lie in (0, 1)");
    }
    std::vector<bool> is_test(d.size(), false);
    for (int c = 0; c < d.class_count; ++c) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < d.size(); ++i) {
            if (d.labels[i] == c) {
                members.push_back(i);
            }
        }
        const auto order = rng.permutation(members.size());
        const auto n_test = static_cast<std::size_t>(std::lround(test_fraction * static_cast<double>(members.size())));
        for (std::size_t t = 0; t < n_test; ++t) {
            is_test[members[order[t]]] = true;
        }
    }
    std::vector<std::size_t> train_idx, test_idx;
    for (std::size_t i = 0; i < d.size(); ++i) {
        (is_test[i] ? test_idx : train_idx).push_back(i);
    }
    return {subset(d, train_idx), subset(d, test_idx)};
}

void AugmentConfig::validate() const {
    if (!(noise_sigma >= 0.0)) {
        throw ConfigError("aug_noise_sigma must be >= 0");
    }
    if (!(mask_fraction >= 0.0 && mask_fraction < 1.0)) {
        throw ConfigError("aug_mask_fraction must lie in [0, 1)");
    }
    if (!(scale_lo > 0.0 && scale_lo <= scale_hi)) {
        throw ConfigError("aug_scale range needs 0 < lo <= hi");
    }
}

std::size_t AugmentConfig::masked_count(std::size_t dim) const {
    return static_cast<std::size_t>(std::floor(mask_fraction * static_cast<double>(dim) + 1e-9));
}

Tensor augment(const Tensor& x, const AugmentConfig& cfg, Rng& rng) {
    cfg.validate();
    Tensor out = x;
    const std::size_t d = x.cols();
    const std::size_t n_mask = cfg.masked_count(d);
    std::vector<std::size_t> coords(d);
    for (std::size_t i = 0; i < x.rows(); ++i) {
        auto row = out.row(i);
        if (cfg.scale_lo != 1.0 || cfg.scale_hi != 1.0) {
            const double s = rng.uniform(cfg.scale_lo, cfg.scale_hi);
            for (double& v : row) {
                v *= s;
            }
        }
        if (cfg.noise_sigma > 0.0) {
            for (double& v : row) {
                v += cfg.noise_sigma * rng.normal();
            }
        }
        if (n_mask > 0) {
            // Partial Fisher-Yates: the first n_mask slots end up a uniform subset.
            for (std::size_t j = 0; j < d; ++j) {
                coords[j] = j;
            }
            for (std::size_t j = 0; j < n_mask; ++j) {
                const auto pick = j + static_cast<std::size_t>(rng.below(d - j));
                std::swap(coords[j], coords[pick]);
                row[coords[j]] = 0.0;
            }
        }
    }
    return out;
}

Views two_views(const Tensor& x, const AugmentConfig& cfg, Rng& rng) {
    Tensor q = augment(x, cfg, rng);
    Tensor k = augment(x, cfg, rng);
    return {std::move(q), std::move(k)};
}

std::vector<std::vector<std::size_t>> epoch_batches(std::size_t n, std::size_t batch, Rng& rng) {
    if (batch < 2 || batch % 2 != 0) {
        throw ConfigError("batch size must be even and >= 2");
    }
    if (batch > n) {
        throw ConfigError("batch size " + std::to_string(batch) + " exceeds dataset size " + std::to_string(n));
    }
    const auto perm = rng.permutation(n);
    std::vector<std::vector<std::size_t>> batches;
    for (std::size_t start = 0; start + batch <= n; start += batch) {
        batches.emplace_back(perm.begin() + static_cast<std::ptrdiff_t>(start),
                             perm.begin() + static_cast<std::ptrdiff_t>(start + batch));
    }
    return batches;
}

std::string serialize_dataset(const Dataset& d) {
    d.validate();
    io::ByteWriter w;
    w.line("MIXCO-DATASET 1");
    w.line(std::to_string(d.size()) + " " + std::to_string(d.dim()) + " " + std::to_string(d.class_count));
    w.tensor(d.features);
    for (int l : d.labels) {
        w.i32(l);
    }
    return w.bytes();
}

Dataset deserialize_dataset(std::string_view bytes) {
    io::ByteReader r(bytes);
    if (r.line() != "MIXCO-DATASET 1") {
        throw FormatError("not a dataset file (bad magic/version line)", 0);
    }
    const std::size_t at = r.offset();
    std::vector<std::string> dims;
    {
        std::string text = r.line();
        std::size_t pos = 0;
        while (pos < text.size()) {
            const auto sp = text.find(' ', pos);
            dims.push_back(text.substr(pos, sp == std::string::npos ? std::string::npos : sp - pos));
            if (sp == std::string::npos) {
                break;
            }
            pos = sp + 1;
        }
    }
    if (dims.size() != 3) {
        throw FormatError("dataset header needs 'N D class_count'", at);
    }
    const auto n = io::parse_u64(dims[0], at);
    const auto dim = io::parse_u64(dims[1], at);
    const auto classes = io::parse_u64(dims[2], at);
    if (classes < 2 || classes > (1U << 30) || n < classes || dim == 0 || dim > (1U << 24)) {
        throw FormatError("implausible dataset dimensions", at);
    }
    // Size check before allocating, so a bogus header cannot trigger a huge allocation.
    const std::size_t expected = n * dim * 8 + n * 4;
    if (bytes.size() - r.offset() < expected) {
        throw FormatError("truncated dataset payload: expected " + std::to_string(expected) + " bytes",
                          bytes.size());
    }
    Dataset d;
    d.class_count = static_cast<int>(classes);
    d.features = r.tensor({n, dim});
    d.labels.resize(n);
    for (auto& l : d.labels) {
        const std::size_t label_at = r.offset();
        l = r.i32();
        if (l < 0 || static_cast<std::uint64_t>(l) >= classes) {
            throw FormatError("label out of range", label_at);
        }
    }
    r.expect_end();
    return d;
}

void save_dataset(const Dataset& d, const std::filesystem::path& path) {
    io::write_file(path, serialize_dataset(d));
}

Dataset load_dataset(const std::filesystem::path& path) { return deserialize_dataset(io::read_file(path)); }

}  // namespace mixco
