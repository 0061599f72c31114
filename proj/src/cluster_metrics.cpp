#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>

#include "mixco/errors.hpp"
#include "mixco/training.hpp"

namespace mixco {

namespace {

struct Clusters {
    std::vector<std::vector<std::size_t>> members;  // by ascending label
    Tensor centroids;
};

Clusters group(const Tensor& x, std::span<const int> labels) {
    if (x.rank() != 2 || x.rows() != labels.size()) {
        throw DimensionError("cluster index: " + std::to_string(labels.size()) + " labels for embeddings " +
                             x.shape_string());
    }
    std::map<int, std::vector<std::size_t>> by_label;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        by_label[labels[i]].push_back(i);
    }
    Clusters c;
    for (auto& [label, idx] : by_label) {
        c.members.push_back(std::move(idx));
    }
    c.centroids = Tensor({c.members.size(), x.cols()});
    for (std::size_t k = 0; k < c.members.size(); ++k) {
        auto dst = c.centroids.row(k);
        for (std::size_t i : c.members[k]) {
            const auto r = x.row(i);
            for (std::size_t d = 0; d < dst.size(); ++d) {
                dst[d] += r[d];
            }
        }
        for (double& v : dst) {
            v /= static_cast<double>(c.members[k].size());
        }
    }
    return c;
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t d = 0; d < a.size(); ++d) {
        const double diff = a[d] - b[d];
        s += diff * diff;
    }
    return s;
}

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

ClusterIndex davies_bouldin(const Tensor& embeddings, std::span<const int> labels) {
    const Clusters c = group(embeddings, labels);
    const std::size_t k = c.members.size();
    if (k < 2) {
        throw ConfigError("Davies-Bouldin index needs at least 2 clusters");
    }
    std::vector<double> scatter(k, 0.0);
    for (std::size_t a = 0; a < k; ++a) {
        for (std::size_t i : c.members[a]) {
            scatter[a] += std::sqrt(squared_distance(embeddings.row(i), c.centroids.row(a)));
        }
        scatter[a] /= static_cast<double>(c.members[a].size());
    }
    double total = 0.0;
    for (std::size_t a = 0; a < k; ++a) {
        double worst = 0.0;
        for (std::size_t b = 0; b < k; ++b) {
            if (a == b) {
                continue;
            }
            const double sep = std::sqrt(squared_distance(c.centroids.row(a), c.centroids.row(b)));
            if (sep == 0.0) {
                return {kInf, true};
            }
            worst = std::max(worst, (scatter[a] + scatter[b]) / sep);
        }
        total += worst;
    }
    return {total / static_cast<double>(k), false};
}

ClusterIndex calinski_harabasz(const Tensor& embeddings, std::span<const int> labels) {
    const Clusters c = group(embeddings, labels);
    const std::size_t k = c.members.size();
    const std::size_t n = embeddings.rows();
    if (k < 2 || k >= n) {
        throw ConfigError("Calinski-Harabasz index needs 2 <= clusters < samples");
    }
    std::vector<double> mean(embeddings.cols(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto r = embeddings.row(i);
        for (std::size_t d = 0; d < mean.size(); ++d) {
            mean[d] += r[d];
        }
    }
    for (double& m : mean) {
        m /= static_cast<double>(n);
    }
    double between = 0.0;
    double within = 0.0;
    for (std::size_t a = 0; a < k; ++a) {
        between += static_cast<double>(c.members[a].size()) * squared_distance(c.centroids.row(a), mean);
        for (std::size_t i : c.members[a]) {
            within += squared_distance(embeddings.row(i), c.centroids.row(a));
        }
    }
    if (within == 0.0) {
        return {kInf, true};
    }
    return {(between / static_cast<double>(k - 1)) / (within / static_cast<double>(n - k)), false};
}

}  // namespace mixco
