#include "mixco/tensor.hpp"

#include <cmath>
#include <cstring>
#include <functional>
#include <numeric>

#include "mixco/errors.hpp"

namespace mixco {

namespace {

std::size_t element_count(const std::vector<std::size_t>& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>{});
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape, double fill)
    : shape_(std::move(shape)), data_(element_count(shape_), fill) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    if (element_count(shape_) != data_.size()) {
        throw DimensionError("tensor shape " + shape_string() + " does not hold " +
                             std::to_string(data_.size()) + " values");
    }
}

Tensor Tensor::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    const std::size_t n = rows.size();
    const std::size_t c = n == 0 ? 0 : rows.begin()->size();
    std::vector<double> data;
    data.reserve(n * c);
    for (const auto& r : rows) {
        if (r.size() != c) {
            throw DimensionError("ragged row list passed to Tensor::from_rows");
        }
        data.insert(data.end(), r.begin(), r.end());
    }
    return Tensor({n, c}, std::move(data));
}

Tensor Tensor::identity(std::size_t n) {
    Tensor t({n, n});
    for (std::size_t i = 0; i < n; ++i) {
        t(i, i) = 1.0;
    }
    return t;
}

void Tensor::throw_not_matrix() const {
    throw DimensionError("expected a matrix, got shape " + shape_string());
}

bool Tensor::all_finite() const noexcept {
    for (double v : data_) {
        if (!std::isfinite(v)) {
            return false;
        }
    }
    return true;
}

std::string Tensor::shape_string() const {
    std::string s = "[";
    for (std::size_t i = 0; i < shape_.size(); ++i) {
        if (i > 0) {
            s += "x";
        }
        s += std::to_string(shape_[i]);
    }
    return s + "]";
}

bool bitwise_equal(const Tensor& a, const Tensor& b) noexcept {
    if (a.shape() != b.shape()) {
        return false;
    }
    return a.size() == 0 ||
           std::memcmp(a.values().data(), b.values().data(), a.size() * sizeof(double)) == 0;
}

Tensor gather_rows(const Tensor& x, std::span<const std::size_t> indices) {
    const std::size_t c = x.cols();
    Tensor out({indices.size(), c});
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] >= x.rows()) {
            throw DimensionError("row index " + std::to_string(indices[i]) + " out of range for " +
                                 x.shape_string());
        }
        const auto src = x.row(indices[i]);
        std::copy(src.begin(), src.end(), out.row(i).begin());
    }
    return out;
}

}  // namespace mixco
