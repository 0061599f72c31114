#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace mixco {

/// Dense row-major array of doubles with an explicit shape.
///
/// Most of the library works on rank-2 tensors (rows = samples), so the
/// 2-D accessors are the common path. A zero-sized dimension is allowed so
/// that an empty negative queue can be represented as a K=0 by C tensor.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> shape, double fill = 0.0);
    Tensor(std::vector<std::size_t> shape, std::vector<double> data);

    static Tensor zeros(std::size_t rows, std::size_t cols) { return Tensor({rows, cols}); }
    static Tensor from_rows(std::initializer_list<std::initializer_list<double>> rows);
    static Tensor identity(std::size_t n);

    [[nodiscard]] const std::vector<std::size_t>& shape() const noexcept { return shape_; }
    [[nodiscard]] std::size_t rank() const noexcept { return shape_.size(); }
    [[nodiscard]] std::size_t size() const noexcept { return data_.size(); }
    [[nodiscard]] bool empty() const noexcept { return data_.empty(); }

    [[nodiscard]] std::size_t rows() const {
        require_matrix();
        return shape_[0];
    }
    [[nodiscard]] std::size_t cols() const {
        require_matrix();
        return shape_[1];
    }

    double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * shape_[1] + c]; }
    double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * shape_[1] + c]; }
    double& operator[](std::size_t i) noexcept { return data_[i]; }
    double operator[](std::size_t i) const noexcept { return data_[i]; }

    [[nodiscard]] std::span<double> row(std::size_t r) {
        const std::size_t c = cols();
        return std::span<double>(data_).subspan(r * c, c);
    }
    [[nodiscard]] std::span<const double> row(std::size_t r) const {
        const std::size_t c = cols();
        return std::span<const double>(data_).subspan(r * c, c);
    }

    [[nodiscard]] std::span<double> values() noexcept { return data_; }
    [[nodiscard]] std::span<const double> values() const noexcept { return data_; }

    [[nodiscard]] bool all_finite() const noexcept;
    [[nodiscard]] std::string shape_string() const;

    /// Value equality (so -0.0 == 0.0). Use bitwise_equal for checkpoint checks.
    friend bool operator==(const Tensor& a, const Tensor& b) = default;

private:
    void require_matrix() const {
        if (shape_.size() != 2) {
            throw_not_matrix();
        }
    }
    [[noreturn]] void throw_not_matrix() const;

    std::vector<std::size_t> shape_;
    std::vector<double> data_;
};

/// True when shapes match and every element has the same bit pattern.
[[nodiscard]] bool bitwise_equal(const Tensor& a, const Tensor& b) noexcept;

/// Rows picked by index, in the given order.
[[nodiscard]] Tensor gather_rows(const Tensor& x, std::span<const std::size_t> indices);

}  // namespace mixco
