#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace demn {

/// Dense row-major array of doubles. Shape products always equal the number of
/// stored elements. The model works entirely with rank-2 tensors; vectors are
/// stored as 1×n rows.
class Tensor {
public:
    Tensor() : shape_{0, 0} {}
    Tensor(std::vector<std::size_t> shape, std::vector<double> data);
    Tensor(std::size_t rows, std::size_t cols, double fill = 0.0);

    static Tensor zeros(std::size_t rows, std::size_t cols) { return Tensor(rows, cols); }
    static Tensor zeros_like(const Tensor& t);
    static Tensor scalar(double v) { return Tensor({1, 1}, {v}); }
    static Tensor from_rows(std::initializer_list<std::initializer_list<double>> rows);

    const std::vector<std::size_t>& shape() const noexcept { return shape_; }
    std::size_t rank() const noexcept { return shape_.size(); }
    std::size_t size() const noexcept { return data_.size(); }
    std::size_t rows() const;
    std::size_t cols() const;
    bool same_shape(const Tensor& other) const noexcept { return shape_ == other.shape_; }

    double* data() noexcept { return data_.data(); }
    const double* data() const noexcept { return data_.data(); }
    std::span<double> values() noexcept { return data_; }
    std::span<const double> values() const noexcept { return data_; }
    std::span<double> row(std::size_t r);
    std::span<const double> row(std::size_t r) const;

    double& operator[](std::size_t i) noexcept { return data_[i]; }
    double operator[](std::size_t i) const noexcept { return data_[i]; }
    double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * shape_.back() + c]; }
    double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * shape_.back() + c]; }

    void fill(double v);
    bool all_finite() const noexcept;
    std::string shape_string() const;

    friend bool operator==(const Tensor& a, const Tensor& b) = default;

private:
    std::vector<std::size_t> shape_;
    std::vector<double> data_;
};

}  // namespace demn
