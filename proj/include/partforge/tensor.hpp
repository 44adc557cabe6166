#pragma once

#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

#include "partforge/error.hpp"

namespace partforge {

// Dense row-major tensor of 64-bit floats. Rank 1 or 2 covers everything the
// denoiser needs; a scalar is shape {1}.
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(std::vector<std::int64_t> shape, double fill = 0.0);
    Tensor(std::vector<std::int64_t> shape, std::vector<double> data);

    static Tensor zeros(std::vector<std::int64_t> shape) { return Tensor(std::move(shape)); }
    static Tensor full(std::vector<std::int64_t> shape, double value) { return Tensor(std::move(shape), value); }
    static Tensor scalar(double value) { return Tensor({1}, {value}); }
    // 2-D literal, e.g. Tensor::from_rows({{1,2},{3,4}}).
    static Tensor from_rows(std::initializer_list<std::initializer_list<double>> rows);
    static Tensor from_vec(std::vector<double> values);

    const std::vector<std::int64_t>& shape() const { return shape_; }
    std::int64_t ndim() const { return static_cast<std::int64_t>(shape_.size()); }
    std::int64_t numel() const { return static_cast<std::int64_t>(data_.size()); }

    // Rank-2 view: rank-1 tensors count as a single row.
    std::int64_t rows() const { return shape_.size() == 2 ? shape_[0] : 1; }
    std::int64_t cols() const { return shape_.empty() ? 0 : shape_.back(); }

    bool is_scalar() const { return numel() == 1; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::vector<double>& values() { return data_; }
    const std::vector<double>& values() const { return data_; }

    double& at(std::int64_t i) { return data_[static_cast<std::size_t>(i)]; }
    double at(std::int64_t i) const { return data_[static_cast<std::size_t>(i)]; }
    double& at(std::int64_t r, std::int64_t c) { return data_[static_cast<std::size_t>(r * cols() + c)]; }
    double at(std::int64_t r, std::int64_t c) const { return data_[static_cast<std::size_t>(r * cols() + c)]; }

    bool requires_grad = false;

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
    bool all_finite() const;

    std::string shape_str() const;

private:
    std::vector<std::int64_t> shape_;
    std::vector<double> data_;
};

// Exact element equality; shapes must match.
bool bit_equal(const Tensor& a, const Tensor& b);

// max_i |a_i - b_i|; shapes must match.
double max_abs_diff(const Tensor& a, const Tensor& b);

} // namespace partforge
