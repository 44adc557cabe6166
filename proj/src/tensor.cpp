#include "partforge/tensor.hpp"

#include <cmath>
#include <sstream>

namespace partforge {

namespace {

std::int64_t checked_numel(const std::vector<std::int64_t>& shape) {
    if (shape.empty()) fail(ErrorKind::shape, "tensor shape must have at least one extent");
    std::int64_t n = 1;
    for (std::int64_t e : shape) {
        if (e <= 0) fail(ErrorKind::shape, "tensor extents must be positive");
        n *= e;
    }
    return n;
}

} // namespace

Tensor::Tensor(std::vector<std::int64_t> shape, double fill)
    : shape_(std::move(shape)), data_(static_cast<std::size_t>(checked_numel(shape_)), fill) {}

Tensor::Tensor(std::vector<std::int64_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    if (checked_numel(shape_) != static_cast<std::int64_t>(data_.size()))
        fail(ErrorKind::shape, "tensor data length does not match shape " + shape_str());
}

Tensor Tensor::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    std::int64_t r = static_cast<std::int64_t>(rows.size());
    if (r == 0) fail(ErrorKind::shape, "from_rows needs at least one row");
    std::int64_t c = static_cast<std::int64_t>(rows.begin()->size());
    std::vector<double> data;
    data.reserve(static_cast<std::size_t>(r * c));
    for (const auto& row : rows) {
        if (static_cast<std::int64_t>(row.size()) != c)
            fail(ErrorKind::shape, "from_rows rows must have equal length");
        data.insert(data.end(), row.begin(), row.end());
    }
    return Tensor({r, c}, std::move(data));
}

Tensor Tensor::from_vec(std::vector<double> values) {
    std::int64_t n = static_cast<std::int64_t>(values.size());
    return Tensor({n}, std::move(values));
}

bool Tensor::all_finite() const {
    for (double v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

std::string Tensor::shape_str() const {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < shape_.size(); ++i) {
        if (i) os << "x";
        os << shape_[i];
    }
    os << "]";
    return os.str();
}

bool bit_equal(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) return false;
    return a.values() == b.values();
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) fail(ErrorKind::shape, "max_abs_diff shape mismatch");
    double m = 0.0;
    for (std::int64_t i = 0; i < a.numel(); ++i)
        m = std::max(m, std::abs(a.at(i) - b.at(i)));
    return m;
}

} // namespace partforge
