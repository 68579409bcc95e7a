#ifndef OWLEYE_NN_TENSOR_HPP
#define OWLEYE_NN_TENSOR_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "owleye/error.hpp"

namespace owleye::nn {

using Shape = std::vector<std::size_t>;

inline std::size_t element_count(const Shape& s) {
    return std::accumulate(s.begin(), s.end(), std::size_t{1}, std::multiplies<>());
}

inline std::string to_string(const Shape& s) {
    std::string out = "[";
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(s[i]);
    }
    return out + "]";
}

/// Dense row-major array. T is float for training and double for gradient
/// checking.
template <typename T>
class Tensor {
public:
    using value_type = T;

    Tensor() = default;
    explicit Tensor(Shape shape, T fill = T{}) : shape_(std::move(shape)), data_(element_count(shape_), fill) {}
    Tensor(Shape shape, std::vector<T> data) : shape_(std::move(shape)), data_(std::move(data)) {
        if (data_.size() != element_count(shape_)) {
            fail(ErrorKind::Shape, "tensor data length " + std::to_string(data_.size()) + " does not match shape " +
                                       to_string(shape_));
        }
    }

    const Shape& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t dim(std::size_t i) const { return shape_.at(i); }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }
    std::span<T> span() { return data_; }
    std::span<const T> span() const { return data_; }
    std::vector<T>& values() { return data_; }
    const std::vector<T>& values() const { return data_; }

    T& operator[](std::size_t i) { return data_[i]; }
    const T& operator[](std::size_t i) const { return data_[i]; }

    /// 4-D accessor for [N, C, H, W] tensors.
    T& at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) {
        return data_[((n * shape_[1] + c) * shape_[2] + h) * shape_[3] + w];
    }
    const T& at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) const {
        return data_[((n * shape_[1] + c) * shape_[2] + h) * shape_[3] + w];
    }

    void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

    Tensor reshaped(Shape s) const {
        if (element_count(s) != data_.size()) {
            fail(ErrorKind::Shape, "cannot reshape " + to_string(shape_) + " to " + to_string(s));
        }
        return Tensor(std::move(s), data_);
    }

    template <typename U>
    Tensor<U> cast() const {
        Tensor<U> out(shape_);
        for (std::size_t i = 0; i < data_.size(); ++i) out[i] = static_cast<U>(data_[i]);
        return out;
    }

    bool all_finite() const {
        for (const T& v : data_) {
            if (!std::isfinite(v)) return false;
        }
        return true;
    }

    /// Throws Numeric when any element is NaN or infinite.
    void require_finite(const std::string& what) const {
        if (!all_finite()) fail(ErrorKind::Numeric, "non-finite values in " + what);
    }

    double squared_norm() const {
        double s = 0;
        for (const T& v : data_) s += static_cast<double>(v) * v;
        return s;
    }

    friend bool operator==(const Tensor&, const Tensor&) = default;

private:
    Shape shape_;
    std::vector<T> data_;
};

inline void require_rank(const Shape& s, std::size_t rank, const char* what) {
    if (s.size() != rank) {
        fail(ErrorKind::Shape, std::string(what) + " expects rank " + std::to_string(rank) + ", got " + to_string(s));
    }
}

}  // namespace owleye::nn

#endif
