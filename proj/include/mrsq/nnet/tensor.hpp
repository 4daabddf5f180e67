#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "mrsq/error.hpp"

namespace mrsq::nnet {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_size(const Shape& s)
{
    return std::accumulate(s.begin(), s.end(), std::size_t{1}, std::multiplies<>());
}

inline std::string shape_string(const Shape& s)
{
    std::string out = "[";
    for (std::size_t i = 0; i < s.size(); ++i) out += (i ? ", " : "") + std::to_string(s[i]);
    return out + "]";
}

/// Storage aligned to Eigen's widest packet, so a reduction's summation order
/// depends only on shapes.
template <class T>
using AlignedBuffer = std::vector<T, Eigen::aligned_allocator<T>>;

/// Dense row-major tensor.
template <class T>
struct Tensor {
    Shape shape;
    AlignedBuffer<T> data;

    Tensor() = default;
    explicit Tensor(Shape s, T fill = T{0}) : shape(std::move(s)), data(shape_size(shape), fill) {}
    Tensor(Shape s, const std::vector<T>& values) : shape(std::move(s)), data(values.begin(), values.end())
    {
        if (data.size() != shape_size(shape)) {
            throw InvalidArgument("Tensor: " + std::to_string(data.size()) + " values do not fill shape " + shape_string(shape));
        }
    }

    std::size_t size() const noexcept { return data.size(); }
    std::size_t dim(std::size_t i) const { return shape.at(i); }
    std::size_t rank() const noexcept { return shape.size(); }
    T* ptr() noexcept { return data.data(); }
    const T* ptr() const noexcept { return data.data(); }
    T& operator[](std::size_t i) { return data[i]; }
    const T& operator[](std::size_t i) const { return data[i]; }

    std::vector<T> values() const { return {data.begin(), data.end()}; }

    void fill(T v) { std::fill(data.begin(), data.end(), v); }

    bool all_finite() const
    {
        return std::all_of(data.begin(), data.end(), [](T v) { return std::isfinite(v); });
    }

    template <class U>
    Tensor<U> cast() const
    {
        return Tensor<U>(shape, std::vector<U>(data.begin(), data.end()));
    }

    friend bool operator==(const Tensor&, const Tensor&) = default;
};

} // namespace mrsq::nnet
