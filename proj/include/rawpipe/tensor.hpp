#pragma once

#include <cstddef>
#include <numeric>
#include <vector>

#include "rawpipe/errors.hpp"

namespace rawpipe {

enum class Dtype { Real32, Real64 };

/// Dense row-major tensor. Real32/Real64 variants are aliased below; the
/// file format (FTEN) serializes either.
template <class T>
struct Tensor {
    std::vector<std::size_t> dims;
    std::vector<T> data;

    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> d) : dims(std::move(d)) {
        data.assign(numel(), T(0));
    }
    Tensor(std::vector<std::size_t> d, std::vector<T> v) : dims(std::move(d)), data(std::move(v)) {
        if (data.size() != numel()) throw DimensionError("tensor data length != product of dims");
    }

    std::size_t numel() const {
        std::size_t n = 1;
        for (std::size_t e : dims) n *= e;
        return n;
    }

    // 3-D accessor (C x H x W)
    T& at3(std::size_t c, std::size_t y, std::size_t x) {
        return data[(c * dims[1] + y) * dims[2] + x];
    }
    const T& at3(std::size_t c, std::size_t y, std::size_t x) const {
        return data[(c * dims[1] + y) * dims[2] + x];
    }
};

using TensorF32 = Tensor<float>;
using TensorF64 = Tensor<double>;

template <class T, class U>
Tensor<T> tensor_cast(const Tensor<U>& src) {
    Tensor<T> out(src.dims);
    for (std::size_t i = 0; i < src.data.size(); ++i) out.data[i] = static_cast<T>(src.data[i]);
    return out;
}

} // namespace rawpipe
