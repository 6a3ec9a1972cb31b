#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <new>
#include <vector>

#include "error.hpp"

namespace gatc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Pins buffers to one cache line. Eigen's vectorized reductions split the
/// head and tail of a mapped buffer by its alignment residue, so an ordinary
/// vector makes summation order, and with it the last ulp of the result,
/// depend on where the heap happened to place the data. A fixed residue
/// keeps every computation bit-for-bit repeatable.
template <typename T>
struct AlignedAllocator {
    using value_type = T;
    static constexpr std::align_val_t kAlignment{64};

    AlignedAllocator() = default;
    template <typename U>
    AlignedAllocator(const AlignedAllocator<U>&) {}

    T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), kAlignment)); }
    void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, kAlignment); }

    template <typename U>
    bool operator==(const AlignedAllocator<U>&) const {
        return true;
    }
};

using AlignedVector = std::vector<double, AlignedAllocator<double>>;

/// Dense NCHW batch of feature maps / images.
struct Tensor {
    int n = 0, c = 0, h = 0, w = 0;
    AlignedVector data;

    Tensor() = default;
    Tensor(int n_, int c_, int h_, int w_) : n(n_), c(c_), h(h_), w(w_), data(static_cast<std::size_t>(n_) * c_ * h_ * w_, 0.0) {
        if (n_ < 0 || c_ < 0 || h_ < 0 || w_ < 0) throw InvalidArgument("Tensor: negative dimension");
    }

    std::size_t size() const { return data.size(); }
    std::size_t sample_size() const { return static_cast<std::size_t>(c) * h * w; }
    std::size_t plane_size() const { return static_cast<std::size_t>(h) * w; }

    double* sample(int i) { return data.data() + static_cast<std::size_t>(i) * sample_size(); }
    const double* sample(int i) const { return data.data() + static_cast<std::size_t>(i) * sample_size(); }

    double* plane(int i, int ch) { return sample(i) + static_cast<std::size_t>(ch) * plane_size(); }
    const double* plane(int i, int ch) const { return sample(i) + static_cast<std::size_t>(ch) * plane_size(); }

    double& at(int i, int ch, int y, int x) { return plane(i, ch)[static_cast<std::size_t>(y) * w + x]; }
    double at(int i, int ch, int y, int x) const { return plane(i, ch)[static_cast<std::size_t>(y) * w + x]; }

    bool same_shape(const Tensor& o) const { return n == o.n && c == o.c && h == o.h && w == o.w; }

    void fill(double v) { std::fill(data.begin(), data.end(), v); }
};

/// Maps sample i of a tensor as a (C x H*W) row-major matrix: one row per channel.
inline Eigen::Map<RowMatrix> channels_view(Tensor& t, int i) {
    return Eigen::Map<RowMatrix>(t.sample(i), t.c, static_cast<Eigen::Index>(t.plane_size()));
}
inline Eigen::Map<const RowMatrix> channels_view(const Tensor& t, int i) {
    return Eigen::Map<const RowMatrix>(t.sample(i), t.c, static_cast<Eigen::Index>(t.plane_size()));
}

}  // namespace gatc
