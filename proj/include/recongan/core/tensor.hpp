#pragma once

#include <cstdint>
#include <cstdlib>
#include <initializer_list>
#include <new>
#include <stdexcept>
#include <string>
#include <vector>

namespace recongan {

/// 64-byte aligned allocator. A fixed alignment keeps the SIMD kernel entry
/// paths identical across allocations, which makes repeated runs of the same
/// computation bit-reproducible.
template <typename T>
struct AlignedAllocator {
    using value_type = T;
    static constexpr std::size_t kAlignment = 64;

    AlignedAllocator() = default;
    template <typename U>
    AlignedAllocator(const AlignedAllocator<U>&) {}

    T* allocate(std::size_t n) {
        void* p = std::aligned_alloc(kAlignment, ((n * sizeof(T) + kAlignment - 1) / kAlignment) *
                                                     kAlignment);
        if (!p) throw std::bad_alloc();
        return static_cast<T*>(p);
    }
    void deallocate(T* p, std::size_t) { std::free(p); }

    template <typename U>
    bool operator==(const AlignedAllocator<U>&) const {
        return true;
    }
    template <typename U>
    bool operator!=(const AlignedAllocator<U>&) const {
        return false;
    }
};

/// Dense row-major float tensor. Images are {3, H, W} in [-1, 1]; network
/// activations are {N, C, H, W}.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<int> shape) : shape_(std::move(shape)) {
        data_.assign(static_cast<size_t>(count(shape_)), 0.0f);
    }
    Tensor(std::initializer_list<int> shape) : Tensor(std::vector<int>(shape)) {}

    static Tensor zeros_like(const Tensor& other) { return Tensor(other.shape_); }

    const std::vector<int>& shape() const { return shape_; }
    int dim(int i) const { return shape_.at(static_cast<size_t>(i)); }
    int ndim() const { return static_cast<int>(shape_.size()); }
    int64_t size() const { return static_cast<int64_t>(data_.size()); }
    bool empty() const { return data_.empty(); }

    float* data() { return data_.data(); }
    const float* data() const { return data_.data(); }

    float& operator[](int64_t i) { return data_[static_cast<size_t>(i)]; }
    float operator[](int64_t i) const { return data_[static_cast<size_t>(i)]; }

    /// Element access for {C, H, W} tensors.
    float& at3(int c, int y, int x) {
        return data_[(static_cast<size_t>(c) * shape_[1] + y) * shape_[2] + x];
    }
    float at3(int c, int y, int x) const {
        return data_[(static_cast<size_t>(c) * shape_[1] + y) * shape_[2] + x];
    }

    /// Element access for {N, C, H, W} tensors.
    float& at4(int n, int c, int y, int x) {
        return data_[((static_cast<size_t>(n) * shape_[1] + c) * shape_[2] + y) * shape_[3] + x];
    }
    float at4(int n, int c, int y, int x) const {
        return data_[((static_cast<size_t>(n) * shape_[1] + c) * shape_[2] + y) * shape_[3] + x];
    }

    void fill(float v) { data_.assign(data_.size(), v); }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

    std::string shape_str() const;

    /// Reinterpret as a new shape with identical element count.
    Tensor reshaped(std::vector<int> shape) const;

    static int64_t count(const std::vector<int>& shape) {
        int64_t n = 1;
        for (int d : shape) {
            if (d < 0) throw std::invalid_argument("Tensor: negative dimension");
            n *= d;
        }
        return shape.empty() ? 0 : n;
    }

private:
    std::vector<int> shape_;
    std::vector<float, AlignedAllocator<float>> data_;
};

void check_same_shape(const Tensor& a, const Tensor& b, const char* what);

/// Sum of elementwise products, accumulated in double.
double dot(const Tensor& a, const Tensor& b);

/// a += b (shapes must match).
void add_inplace(Tensor& a, const Tensor& b);

/// a += s * b.
void axpy_inplace(Tensor& a, float s, const Tensor& b);

void scale_inplace(Tensor& a, float s);

double sum(const Tensor& a);
float max_abs(const Tensor& a);
bool all_finite(const Tensor& a);

}  // namespace recongan
