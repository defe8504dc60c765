#include "recongan/core/tensor.hpp"

#include <cmath>
#include <cstdlib>
#include <sstream>

namespace recongan {

std::string Tensor::shape_str() const {
    std::ostringstream os;
    os << "{";
    for (size_t i = 0; i < shape_.size(); ++i) {
        if (i) os << ",";
        os << shape_[i];
    }
    os << "}";
    return os.str();
}

Tensor Tensor::reshaped(std::vector<int> shape) const {
    if (count(shape) != size())
        throw std::invalid_argument("Tensor::reshaped: element count mismatch " + shape_str());
    Tensor out;
    out.shape_ = std::move(shape);
    out.data_ = data_;
    return out;
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* what) {
    if (!a.same_shape(b))
        throw std::invalid_argument(std::string(what) + ": shape mismatch " + a.shape_str() +
                                    " vs " + b.shape_str());
}

double dot(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "dot");
    double acc = 0.0;
    const float* pa = a.data();
    const float* pb = b.data();
    for (int64_t i = 0; i < a.size(); ++i) acc += static_cast<double>(pa[i]) * pb[i];
    return acc;
}

void add_inplace(Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "add_inplace");
    float* pa = a.data();
    const float* pb = b.data();
    for (int64_t i = 0; i < a.size(); ++i) pa[i] += pb[i];
}

void axpy_inplace(Tensor& a, float s, const Tensor& b) {
    check_same_shape(a, b, "axpy_inplace");
    float* pa = a.data();
    const float* pb = b.data();
    for (int64_t i = 0; i < a.size(); ++i) pa[i] += s * pb[i];
}

void scale_inplace(Tensor& a, float s) {
    float* pa = a.data();
    for (int64_t i = 0; i < a.size(); ++i) pa[i] *= s;
}

double sum(const Tensor& a) {
    double acc = 0.0;
    for (int64_t i = 0; i < a.size(); ++i) acc += a[i];
    return acc;
}

float max_abs(const Tensor& a) {
    float m = 0.0f;
    for (int64_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i]));
    return m;
}

bool all_finite(const Tensor& a) {
    for (int64_t i = 0; i < a.size(); ++i)
        if (!std::isfinite(a[i])) return false;
    return true;
}

}  // namespace recongan
