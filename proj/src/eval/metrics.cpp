#include "recongan/eval/metrics.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace recongan::eval {

namespace {

constexpr int kWindow = 11;
constexpr double kSigma = 1.5;
constexpr double kK1 = 0.01;
constexpr double kK2 = 0.03;

void check_pair(const Tensor& a, const Tensor& b, const char* what) {
    check_same_shape(a, b, what);
    if (a.ndim() != 3 || a.dim(0) != 3)
        throw std::invalid_argument(std::string(what) + ": expected {3,H,W} images");
}

std::vector<double> luma01(const Tensor& img) {
    const int h = img.dim(1), w = img.dim(2);
    std::vector<double> out(static_cast<size_t>(h) * w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double r = (img.at3(0, y, x) + 1.0) * 0.5;
            const double g = (img.at3(1, y, x) + 1.0) * 0.5;
            const double b = (img.at3(2, y, x) + 1.0) * 0.5;
            out[static_cast<size_t>(y) * w + x] = 0.299 * r + 0.587 * g + 0.114 * b;
        }
    return out;
}

std::vector<double> gaussian_kernel() {
    std::vector<double> k(kWindow);
    const int half = kWindow / 2;
    double total = 0.0;
    for (int i = 0; i < kWindow; ++i) {
        const double d = i - half;
        k[static_cast<size_t>(i)] = std::exp(-d * d / (2.0 * kSigma * kSigma));
        total += k[static_cast<size_t>(i)];
    }
    for (auto& v : k) v /= total;
    return k;
}

// Separable valid-region Gaussian filter of an {h,w} buffer; output is
// (h-10) x (w-10).
std::vector<double> gauss_valid(const std::vector<double>& src, int h, int w) {
    static const std::vector<double> kernel = gaussian_kernel();
    const int oh = h - kWindow + 1, ow = w - kWindow + 1;
    std::vector<double> rows(static_cast<size_t>(h) * ow);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (int i = 0; i < kWindow; ++i)
                acc += kernel[static_cast<size_t>(i)] * src[static_cast<size_t>(y) * w + x + i];
            rows[static_cast<size_t>(y) * ow + x] = acc;
        }
    std::vector<double> out(static_cast<size_t>(oh) * ow);
    for (int y = 0; y < oh; ++y)
        for (int x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (int i = 0; i < kWindow; ++i)
                acc += kernel[static_cast<size_t>(i)] * rows[static_cast<size_t>(y + i) * ow + x];
            out[static_cast<size_t>(y) * ow + x] = acc;
        }
    return out;
}

}  // namespace

double psnr(const Tensor& a, const Tensor& b) {
    check_pair(a, b, "psnr");
    double mse = 0.0;
    for (int64_t i = 0; i < a.size(); ++i) {
        const double d = static_cast<double>(a[i]) - b[i];
        mse += d * d;
    }
    mse /= static_cast<double>(a.size());
    if (mse <= 0.0) return kPsnrCap;
    const double value = 10.0 * std::log10(4.0 / mse);  // R = 2 in [-1,1] space
    return std::min(value, kPsnrCap);
}

double ssim(const Tensor& a, const Tensor& b) {
    check_pair(a, b, "ssim");
    const int h = a.dim(1), w = a.dim(2);
    if (h < kWindow || w < kWindow)
        throw std::invalid_argument("ssim: image smaller than the 11x11 window");

    const std::vector<double> x = luma01(a);
    const std::vector<double> y = luma01(b);
    const size_t n = x.size();
    std::vector<double> xx(n), yy(n), xy(n);
    for (size_t i = 0; i < n; ++i) {
        xx[i] = x[i] * x[i];
        yy[i] = y[i] * y[i];
        xy[i] = x[i] * y[i];
    }

    const std::vector<double> mu_x = gauss_valid(x, h, w);
    const std::vector<double> mu_y = gauss_valid(y, h, w);
    const std::vector<double> m_xx = gauss_valid(xx, h, w);
    const std::vector<double> m_yy = gauss_valid(yy, h, w);
    const std::vector<double> m_xy = gauss_valid(xy, h, w);

    const double c1 = kK1 * kK1;  // R = 1 in [0,1] luma space
    const double c2 = kK2 * kK2;
    double acc = 0.0;
    for (size_t i = 0; i < mu_x.size(); ++i) {
        // Symmetric expression shapes: for identical inputs the numerator and
        // denominator are the same floating-point computation, so the local
        // score is exactly one.
        const double var_x = m_xx[i] - mu_x[i] * mu_x[i];
        const double var_y = m_yy[i] - mu_y[i] * mu_y[i];
        const double cov = m_xy[i] - mu_x[i] * mu_y[i];
        const double num = (mu_x[i] * mu_y[i] + mu_x[i] * mu_y[i] + c1) * (cov + cov + c2);
        const double den =
            (mu_x[i] * mu_x[i] + mu_y[i] * mu_y[i] + c1) * (var_x + var_y + c2);
        acc += num / den;
    }
    return acc / static_cast<double>(mu_x.size());
}

}  // namespace recongan::eval
