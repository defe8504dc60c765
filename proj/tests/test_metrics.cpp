#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "recongan/eval/metrics.hpp"
#include "testutil.hpp"

using namespace recongan;
using namespace recongan::eval;
using testutil::random_image;

namespace {

// Direct-formula PSNR reference, independent of the implementation path.
double psnr_oracle(const Tensor& a, const Tensor& b) {
    double mse = 0.0;
    for (int64_t i = 0; i < a.size(); ++i) {
        const double d = static_cast<double>(a[i]) - b[i];
        mse += d * d;
    }
    mse /= static_cast<double>(a.size());
    if (mse <= 0.0) return 100.0;
    return std::min(100.0, 10.0 * std::log10(2.0 * 2.0 / mse));
}

// Direct per-window SSIM reference: explicit Gaussian-weighted sums over
// every 11x11 window, no separable filtering.
double ssim_oracle(const Tensor& a, const Tensor& b) {
    const int h = a.dim(1), w = a.dim(2);
    auto luma = [](const Tensor& img, int y, int x) {
        return 0.299 * (img.at3(0, y, x) + 1.0) * 0.5 + 0.587 * (img.at3(1, y, x) + 1.0) * 0.5 +
               0.114 * (img.at3(2, y, x) + 1.0) * 0.5;
    };
    double kernel[11][11];
    double total = 0.0;
    for (int i = 0; i < 11; ++i)
        for (int j = 0; j < 11; ++j) {
            const double dy = i - 5, dx = j - 5;
            kernel[i][j] = std::exp(-(dy * dy + dx * dx) / (2.0 * 1.5 * 1.5));
            total += kernel[i][j];
        }
    for (auto& row : kernel)
        for (auto& v : row) v /= total;

    const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
    double acc = 0.0;
    int64_t count = 0;
    for (int y = 0; y + 11 <= h; ++y)
        for (int x = 0; x + 11 <= w; ++x) {
            double mx = 0, my = 0, mxx = 0, myy = 0, mxy = 0;
            for (int i = 0; i < 11; ++i)
                for (int j = 0; j < 11; ++j) {
                    const double va = luma(a, y + i, x + j);
                    const double vb = luma(b, y + i, x + j);
                    mx += kernel[i][j] * va;
                    my += kernel[i][j] * vb;
                    mxx += kernel[i][j] * va * va;
                    myy += kernel[i][j] * vb * vb;
                    mxy += kernel[i][j] * va * vb;
                }
            const double vx = mxx - mx * mx, vy = myy - my * my, cov = mxy - mx * my;
            acc += ((2 * mx * my + c1) * (2 * cov + c2)) /
                   ((mx * mx + my * my + c1) * (vx + vy + c2));
            ++count;
        }
    return acc / static_cast<double>(count);
}

}  // namespace

TEST_CASE("identical images hit the PSNR cap and SSIM one") {
    const Tensor img = testutil::make_test_photo(32, 32);
    CHECK(psnr(img, img) == 100.0);
    CHECK(ssim(img, img) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("uniform 0.1 offset in [0,1] space gives exactly 20 dB") {
    Tensor a({3, 16, 16});
    a.fill(-0.3f);
    Tensor b = a;
    // 0.1 in [0,1] space is 0.2 in [-1,1] space.
    for (int64_t i = 0; i < b.size(); ++i) b[i] += 0.2f;
    CHECK(psnr(a, b) == doctest::Approx(20.0).epsilon(1e-6));
}

TEST_CASE("white versus black constant images score near zero SSIM") {
    Tensor white({3, 16, 16}), black({3, 16, 16});
    white.fill(1.0f);
    black.fill(-1.0f);
    const double v = ssim(white, black);
    // Closed form for constant patches: C1 / (1 + C1).
    CHECK(v == doctest::Approx(1e-4 / (1.0 + 1e-4)).epsilon(1e-6));
}

TEST_CASE("psnr and ssim agree with independent oracles on random pairs") {
    for (uint64_t seed = 0; seed < 50; ++seed) {
        const Tensor a = random_image(16, 16, 1000 + seed);
        Tensor b = random_image(16, 16, 2000 + seed);
        if (seed % 3 == 0) {
            b = a;  // exercise near-identical pairs as well
            for (int64_t i = 0; i < b.size(); ++i)
                b[i] += 0.01f * static_cast<float>(i % 7 - 3);
        }
        CHECK(psnr(a, b) == doctest::Approx(psnr_oracle(a, b)).epsilon(1e-6));
        CHECK(ssim(a, b) == doctest::Approx(ssim_oracle(a, b)).epsilon(1e-6));
    }
}

TEST_CASE("both metrics are symmetric") {
    const Tensor a = testutil::make_test_photo(24, 24, 1);
    const Tensor b = testutil::make_test_photo(24, 24, 2);
    CHECK(psnr(a, b) == psnr(b, a));
    CHECK(ssim(a, b) == doctest::Approx(ssim(b, a)).epsilon(1e-12));
}

TEST_CASE("psnr strictly decreases as uniform noise grows") {
    const Tensor a = testutil::make_test_photo(16, 16);
    double last = 1e9;
    for (float eps : {0.01f, 0.02f, 0.05f, 0.1f, 0.2f}) {
        Tensor b = a;
        for (int64_t i = 0; i < b.size(); ++i) b[i] += eps;
        const double v = psnr(a, b);
        CHECK(v < last);
        last = v;
    }
}

TEST_CASE("metric argument validation") {
    const Tensor a = testutil::make_test_photo(16, 16);
    const Tensor small = testutil::make_test_photo(8, 8);
    CHECK_THROWS_AS(psnr(a, small), std::invalid_argument);
    CHECK_THROWS_AS(ssim(small, small), std::invalid_argument);  // below the window size
}
