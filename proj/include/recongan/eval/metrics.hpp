#pragma once

#include "recongan/core/tensor.hpp"

namespace recongan::eval {

/// Peak PSNR reported for (near-)identical images instead of infinity.
inline constexpr double kPsnrCap = 100.0;

/// 10*log10(R^2/MSE) with R = 2 in [-1,1] space, capped at kPsnrCap dB.
double psnr(const Tensor& a, const Tensor& b);

/// Mean local SSIM on ITU-R 601 luma in [0,1] space; 11x11 Gaussian window
/// with sigma 1.5, K1 = 0.01, K2 = 0.03, valid-window coverage. Requires the
/// image sides to be at least the window size.
double ssim(const Tensor& a, const Tensor& b);

}  // namespace recongan::eval
