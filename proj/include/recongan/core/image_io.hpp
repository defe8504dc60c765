#pragma once

#include <string>
#include <vector>

#include "recongan/core/tensor.hpp"
#include "recongan/corruption/corruption.hpp"

namespace recongan::imageio {

/// Decode an image file, center-crop to square, bilinear-resize to
/// target_size^2 and map channel values linearly from [0,255] to [-1,1].
/// Throws std::runtime_error naming the path on unreadable input.
Tensor load_and_normalize(const std::string& path, int target_size);

/// Decode at native size (no crop or resize), mapped to [-1,1].
Tensor load_image(const std::string& path);

/// Map a [-1,1] image back to 8-bit and write it (format from extension).
void save_image(const std::string& path, const Tensor& image);

/// Retention mask as a 1-bit PNG.
void save_mask(const std::string& path, const corruption::Mask& mask);
corruption::Mask load_mask(const std::string& path);

/// Horizontal / vertical concatenation of equally sized {3,H,W} images.
Tensor hstack(const std::vector<Tensor>& images);
Tensor vstack(const std::vector<Tensor>& images);

}  // namespace recongan::imageio
