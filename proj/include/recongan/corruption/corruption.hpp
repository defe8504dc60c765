#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "recongan/core/tensor.hpp"

namespace recongan::corruption {

/// Boolean retention grid. true = pixel kept from the real image.
struct Mask {
    int height = 0;
    int width = 0;
    std::vector<uint8_t> grid;  // row-major, height*width

    Mask() = default;
    Mask(int h, int w) : height(h), width(w), grid(static_cast<size_t>(h) * w, 0) {}

    bool at(int y, int x) const { return grid[static_cast<size_t>(y) * width + x] != 0; }
    void set(int y, int x, bool v) { grid[static_cast<size_t>(y) * width + x] = v ? 1 : 0; }
    int64_t kept_count() const;
};

enum class CorruptionKind {
    uniform_points_white,
    feature_points_white,
    uniform_points_color_noise,
    center_white_block,
    clutter_color_block,
};

bool is_point_kind(CorruptionKind kind);
bool is_block_kind(CorruptionKind kind);

/// Per §4, the corresponding point loss is active for the discrete-point and
/// white-block tasks and inactive for the color-noise and color-block tasks.
bool point_loss_default(CorruptionKind kind);

const char* to_string(CorruptionKind kind);
CorruptionKind kind_from_string(const std::string& name);

struct CorruptionSpec {
    CorruptionKind kind = CorruptionKind::uniform_points_white;
    double keep_fraction = 0.0;  // point kinds
    int block_size = 0;          // block kinds; upper bound of the side for clutter
    uint64_t seed = 0;

    void validate() const;  // throws std::invalid_argument
    std::string to_json() const;
    static CorruptionSpec from_json(const std::string& text);
};

/// A training pair: corrupted source, ground-truth real image, retention mask.
struct CorruptedSample {
    Tensor source;  // {3,H,W}, generator input s
    Tensor real;    // {3,H,W}, ground truth x
    Mask mask;
    CorruptionSpec spec;
};

/// Independent per-pixel retention: integer draw in [0,99] kept when below
/// round(100*keep_fraction). Deterministic given seed.
Mask make_uniform_mask(int height, int width, double keep_fraction, uint64_t seed);

/// Sobel gradient magnitude of the luma image, borders handled by edge
/// replication. Returns an {H,W} map of non-negative values.
Tensor sobel_edge_map(const Tensor& image);

/// Exactly round(keep_fraction*H*W) pixels sampled without replacement with
/// probability proportional to edge magnitude plus a floor of 1% of the peak
/// magnitude (uniform when the image is constant).
Mask make_feature_mask(const Tensor& image, double keep_fraction, uint64_t seed);

/// Apply a corruption regime. donor is required exactly for clutter_color_block.
CorruptedSample corrupt(const Tensor& real, const CorruptionSpec& spec,
                        const Tensor* donor = nullptr);

}  // namespace recongan::corruption
