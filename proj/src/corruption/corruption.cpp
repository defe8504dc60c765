#include "recongan/corruption/corruption.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "recongan/core/rng.hpp"

namespace recongan::corruption {

namespace {

constexpr float kWhite = 1.0f;  // white fill in [-1,1] space

// ITU-R 601 luma weights.
constexpr double kLumaR = 0.299, kLumaG = 0.587, kLumaB = 0.114;

void check_image(const Tensor& image, const char* what) {
    if (image.ndim() != 3 || image.dim(0) != 3 || image.dim(1) <= 0 || image.dim(2) <= 0)
        throw std::invalid_argument(std::string(what) + ": expected {3,H,W} image, got " +
                                    image.shape_str());
}

}  // namespace

int64_t Mask::kept_count() const {
    return std::count(grid.begin(), grid.end(), uint8_t{1});
}

bool is_point_kind(CorruptionKind kind) {
    switch (kind) {
        case CorruptionKind::uniform_points_white:
        case CorruptionKind::feature_points_white:
        case CorruptionKind::uniform_points_color_noise:
            return true;
        default:
            return false;
    }
}

bool is_block_kind(CorruptionKind kind) { return !is_point_kind(kind); }

bool point_loss_default(CorruptionKind kind) {
    switch (kind) {
        case CorruptionKind::uniform_points_white:
        case CorruptionKind::feature_points_white:
        case CorruptionKind::center_white_block:
            return true;
        case CorruptionKind::uniform_points_color_noise:
        case CorruptionKind::clutter_color_block:
            return false;
    }
    return false;
}

const char* to_string(CorruptionKind kind) {
    switch (kind) {
        case CorruptionKind::uniform_points_white: return "uniform_points_white";
        case CorruptionKind::feature_points_white: return "feature_points_white";
        case CorruptionKind::uniform_points_color_noise: return "uniform_points_color_noise";
        case CorruptionKind::center_white_block: return "center_white_block";
        case CorruptionKind::clutter_color_block: return "clutter_color_block";
    }
    return "unknown";
}

CorruptionKind kind_from_string(const std::string& name) {
    static const std::pair<const char*, CorruptionKind> table[] = {
        {"uniform_points_white", CorruptionKind::uniform_points_white},
        {"feature_points_white", CorruptionKind::feature_points_white},
        {"uniform_points_color_noise", CorruptionKind::uniform_points_color_noise},
        {"center_white_block", CorruptionKind::center_white_block},
        {"clutter_color_block", CorruptionKind::clutter_color_block},
    };
    for (const auto& [str, kind] : table)
        if (name == str) return kind;
    throw std::invalid_argument("unknown corruption kind: " + name);
}

void CorruptionSpec::validate() const {
    if (is_point_kind(kind)) {
        if (!(keep_fraction > 0.0 && keep_fraction <= 1.0))
            throw std::invalid_argument("CorruptionSpec: keep_fraction must be in (0,1] for " +
                                        std::string(to_string(kind)));
    } else {
        if (block_size <= 0)
            throw std::invalid_argument("CorruptionSpec: block_size must be positive for " +
                                        std::string(to_string(kind)));
    }
}

std::string CorruptionSpec::to_json() const {
    nlohmann::json j;
    j["kind"] = to_string(kind);
    if (is_point_kind(kind)) j["keep_fraction"] = keep_fraction;
    if (is_block_kind(kind)) j["block_size"] = block_size;
    j["seed"] = seed;
    return j.dump(2);
}

CorruptionSpec CorruptionSpec::from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    CorruptionSpec spec;
    spec.kind = kind_from_string(j.at("kind").get<std::string>());
    spec.keep_fraction = j.value("keep_fraction", 0.0);
    spec.block_size = j.value("block_size", 0);
    spec.seed = j.value("seed", uint64_t{0});
    spec.validate();
    return spec;
}

Mask make_uniform_mask(int height, int width, double keep_fraction, uint64_t seed) {
    if (height <= 0 || width <= 0)
        throw std::invalid_argument("make_uniform_mask: non-positive dimensions");
    if (!(keep_fraction > 0.0 && keep_fraction <= 1.0))
        throw std::invalid_argument("make_uniform_mask: keep_fraction must be in (0,1]");

    const int threshold = static_cast<int>(std::llround(100.0 * keep_fraction));
    Mask mask(height, width);
    Rng rng(mix_seed(seed, 0x756d61736bULL));  // "umask" stream
    for (size_t i = 0; i < mask.grid.size(); ++i)
        mask.grid[i] = static_cast<int>(rng.bounded(100)) < threshold ? 1 : 0;
    return mask;
}

Tensor sobel_edge_map(const Tensor& image) {
    check_image(image, "sobel_edge_map");
    const int h = image.dim(1), w = image.dim(2);

    std::vector<double> luma(static_cast<size_t>(h) * w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            luma[static_cast<size_t>(y) * w + x] = kLumaR * image.at3(0, y, x) +
                                                   kLumaG * image.at3(1, y, x) +
                                                   kLumaB * image.at3(2, y, x);

    auto lu = [&](int y, int x) {
        y = std::clamp(y, 0, h - 1);
        x = std::clamp(x, 0, w - 1);
        return luma[static_cast<size_t>(y) * w + x];
    };

    // Differences of paired taps so constant regions give exact zeros.
    Tensor mag({h, w});
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double gx = (lu(y - 1, x + 1) - lu(y - 1, x - 1)) +
                              2.0 * (lu(y, x + 1) - lu(y, x - 1)) +
                              (lu(y + 1, x + 1) - lu(y + 1, x - 1));
            const double gy = (lu(y + 1, x - 1) - lu(y - 1, x - 1)) +
                              2.0 * (lu(y + 1, x) - lu(y - 1, x)) +
                              (lu(y + 1, x + 1) - lu(y - 1, x + 1));
            mag[static_cast<int64_t>(y) * w + x] = static_cast<float>(std::sqrt(gx * gx + gy * gy));
        }
    }
    return mag;
}

Mask make_feature_mask(const Tensor& image, double keep_fraction, uint64_t seed) {
    check_image(image, "make_feature_mask");
    if (!(keep_fraction > 0.0 && keep_fraction <= 1.0))
        throw std::invalid_argument("make_feature_mask: keep_fraction must be in (0,1]");

    const int h = image.dim(1), w = image.dim(2);
    const int64_t total = static_cast<int64_t>(h) * w;
    const int64_t want = std::llround(keep_fraction * static_cast<double>(total));
    if (want > total)
        throw std::invalid_argument("make_feature_mask: requested count exceeds pixel count");

    const Tensor mag = sobel_edge_map(image);
    double peak = 0.0;
    for (int64_t i = 0; i < total; ++i) peak = std::max(peak, static_cast<double>(mag[i]));

    // Weighted sampling without replacement (Efraimidis-Spirakis keys): the
    // `want` smallest values of -log(u)/w are the selected pixels.
    Rng rng(mix_seed(seed, 0x666d61736bULL));  // "fmask" stream
    std::vector<std::pair<double, int64_t>> keys(static_cast<size_t>(total));
    for (int64_t i = 0; i < total; ++i) {
        const double weight = peak > 0.0 ? mag[i] + 0.01 * peak : 1.0;
        double u = 0.0;
        while (u == 0.0) u = rng.uniform();
        keys[static_cast<size_t>(i)] = {-std::log(u) / weight, i};
    }
    std::nth_element(keys.begin(), keys.begin() + want, keys.end());

    Mask mask(h, w);
    for (int64_t i = 0; i < want; ++i)
        mask.grid[static_cast<size_t>(keys[static_cast<size_t>(i)].second)] = 1;
    return mask;
}

namespace {

CorruptedSample from_point_mask(const Tensor& real, const CorruptionSpec& spec, Mask mask) {
    const int h = real.dim(1), w = real.dim(2);
    CorruptedSample sample;
    sample.real = real;
    sample.source = real;
    sample.spec = spec;

    const bool color_noise = spec.kind == CorruptionKind::uniform_points_color_noise;
    Rng fill_rng(mix_seed(spec.seed, 0x66696c6cULL));  // "fill" stream
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (mask.at(y, x)) continue;
            if (color_noise) {
                for (int c = 0; c < 3; ++c)
                    sample.source.at3(c, y, x) = static_cast<float>(fill_rng.uniform(-1.0, 1.0));
            } else {
                for (int c = 0; c < 3; ++c) sample.source.at3(c, y, x) = kWhite;
            }
        }
    }
    sample.mask = std::move(mask);
    return sample;
}

CorruptedSample from_block(const Tensor& real, const CorruptionSpec& spec, const Tensor* donor) {
    const int h = real.dim(1), w = real.dim(2);
    if (spec.block_size > h || spec.block_size > w)
        throw std::invalid_argument("corrupt: block_size larger than image side");

    CorruptedSample sample;
    sample.real = real;
    sample.source = real;
    sample.spec = spec;
    Mask mask(h, w);
    std::fill(mask.grid.begin(), mask.grid.end(), uint8_t{1});

    if (spec.kind == CorruptionKind::center_white_block) {
        const int y0 = (h - spec.block_size) / 2;
        const int x0 = (w - spec.block_size) / 2;
        for (int y = y0; y < y0 + spec.block_size; ++y)
            for (int x = x0; x < x0 + spec.block_size; ++x) {
                for (int c = 0; c < 3; ++c) sample.source.at3(c, y, x) = kWhite;
                mask.set(y, x, false);
            }
    } else {
        if (donor == nullptr)
            throw std::invalid_argument("corrupt: clutter_color_block requires a donor image");
        check_image(*donor, "corrupt donor");
        const int dh = donor->dim(1), dw = donor->dim(2);

        Rng rng(mix_seed(spec.seed, 0x626c6f636bULL));  // "block" stream
        const int lo = std::min(16, spec.block_size);
        const int side = lo + static_cast<int>(rng.bounded(
                                  static_cast<uint64_t>(spec.block_size - lo + 1)));
        if (side > dh || side > dw)
            throw std::invalid_argument("corrupt: donor smaller than clutter block");
        const int y0 = static_cast<int>(rng.bounded(static_cast<uint64_t>(h - side + 1)));
        const int x0 = static_cast<int>(rng.bounded(static_cast<uint64_t>(w - side + 1)));
        const int sy = static_cast<int>(rng.bounded(static_cast<uint64_t>(dh - side + 1)));
        const int sx = static_cast<int>(rng.bounded(static_cast<uint64_t>(dw - side + 1)));
        for (int y = 0; y < side; ++y)
            for (int x = 0; x < side; ++x) {
                for (int c = 0; c < 3; ++c)
                    sample.source.at3(c, y0 + y, x0 + x) = donor->at3(c, sy + y, sx + x);
                mask.set(y0 + y, x0 + x, false);
            }
    }
    sample.mask = std::move(mask);
    return sample;
}

}  // namespace

CorruptedSample corrupt(const Tensor& real, const CorruptionSpec& spec, const Tensor* donor) {
    check_image(real, "corrupt");
    spec.validate();
    if (donor != nullptr && spec.kind != CorruptionKind::clutter_color_block)
        throw std::invalid_argument("corrupt: donor only valid for clutter_color_block");

    switch (spec.kind) {
        case CorruptionKind::uniform_points_white:
        case CorruptionKind::uniform_points_color_noise:
            return from_point_mask(
                real, spec,
                make_uniform_mask(real.dim(1), real.dim(2), spec.keep_fraction, spec.seed));
        case CorruptionKind::feature_points_white:
            return from_point_mask(real, spec,
                                   make_feature_mask(real, spec.keep_fraction, spec.seed));
        case CorruptionKind::center_white_block:
        case CorruptionKind::clutter_color_block:
            return from_block(real, spec, donor);
    }
    throw std::invalid_argument("corrupt: unknown kind");
}

}  // namespace recongan::corruption
