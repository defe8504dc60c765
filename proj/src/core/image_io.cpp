#include "recongan/core/image_io.hpp"

#include <cmath>
#include <stdexcept>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

namespace recongan::imageio {

Tensor load_and_normalize(const std::string& path, int target_size) {
    if (target_size <= 0) throw std::invalid_argument("load_and_normalize: target_size <= 0");
    cv::Mat bgr = cv::imread(path, cv::IMREAD_COLOR);
    if (bgr.empty()) throw std::runtime_error("failed to read image: " + path);

    // Center-crop to square before resizing; non-square inputs keep the subject.
    const int side = std::min(bgr.rows, bgr.cols);
    const int y0 = (bgr.rows - side) / 2;
    const int x0 = (bgr.cols - side) / 2;
    cv::Mat square = bgr(cv::Rect(x0, y0, side, side));

    cv::Mat resized;
    if (side == target_size)
        resized = square.clone();
    else
        cv::resize(square, resized, cv::Size(target_size, target_size), 0, 0, cv::INTER_LINEAR);

    Tensor out({3, target_size, target_size});
    for (int y = 0; y < target_size; ++y) {
        const cv::Vec3b* row = resized.ptr<cv::Vec3b>(y);
        for (int x = 0; x < target_size; ++x) {
            // BGR -> RGB
            out.at3(0, y, x) = static_cast<float>(row[x][2]) / 255.0f * 2.0f - 1.0f;
            out.at3(1, y, x) = static_cast<float>(row[x][1]) / 255.0f * 2.0f - 1.0f;
            out.at3(2, y, x) = static_cast<float>(row[x][0]) / 255.0f * 2.0f - 1.0f;
        }
    }
    return out;
}

Tensor load_image(const std::string& path) {
    cv::Mat bgr = cv::imread(path, cv::IMREAD_COLOR);
    if (bgr.empty()) throw std::runtime_error("failed to read image: " + path);
    Tensor out({3, bgr.rows, bgr.cols});
    for (int y = 0; y < bgr.rows; ++y) {
        const cv::Vec3b* row = bgr.ptr<cv::Vec3b>(y);
        for (int x = 0; x < bgr.cols; ++x) {
            out.at3(0, y, x) = static_cast<float>(row[x][2]) / 255.0f * 2.0f - 1.0f;
            out.at3(1, y, x) = static_cast<float>(row[x][1]) / 255.0f * 2.0f - 1.0f;
            out.at3(2, y, x) = static_cast<float>(row[x][0]) / 255.0f * 2.0f - 1.0f;
        }
    }
    return out;
}

namespace {

uint8_t to_byte(float v) {
    const float clamped = std::clamp(v, -1.0f, 1.0f);
    return static_cast<uint8_t>(std::lround((clamped + 1.0f) * 0.5f * 255.0f));
}

}  // namespace

void save_image(const std::string& path, const Tensor& image) {
    if (image.ndim() != 3 || image.dim(0) != 3)
        throw std::invalid_argument("save_image: expected {3,H,W} image");
    const int h = image.dim(1), w = image.dim(2);
    cv::Mat bgr(h, w, CV_8UC3);
    for (int y = 0; y < h; ++y) {
        cv::Vec3b* row = bgr.ptr<cv::Vec3b>(y);
        for (int x = 0; x < w; ++x) {
            row[x][0] = to_byte(image.at3(2, y, x));
            row[x][1] = to_byte(image.at3(1, y, x));
            row[x][2] = to_byte(image.at3(0, y, x));
        }
    }
    if (!cv::imwrite(path, bgr)) throw std::runtime_error("failed to write image: " + path);
}

void save_mask(const std::string& path, const corruption::Mask& mask) {
    cv::Mat gray(mask.height, mask.width, CV_8UC1);
    for (int y = 0; y < mask.height; ++y)
        for (int x = 0; x < mask.width; ++x)
            gray.at<uint8_t>(y, x) = mask.at(y, x) ? 255 : 0;
    if (!cv::imwrite(path, gray, {cv::IMWRITE_PNG_BILEVEL, 1}))
        throw std::runtime_error("failed to write mask: " + path);
}

corruption::Mask load_mask(const std::string& path) {
    cv::Mat gray = cv::imread(path, cv::IMREAD_GRAYSCALE);
    if (gray.empty()) throw std::runtime_error("failed to read mask: " + path);
    corruption::Mask mask(gray.rows, gray.cols);
    for (int y = 0; y < gray.rows; ++y)
        for (int x = 0; x < gray.cols; ++x) mask.set(y, x, gray.at<uint8_t>(y, x) > 127);
    return mask;
}

namespace {

Tensor stack(const std::vector<Tensor>& images, bool horizontal) {
    if (images.empty()) throw std::invalid_argument("stack: no images");
    const int h = images[0].dim(1), w = images[0].dim(2);
    for (const auto& img : images) check_same_shape(images[0], img, "stack");

    Tensor out = horizontal ? Tensor({3, h, w * static_cast<int>(images.size())})
                                 : Tensor({3, h * static_cast<int>(images.size()), w});
    for (size_t i = 0; i < images.size(); ++i) {
        const int oy = horizontal ? 0 : static_cast<int>(i) * h;
        const int ox = horizontal ? static_cast<int>(i) * w : 0;
        for (int c = 0; c < 3; ++c)
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x)
                    out.at3(c, oy + y, ox + x) = images[i].at3(c, y, x);
    }
    return out;
}

}  // namespace

Tensor hstack(const std::vector<Tensor>& images) { return stack(images, true); }
Tensor vstack(const std::vector<Tensor>& images) { return stack(images, false); }

}  // namespace recongan::imageio
