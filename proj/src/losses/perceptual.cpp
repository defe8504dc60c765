#include "recongan/losses/perceptual.hpp"

#include <cmath>
#include <stdexcept>

#include "recongan/net/serialize.hpp"

namespace recongan::losses {

using net::Conv2d;

namespace {

std::unique_ptr<Conv2d> make_frozen_conv(int in_ch, int out_ch) {
    auto conv = std::make_unique<Conv2d>(in_ch, out_ch, 3, 1, 1, true);
    conv->set_frozen(true);
    return conv;
}

}  // namespace

std::unique_ptr<ConvStackExtractor> ConvStackExtractor::random_stack(uint64_t seed) {
    auto ex = std::unique_ptr<ConvStackExtractor>(new ConvStackExtractor());
    Rng rng(mix_seed(seed, 0x70657263ULL));  // "perc" stream

    const int widths[5] = {16, 32, 64, 96, 128};
    int ch = 3;
    for (int stage = 0; stage < 5; ++stage) {
        if (stage > 0) ex->items_.push_back(std::make_unique<net::AvgPool2d>());
        auto conv = make_frozen_conv(ch, widths[stage]);
        // He-style scale keeps activation magnitudes stable through the stack.
        const float stddev = std::sqrt(2.0f / static_cast<float>(ch * 9));
        conv->init(rng, stddev);
        ch = widths[stage];
        ex->items_.push_back(std::move(conv));
        ex->items_.push_back(std::make_unique<net::LeakyReLU>(0.0f));
        ex->tap_after_.push_back(ex->items_.size() - 1);
    }
    return ex;
}

std::unique_ptr<ConvStackExtractor> ConvStackExtractor::vgg19(const std::string& weights_path) {
    auto ex = std::unique_ptr<ConvStackExtractor>(new ConvStackExtractor());

    // [-1,1] -> [0,1] -> ImageNet-normalized.
    const float mean[3] = {0.485f, 0.456f, 0.406f};
    const float stddev[3] = {0.229f, 0.224f, 0.225f};
    for (int c = 0; c < 3; ++c) {
        ex->in_scale_[c] = 0.5f / stddev[c];
        ex->in_offset_[c] = (0.5f - mean[c]) / stddev[c];
    }

    // Stage widths and conv counts of the 19-layer configuration, kept up to
    // the first conv of the last stage (later convs feed no tap).
    const int widths[5] = {64, 128, 256, 512, 512};
    const int counts[5] = {2, 2, 4, 4, 1};
    net::ParamRegistry reg;
    int ch = 3;
    int conv_index = 0;
    for (int stage = 0; stage < 5; ++stage) {
        if (stage > 0) ex->items_.push_back(std::make_unique<net::MaxPool2d>());
        for (int i = 0; i < counts[stage]; ++i) {
            auto conv = make_frozen_conv(ch, widths[stage]);
            conv->collect("conv" + std::to_string(conv_index++), reg);
            ch = widths[stage];
            ex->items_.push_back(std::move(conv));
            ex->items_.push_back(std::make_unique<net::LeakyReLU>(0.0f));
            if (i == 0) ex->tap_after_.push_back(ex->items_.size() - 1);
        }
    }

    const net::TensorFile file = net::load_tensors(weights_path);
    net::restore_into(file, reg);
    return ex;
}

std::vector<Tensor> ConvStackExtractor::features(const Tensor& batch, bool grad) {
    if (batch.ndim() != 4 || batch.dim(1) != 3)
        throw std::invalid_argument("FeatureExtractor: expected {N,3,H,W}, got " +
                                    batch.shape_str());
    in_shape_ = batch.shape();

    Tensor cur = batch;
    const int64_t plane = static_cast<int64_t>(batch.dim(2)) * batch.dim(3);
    for (int n = 0; n < batch.dim(0); ++n)
        for (int c = 0; c < 3; ++c) {
            float* p = cur.data() + (static_cast<int64_t>(n) * 3 + c) * plane;
            for (int64_t i = 0; i < plane; ++i) p[i] = p[i] * in_scale_[c] + in_offset_[c];
        }

    const net::ForwardMode mode{false, grad};
    std::vector<Tensor> taps;
    taps.reserve(tap_after_.size());
    size_t next_tap = 0;
    for (size_t i = 0; i < items_.size() && next_tap < tap_after_.size(); ++i) {
        cur = items_[i]->forward(cur, mode);
        if (tap_after_[next_tap] == i) {
            taps.push_back(cur);
            ++next_tap;
        }
    }
    return taps;
}

Tensor ConvStackExtractor::backward(const std::vector<Tensor>& feature_grads) {
    if (feature_grads.size() != tap_after_.size())
        throw std::invalid_argument("FeatureExtractor::backward: need one gradient per tap");
    if (in_shape_.empty()) throw std::logic_error("FeatureExtractor::backward before features()");

    const size_t last_item = tap_after_.back();
    Tensor cur;
    size_t tap = tap_after_.size();
    for (size_t i = last_item + 1; i-- > 0;) {
        if (tap > 0 && tap_after_[tap - 1] == i) {
            --tap;
            if (!feature_grads[tap].empty()) {
                if (cur.empty())
                    cur = feature_grads[tap];
                else
                    add_inplace(cur, feature_grads[tap]);
            }
        }
        if (cur.empty()) continue;  // nothing injected yet at this depth
        cur = items_[i]->backward(cur);
    }

    if (cur.empty()) return Tensor(in_shape_);

    const int64_t plane = static_cast<int64_t>(in_shape_[2]) * in_shape_[3];
    for (int n = 0; n < in_shape_[0]; ++n)
        for (int c = 0; c < 3; ++c) {
            float* p = cur.data() + (static_cast<int64_t>(n) * 3 + c) * plane;
            for (int64_t i = 0; i < plane; ++i) p[i] *= in_scale_[c];
        }
    return cur;
}

}  // namespace recongan::losses
