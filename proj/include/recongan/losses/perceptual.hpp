#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "recongan/net/layers.hpp"

namespace recongan::losses {

/// Frozen feature stack for the perceptual loss. Implementations never expose
/// trainable parameters; backward() only propagates to the input image.
class FeatureExtractor {
public:
    virtual ~FeatureExtractor() = default;

    /// Activations at every tap for a {N,3,H,W} batch in [-1,1].
    virtual std::vector<Tensor> features(const Tensor& batch, bool grad) = 0;

    /// Gradient w.r.t. the input batch given a gradient per tap (entries may
    /// be empty). Requires a prior features() call with grad = true.
    virtual Tensor backward(const std::vector<Tensor>& feature_grads) = 0;

    virtual size_t tap_count() const = 0;
};

/// Plain convolution stack with ReLUs, pooling between stages and a tap at
/// the end of each stage.
class ConvStackExtractor : public FeatureExtractor {
public:
    /// Deterministic random-weight stack (5 stages, one 3x3 conv each). Runs
    /// without any external weight file; the default extractor.
    static std::unique_ptr<ConvStackExtractor> random_stack(uint64_t seed);

    /// 19-layer VGG-style prefix (stage widths 64/128/256/512/512, max
    /// pooling, ImageNet input normalization) tapped after the first ReLU of
    /// each stage. Weights are read from a tensor file holding conv0/w,
    /// conv0/b, conv1/w, ... in network order.
    static std::unique_ptr<ConvStackExtractor> vgg19(const std::string& weights_path);

    std::vector<Tensor> features(const Tensor& batch, bool grad) override;
    Tensor backward(const std::vector<Tensor>& feature_grads) override;
    size_t tap_count() const override { return tap_after_.size(); }

private:
    ConvStackExtractor() = default;

    std::vector<std::unique_ptr<net::Layer>> items_;
    std::vector<size_t> tap_after_;  // item indices whose output is a tap
    // Per-channel affine input transform x*scale + offset.
    std::array<float, 3> in_scale_{1.0f, 1.0f, 1.0f};
    std::array<float, 3> in_offset_{0.0f, 0.0f, 0.0f};
    std::vector<int> in_shape_;
};

}  // namespace recongan::losses
