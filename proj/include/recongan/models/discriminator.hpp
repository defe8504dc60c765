#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <vector>

#include "recongan/net/layers.hpp"

namespace recongan::models {

struct DiscriminatorConfig {
    int scales = 3;  // fixed by contract
    int layers = 4;  // strided 4x4 convolutions before the 1-channel output conv
    int base_channels = 64;

    void validate() const;
};

/// Per-scale forward record: one feature map per layer plus the patch-logit
/// map as the final entry (T = layers + 1 tensors in total).
struct ScaleFeatures {
    std::vector<Tensor> features;

    const Tensor& logits() const { return features.back(); }
    size_t layer_count() const { return features.size(); }
};

/// Three parameter-independent patch discriminators with identical structure.
/// Scale k consumes the channel-concatenated (source, candidate) pair
/// average-pooled k-1 times.
class DiscriminatorBank {
public:
    DiscriminatorBank(const DiscriminatorConfig& config, uint64_t init_seed);

    std::vector<ScaleFeatures> forward(const Tensor& source, const Tensor& candidate,
                                       bool training, bool grad = true);

    /// Backpropagate arbitrary gradients injected at the feature taps of each
    /// scale (entries may be empty tensors) down to the candidate image.
    /// Parameter gradients accumulate as a side effect.
    Tensor backward_to_candidate(const std::vector<std::vector<Tensor>>& tap_grads);

    void collect(net::ParamRegistry& reg);
    const DiscriminatorConfig& config() const { return config_; }

    /// Spatial size {H,W} each scale saw in the last forward.
    std::array<int, 2> scale_input_size(int scale) const { return scale_sizes_.at(scale); }

private:
    struct Block {
        std::unique_ptr<net::Conv2d> conv;
        std::unique_ptr<net::BatchNorm2d> bn;  // absent on the first block
        std::unique_ptr<net::LeakyReLU> act;
    };

    struct ScaleNet {
        std::vector<Block> blocks;
        std::unique_ptr<net::Conv2d> out_conv;
        std::vector<int> logit_shape;

        std::vector<Tensor> forward(const Tensor& x, const net::ForwardMode& mode);
        Tensor backward(const std::vector<Tensor>& tap_grads);
        void collect(const std::string& prefix, net::ParamRegistry& reg);
    };

    DiscriminatorConfig config_;
    std::vector<ScaleNet> scale_nets_;
    std::vector<std::array<int, 2>> scale_sizes_;
};

}  // namespace recongan::models
