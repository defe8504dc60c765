#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "recongan/net/layers.hpp"

namespace recongan::models {

/// Residual encoder-decoder translation network: 7x7 stem, two stride-2
/// downsampling convolutions doubling channels, a trunk of residual blocks,
/// two stride-2 transposed convolutions, and a 7x7 tanh output head.
struct GeneratorConfig {
    int base_channels = 64;
    int downsample_stages = 2;
    int residual_blocks = 9;
    float dropout_rate = 0.5f;

    void validate() const;
    int bottleneck_channels() const { return base_channels << downsample_stages; }
};

/// One trunk unit: two 3x3 convolutions with batch norm and leaky ReLU,
/// dropout between them, identity skip around the pair.
class ResidualBlock : public net::Layer {
public:
    ResidualBlock(int channels, float dropout_rate, uint64_t dropout_seed, Rng& init_rng);

    Tensor forward(const Tensor& x, const net::ForwardMode& mode) override;
    Tensor backward(const Tensor& grad_out) override;
    void collect(const std::string& prefix, net::ParamRegistry& reg) override;

    void reseed_dropout(uint64_t seed) { dropout_.reseed(seed); }
    net::Conv2d& conv1() { return conv1_; }
    net::Conv2d& conv2() { return conv2_; }

private:
    net::Conv2d conv1_, conv2_;
    net::BatchNorm2d bn1_, bn2_;
    net::LeakyReLU act1_, act2_;
    net::Dropout dropout_;
};

class Generator {
public:
    Generator(const GeneratorConfig& config, uint64_t init_seed);

    /// Input {N,3,H,W} with H and W divisible by 2^downsample_stages; output
    /// has the same shape with values in [-1,1].
    Tensor forward(const Tensor& source, bool training, bool grad = true);
    Tensor backward(const Tensor& grad_out);

    void collect(net::ParamRegistry& reg);
    const GeneratorConfig& config() const { return config_; }

    /// {C,H,W} of the trunk input recorded by the last forward.
    const std::vector<int>& bottleneck_shape() const { return bottleneck_shape_; }

    void reseed_dropout(uint64_t seed);

private:
    GeneratorConfig config_;
    net::Sequential encoder_;
    std::vector<std::unique_ptr<ResidualBlock>> trunk_;
    net::Sequential decoder_;
    std::vector<int> bottleneck_shape_;
};

}  // namespace recongan::models
