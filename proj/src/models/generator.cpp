#include "recongan/models/generator.hpp"

#include <stdexcept>

namespace recongan::models {

using net::BatchNorm2d;
using net::Conv2d;
using net::ConvTranspose2d;
using net::ForwardMode;
using net::LeakyReLU;
using net::Tanh;

namespace {
constexpr float kLeakySlope = 0.2f;
}

void GeneratorConfig::validate() const {
    if (base_channels < 1) throw std::invalid_argument("GeneratorConfig: base_channels < 1");
    if (downsample_stages < 1)
        throw std::invalid_argument("GeneratorConfig: downsample_stages < 1");
    if (residual_blocks < 1) throw std::invalid_argument("GeneratorConfig: residual_blocks < 1");
    if (!(dropout_rate >= 0.0f && dropout_rate < 1.0f))
        throw std::invalid_argument("GeneratorConfig: dropout_rate must be in [0,1)");
}

ResidualBlock::ResidualBlock(int channels, float dropout_rate, uint64_t dropout_seed,
                             Rng& init_rng)
    : conv1_(channels, channels, 3, 1, 1, false),
      conv2_(channels, channels, 3, 1, 1, false),
      bn1_(channels),
      bn2_(channels),
      act1_(kLeakySlope),
      act2_(kLeakySlope),
      dropout_(dropout_rate, dropout_seed) {
    conv1_.init(init_rng);
    conv2_.init(init_rng);
}

Tensor ResidualBlock::forward(const Tensor& x, const ForwardMode& mode) {
    Tensor y = act1_.forward(bn1_.forward(conv1_.forward(x, mode), mode), mode);
    y = dropout_.forward(y, mode);
    y = act2_.forward(bn2_.forward(conv2_.forward(y, mode), mode), mode);
    add_inplace(y, x);
    return y;
}

Tensor ResidualBlock::backward(const Tensor& grad_out) {
    Tensor g = conv2_.backward(bn2_.backward(act2_.backward(grad_out)));
    g = dropout_.backward(g);
    g = conv1_.backward(bn1_.backward(act1_.backward(g)));
    add_inplace(g, grad_out);  // identity skip
    return g;
}

void ResidualBlock::collect(const std::string& prefix, net::ParamRegistry& reg) {
    conv1_.collect(prefix + "/conv1", reg);
    bn1_.collect(prefix + "/bn1", reg);
    conv2_.collect(prefix + "/conv2", reg);
    bn2_.collect(prefix + "/bn2", reg);
}

Generator::Generator(const GeneratorConfig& config, uint64_t init_seed) : config_(config) {
    config_.validate();
    Rng rng(mix_seed(init_seed, 0x67656e32ULL));  // "gen2" stream

    auto* stem = encoder_.emplace<Conv2d>("stem", 3, config_.base_channels, 7, 1, 3, false);
    stem->init(rng);
    encoder_.emplace<BatchNorm2d>("stem_bn", config_.base_channels);
    encoder_.emplace<LeakyReLU>("stem_act", kLeakySlope);

    int ch = config_.base_channels;
    for (int i = 0; i < config_.downsample_stages; ++i) {
        auto* conv =
            encoder_.emplace<Conv2d>("down" + std::to_string(i), ch, ch * 2, 3, 2, 1, false);
        conv->init(rng);
        encoder_.emplace<BatchNorm2d>("down" + std::to_string(i) + "_bn", ch * 2);
        encoder_.emplace<LeakyReLU>("down" + std::to_string(i) + "_act", kLeakySlope);
        ch *= 2;
    }

    for (int i = 0; i < config_.residual_blocks; ++i)
        trunk_.push_back(std::make_unique<ResidualBlock>(
            ch, config_.dropout_rate, mix_seed(init_seed, 0x64726f70ULL, static_cast<uint64_t>(i)),
            rng));

    for (int i = 0; i < config_.downsample_stages; ++i) {
        auto* deconv = decoder_.emplace<ConvTranspose2d>("up" + std::to_string(i), ch, ch / 2, 3,
                                                         2, 1, 1, false);
        deconv->init(rng);
        decoder_.emplace<BatchNorm2d>("up" + std::to_string(i) + "_bn", ch / 2);
        decoder_.emplace<LeakyReLU>("up" + std::to_string(i) + "_act", kLeakySlope);
        ch /= 2;
    }
    auto* head = decoder_.emplace<Conv2d>("head", ch, 3, 7, 1, 3, true);
    head->init(rng);
    decoder_.emplace<Tanh>("tanh");
}

Tensor Generator::forward(const Tensor& source, bool training, bool grad) {
    if (source.ndim() != 4 || source.dim(1) != 3)
        throw std::invalid_argument("Generator: expected {N,3,H,W}, got " + source.shape_str());
    const int stride = 1 << config_.downsample_stages;
    if (source.dim(2) % stride != 0 || source.dim(3) % stride != 0)
        throw std::invalid_argument("Generator: spatial size " + source.shape_str() +
                                    " not divisible by " + std::to_string(stride));

    const ForwardMode mode{training, grad};
    Tensor h = encoder_.forward(source, mode);
    bottleneck_shape_ = {h.dim(1), h.dim(2), h.dim(3)};
    for (auto& block : trunk_) h = block->forward(h, mode);
    return decoder_.forward(h, mode);
}

Tensor Generator::backward(const Tensor& grad_out) {
    Tensor g = decoder_.backward(grad_out);
    for (auto it = trunk_.rbegin(); it != trunk_.rend(); ++it) g = (*it)->backward(g);
    return encoder_.backward(g);
}

void Generator::collect(net::ParamRegistry& reg) {
    encoder_.collect("g/enc", reg);
    for (size_t i = 0; i < trunk_.size(); ++i)
        trunk_[i]->collect("g/res" + std::to_string(i), reg);
    decoder_.collect("g/dec", reg);
}

void Generator::reseed_dropout(uint64_t seed) {
    for (size_t i = 0; i < trunk_.size(); ++i)
        trunk_[i]->reseed_dropout(mix_seed(seed, 0x64726f70ULL, static_cast<uint64_t>(i)));
}

}  // namespace recongan::models
