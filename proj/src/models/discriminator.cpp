#include "recongan/models/discriminator.hpp"

#include <algorithm>
#include <stdexcept>

namespace recongan::models {

using net::BatchNorm2d;
using net::Conv2d;
using net::ForwardMode;
using net::LeakyReLU;

namespace {

constexpr float kLeakySlope = 0.2f;
constexpr int kMaxChannels = 512;

Tensor concat_pair(const Tensor& source, const Tensor& candidate) {
    const int N = source.dim(0), H = source.dim(2), W = source.dim(3);
    Tensor out({N, 6, H, W});
    const int64_t plane = static_cast<int64_t>(3) * H * W;
    for (int n = 0; n < N; ++n) {
        std::copy_n(source.data() + n * plane, plane, out.data() + n * 2 * plane);
        std::copy_n(candidate.data() + n * plane, plane, out.data() + n * 2 * plane + plane);
    }
    return out;
}

Tensor candidate_slice(const Tensor& pair_grad) {
    const int N = pair_grad.dim(0), H = pair_grad.dim(2), W = pair_grad.dim(3);
    Tensor out({N, 3, H, W});
    const int64_t plane = static_cast<int64_t>(3) * H * W;
    for (int n = 0; n < N; ++n)
        std::copy_n(pair_grad.data() + n * 2 * plane + plane, plane, out.data() + n * plane);
    return out;
}

}  // namespace

void DiscriminatorConfig::validate() const {
    if (scales != 3) throw std::invalid_argument("DiscriminatorConfig: scales is fixed at 3");
    if (layers < 2) throw std::invalid_argument("DiscriminatorConfig: layers must be >= 2");
    if (base_channels < 1) throw std::invalid_argument("DiscriminatorConfig: base_channels < 1");
}

DiscriminatorBank::DiscriminatorBank(const DiscriminatorConfig& config, uint64_t init_seed)
    : config_(config) {
    config_.validate();
    scale_nets_.resize(static_cast<size_t>(config_.scales));
    scale_sizes_.assign(static_cast<size_t>(config_.scales), {0, 0});

    for (int s = 0; s < config_.scales; ++s) {
        Rng rng(mix_seed(init_seed, 0x64697363ULL, static_cast<uint64_t>(s)));  // "disc"
        ScaleNet& netk = scale_nets_[static_cast<size_t>(s)];
        int ch_in = 6;
        for (int i = 0; i < config_.layers; ++i) {
            const int ch_out = std::min(kMaxChannels, config_.base_channels << i);
            Block block;
            block.conv = std::make_unique<Conv2d>(ch_in, ch_out, 4, 2, 1, i == 0);
            block.conv->init(rng);
            if (i > 0) block.bn = std::make_unique<BatchNorm2d>(ch_out);
            block.act = std::make_unique<LeakyReLU>(kLeakySlope);
            netk.blocks.push_back(std::move(block));
            ch_in = ch_out;
        }
        netk.out_conv = std::make_unique<Conv2d>(ch_in, 1, 4, 1, 2, true);
        netk.out_conv->init(rng);
    }
}

std::vector<Tensor> DiscriminatorBank::ScaleNet::forward(const Tensor& x,
                                                         const ForwardMode& mode) {
    std::vector<Tensor> feats;
    feats.reserve(blocks.size() + 1);
    Tensor cur = x;
    for (auto& block : blocks) {
        cur = block.conv->forward(cur, mode);
        if (block.bn) cur = block.bn->forward(cur, mode);
        cur = block.act->forward(cur, mode);
        feats.push_back(cur);
    }
    feats.push_back(out_conv->forward(cur, mode));
    logit_shape = feats.back().shape();
    return feats;
}

Tensor DiscriminatorBank::ScaleNet::backward(const std::vector<Tensor>& tap_grads) {
    if (tap_grads.size() != blocks.size() + 1)
        throw std::invalid_argument("ScaleNet::backward: expected " +
                                    std::to_string(blocks.size() + 1) + " tap gradients");

    Tensor cur;
    if (tap_grads.back().empty()) {
        Tensor zero(logit_shape);
        cur = out_conv->backward(zero);
    } else {
        cur = out_conv->backward(tap_grads.back());
    }
    for (size_t i = blocks.size(); i-- > 0;) {
        if (!tap_grads[i].empty()) add_inplace(cur, tap_grads[i]);
        Block& block = blocks[i];
        cur = block.act->backward(cur);
        if (block.bn) cur = block.bn->backward(cur);
        cur = block.conv->backward(cur);
    }
    return cur;
}

void DiscriminatorBank::ScaleNet::collect(const std::string& prefix, net::ParamRegistry& reg) {
    for (size_t i = 0; i < blocks.size(); ++i) {
        blocks[i].conv->collect(prefix + "/conv" + std::to_string(i), reg);
        if (blocks[i].bn) blocks[i].bn->collect(prefix + "/bn" + std::to_string(i), reg);
    }
    out_conv->collect(prefix + "/out", reg);
}

std::vector<ScaleFeatures> DiscriminatorBank::forward(const Tensor& source,
                                                      const Tensor& candidate, bool training,
                                                      bool grad) {
    check_same_shape(source, candidate, "DiscriminatorBank");
    if (source.ndim() != 4 || source.dim(1) != 3)
        throw std::invalid_argument("DiscriminatorBank: expected {N,3,H,W} pair");

    const ForwardMode mode{training, grad};
    std::vector<ScaleFeatures> out;
    out.reserve(static_cast<size_t>(config_.scales));
    Tensor pyramid = concat_pair(source, candidate);
    for (int s = 0; s < config_.scales; ++s) {
        if (s > 0) pyramid = net::avg_pool2(pyramid);
        scale_sizes_[static_cast<size_t>(s)] = {pyramid.dim(2), pyramid.dim(3)};
        ScaleFeatures sf;
        sf.features = scale_nets_[static_cast<size_t>(s)].forward(pyramid, mode);
        out.push_back(std::move(sf));
    }
    return out;
}

Tensor DiscriminatorBank::backward_to_candidate(
    const std::vector<std::vector<Tensor>>& tap_grads) {
    if (tap_grads.size() != scale_nets_.size())
        throw std::invalid_argument("backward_to_candidate: need gradients for every scale");

    Tensor total;
    for (size_t s = 0; s < scale_nets_.size(); ++s) {
        Tensor g = scale_nets_[s].backward(tap_grads[s]);
        for (size_t j = s; j-- > 0;)
            g = net::avg_pool2_backward(g, scale_sizes_[j][0], scale_sizes_[j][1]);
        if (total.empty())
            total = std::move(g);
        else
            add_inplace(total, g);
    }
    return candidate_slice(total);
}

void DiscriminatorBank::collect(net::ParamRegistry& reg) {
    for (size_t s = 0; s < scale_nets_.size(); ++s)
        scale_nets_[s].collect("d/k" + std::to_string(s), reg);
}

}  // namespace recongan::models
