#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "recongan/core/rng.hpp"
#include "recongan/core/tensor.hpp"

namespace recongan::net {

/// training: batch statistics and active dropout.
/// grad: cache activations so backward() may be called afterwards.
struct ForwardMode {
    bool training = false;
    bool grad = true;
};

inline constexpr ForwardMode kTrain{true, true};
inline constexpr ForwardMode kEval{false, false};
inline constexpr ForwardMode kEvalGrad{false, true};

struct ParamEntry {
    std::string name;
    Tensor* value = nullptr;
    Tensor* grad = nullptr;  // null for non-trainable buffers (running stats, moments)

    bool trainable() const { return grad != nullptr; }
};

class ParamRegistry {
public:
    void add(const std::string& name, Tensor* value, Tensor* grad = nullptr) {
        entries_.push_back({name, value, grad});
    }
    std::vector<ParamEntry>& entries() { return entries_; }
    const std::vector<ParamEntry>& entries() const { return entries_; }

    void zero_grads() {
        for (auto& e : entries_)
            if (e.grad) e.grad->fill(0.0f);
    }

private:
    std::vector<ParamEntry> entries_;
};

class Layer {
public:
    virtual ~Layer() = default;
    virtual Tensor forward(const Tensor& x, const ForwardMode& mode) = 0;
    /// Gradient w.r.t. the last cached forward input; accumulates parameter grads.
    virtual Tensor backward(const Tensor& grad_out) = 0;
    virtual void collect(const std::string& prefix, ParamRegistry& reg) {}
};

class Conv2d : public Layer {
public:
    Conv2d(int in_channels, int out_channels, int kernel, int stride, int pad, bool bias);

    void init(Rng& rng, float stddev = 0.02f);
    /// Frozen layers skip parameter-gradient accumulation in backward().
    void set_frozen(bool frozen) { frozen_ = frozen; }

    Tensor forward(const Tensor& x, const ForwardMode& mode) override;
    Tensor backward(const Tensor& grad_out) override;
    void collect(const std::string& prefix, ParamRegistry& reg) override;

    Tensor& weight() { return weight_; }
    Tensor& bias() { return bias_; }

private:
    int in_ = 0, out_ = 0, k_ = 1, stride_ = 1, pad_ = 0;
    bool has_bias_ = true, frozen_ = false;
    Tensor weight_, grad_weight_;  // {out, in*k*k}
    Tensor bias_, grad_bias_;      // {out}
    Tensor cols_;                  // cache {N, K, HoWo}
    int in_h_ = 0, in_w_ = 0, out_h_ = 0, out_w_ = 0;
};

class ConvTranspose2d : public Layer {
public:
    ConvTranspose2d(int in_channels, int out_channels, int kernel, int stride, int pad,
                    int output_pad, bool bias);

    void init(Rng& rng, float stddev = 0.02f);

    Tensor forward(const Tensor& x, const ForwardMode& mode) override;
    Tensor backward(const Tensor& grad_out) override;
    void collect(const std::string& prefix, ParamRegistry& reg) override;

private:
    int in_ = 0, out_ = 0, k_ = 1, stride_ = 1, pad_ = 0, outpad_ = 0;
    bool has_bias_ = true;
    Tensor weight_, grad_weight_;  // {in, out*k*k}
    Tensor bias_, grad_bias_;
    Tensor input_;
    int out_h_ = 0, out_w_ = 0;
};

/// Channel-wise batch normalization over N*H*W. Biased variance is used for
/// both normalization and the running statistics, so a single 1x1 feature map
/// (variance zero) stays finite and train/eval agree on the estimator.
class BatchNorm2d : public Layer {
public:
    explicit BatchNorm2d(int channels, float eps = 1e-5f, float momentum = 0.1f);

    Tensor forward(const Tensor& x, const ForwardMode& mode) override;
    Tensor backward(const Tensor& grad_out) override;
    void collect(const std::string& prefix, ParamRegistry& reg) override;

private:
    int ch_ = 0;
    float eps_, momentum_;
    Tensor gamma_, grad_gamma_, beta_, grad_beta_;
    Tensor running_mean_, running_var_;
    Tensor x_hat_, inv_std_;  // caches
    bool trained_forward_ = false;
};

class LeakyReLU : public Layer {
public:
    explicit LeakyReLU(float slope) : slope_(slope) {}

    Tensor forward(const Tensor& x, const ForwardMode& mode) override;
    Tensor backward(const Tensor& grad_out) override;

private:
    float slope_;
    Tensor input_;
};

class Tanh : public Layer {
public:
    Tensor forward(const Tensor& x, const ForwardMode& mode) override;
    Tensor backward(const Tensor& grad_out) override;

private:
    Tensor output_;
};

/// Inverted dropout; the layer owns its RNG so training runs are reproducible
/// from the construction seed alone.
class Dropout : public Layer {
public:
    Dropout(float rate, uint64_t seed) : rate_(rate), rng_(seed) {}

    Tensor forward(const Tensor& x, const ForwardMode& mode) override;
    Tensor backward(const Tensor& grad_out) override;
    void reseed(uint64_t seed) { rng_ = Rng(seed); }

private:
    float rate_;
    Rng rng_;
    Tensor mask_;
    bool active_ = false;
};

class AvgPool2d : public Layer {
public:
    Tensor forward(const Tensor& x, const ForwardMode& mode) override;
    Tensor backward(const Tensor& grad_out) override;

private:
    std::vector<int> in_shape_;
};

class MaxPool2d : public Layer {
public:
    Tensor forward(const Tensor& x, const ForwardMode& mode) override;
    Tensor backward(const Tensor& grad_out) override;

private:
    std::vector<int> in_shape_;
    std::vector<int32_t> argmax_;
};

/// Factor-2 average pooling as a free pair, used for the discriminator input
/// pyramid where no layer object is wanted.
Tensor avg_pool2(const Tensor& x);
Tensor avg_pool2_backward(const Tensor& grad_out, int in_h, int in_w);

class Sequential : public Layer {
public:
    Layer* add(std::string name, std::unique_ptr<Layer> layer) {
        names_.push_back(std::move(name));
        layers_.push_back(std::move(layer));
        return layers_.back().get();
    }
    template <typename T, typename... Args>
    T* emplace(std::string name, Args&&... args) {
        auto layer = std::make_unique<T>(std::forward<Args>(args)...);
        T* raw = layer.get();
        add(std::move(name), std::move(layer));
        return raw;
    }

    Tensor forward(const Tensor& x, const ForwardMode& mode) override;
    Tensor backward(const Tensor& grad_out) override;
    void collect(const std::string& prefix, ParamRegistry& reg) override;

    size_t size() const { return layers_.size(); }
    Layer* at(size_t i) { return layers_[i].get(); }

private:
    std::vector<std::string> names_;
    std::vector<std::unique_ptr<Layer>> layers_;
};

}  // namespace recongan::net
