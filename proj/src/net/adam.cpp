#include "recongan/net/adam.hpp"

#include <cmath>

namespace recongan::net {

void Adam::step(ParamRegistry& params) {
    t_ = static_cast<int64_t>(step_counter_[0]);  // may have been overwritten by a checkpoint load
    ++t_;
    step_counter_[0] = static_cast<float>(t_);

    const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
    const float lr_t = static_cast<float>(config_.learning_rate * std::sqrt(bc2) / bc1);
    const float b1 = static_cast<float>(config_.beta1);
    const float b2 = static_cast<float>(config_.beta2);
    const float eps = static_cast<float>(config_.eps);

    for (auto& entry : params.entries()) {
        if (!entry.trainable()) continue;
        Slot& slot = slots_[entry.name];
        if (slot.m.empty()) {
            slot.m = Tensor::zeros_like(*entry.value);
            slot.v = Tensor::zeros_like(*entry.value);
        }
        float* w = entry.value->data();
        const float* g = entry.grad->data();
        float* m = slot.m.data();
        float* v = slot.v.data();
        const int64_t n = entry.value->size();
        for (int64_t i = 0; i < n; ++i) {
            m[i] = b1 * m[i] + (1.0f - b1) * g[i];
            v[i] = b2 * v[i] + (1.0f - b2) * g[i] * g[i];
            w[i] -= lr_t * m[i] / (std::sqrt(v[i]) + eps);
        }
    }
}

void Adam::ensure_slots(ParamRegistry& params) {
    for (auto& entry : params.entries()) {
        if (!entry.trainable()) continue;
        Slot& slot = slots_[entry.name];
        if (slot.m.empty()) {
            slot.m = Tensor::zeros_like(*entry.value);
            slot.v = Tensor::zeros_like(*entry.value);
        }
    }
}

void Adam::collect(const std::string& prefix, ParamRegistry& reg) {
    reg.add(prefix + "/t", &step_counter_);
    for (auto& [name, slot] : slots_) {
        reg.add(prefix + "/m/" + name, &slot.m);
        reg.add(prefix + "/v/" + name, &slot.v);
    }
}

}  // namespace recongan::net
