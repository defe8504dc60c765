#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>

#include "recongan/net/layers.hpp"

namespace recongan::net {

struct AdamConfig {
    double learning_rate = 2e-4;
    double beta1 = 0.5;
    double beta2 = 0.999;
    double eps = 1e-8;
};

class Adam {
public:
    explicit Adam(const AdamConfig& config) : config_(config) {}

    /// One update over every trainable entry; moment buffers are created lazily
    /// and keyed by parameter name.
    void step(ParamRegistry& params);

    int64_t steps() const { return t_; }

    void set_learning_rate(double lr) { config_.learning_rate = lr; }

    /// Create zero moment buffers for every trainable entry so a checkpoint
    /// can be loaded into them before the first step.
    void ensure_slots(ParamRegistry& params);

    /// Expose moments (and the step counter) for checkpointing.
    void collect(const std::string& prefix, ParamRegistry& reg);

private:
    struct Slot {
        Tensor m, v;
    };

    AdamConfig config_;
    std::unordered_map<std::string, Slot> slots_;
    int64_t t_ = 0;
    Tensor step_counter_{std::vector<int>{1}};  // serialized copy of t_
};

}  // namespace recongan::net
