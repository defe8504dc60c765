#pragma once

#include <cstdint>
#include <string>

#include "recongan/losses/losses.hpp"
#include "recongan/models/discriminator.hpp"
#include "recongan/models/generator.hpp"

namespace recongan::train {

inline constexpr int kCheckpointVersion = 1;

struct TrainConfig {
    double learning_rate = 2e-4;
    double adam_beta1 = 0.5;
    double adam_beta2 = 0.999;
    int batch_size = 1;
    int64_t max_iterations = -1;  // exactly one of max_iterations/epochs is set (>= 0)
    int64_t epochs = -1;
    uint64_t seed = 0;
    int64_t checkpoint_every = 1000;  // 0 disables periodic checkpoints
    int image_size = 256;
    bool linear_lr_decay = false;
    models::GeneratorConfig generator;
    models::DiscriminatorConfig discriminator;
    losses::LossWeights weights;

    void validate() const;
    std::string to_json() const;
    static TrainConfig from_json(const std::string& text);
};

std::string loss_weights_to_json(const losses::LossWeights& weights);
losses::LossWeights loss_weights_from_json(const std::string& text);

}  // namespace recongan::train
