#include "recongan/train/checkpoint.hpp"

#include <cmath>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace recongan::train {

namespace {

nlohmann::json weights_json(const losses::LossWeights& w) {
    return {
        {"lambda_fm", w.lambda_fm},
        {"lambda_vgg", w.lambda_vgg},
        {"lambda_point", w.lambda_point},
        {"point_loss_enabled", w.point_loss_enabled},
        {"adversarial_mode", losses::to_string(w.adversarial_mode)},
        {"d_aggregation", losses::to_string(w.d_aggregation)},
        {"point_mode", losses::to_string(w.point_mode)},
        {"point_normalization", losses::to_string(w.point_normalization)},
    };
}

losses::LossWeights weights_from(const nlohmann::json& j) {
    losses::LossWeights w;
    w.lambda_fm = j.value("lambda_fm", w.lambda_fm);
    w.lambda_vgg = j.value("lambda_vgg", w.lambda_vgg);
    w.lambda_point = j.value("lambda_point", w.lambda_point);
    w.point_loss_enabled = j.value("point_loss_enabled", w.point_loss_enabled);
    if (j.contains("adversarial_mode"))
        w.adversarial_mode = losses::adversarial_mode_from_string(j["adversarial_mode"]);
    if (j.contains("d_aggregation"))
        w.d_aggregation = losses::d_aggregation_from_string(j["d_aggregation"]);
    if (j.contains("point_mode")) w.point_mode = losses::point_mode_from_string(j["point_mode"]);
    if (j.contains("point_normalization"))
        w.point_normalization = losses::point_normalization_from_string(j["point_normalization"]);
    w.validate();
    return w;
}

}  // namespace

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0)) throw std::invalid_argument("TrainConfig: learning_rate <= 0");
    if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size < 1");
    const bool by_iterations = max_iterations >= 0;
    const bool by_epochs = epochs >= 0;
    if (by_iterations == by_epochs)
        throw std::invalid_argument(
            "TrainConfig: exactly one of max_iterations/epochs must be set");
    if (checkpoint_every < 0) throw std::invalid_argument("TrainConfig: checkpoint_every < 0");
    const int stride = 1 << generator.downsample_stages;
    if (image_size <= 0 || image_size % stride != 0)
        throw std::invalid_argument("TrainConfig: image_size must be a positive multiple of " +
                                    std::to_string(stride));
    generator.validate();
    discriminator.validate();
    weights.validate();
}

std::string TrainConfig::to_json() const {
    nlohmann::json j;
    j["learning_rate"] = learning_rate;
    j["adam_beta1"] = adam_beta1;
    j["adam_beta2"] = adam_beta2;
    j["batch_size"] = batch_size;
    j["max_iterations"] = max_iterations;
    j["epochs"] = epochs;
    j["seed"] = seed;
    j["checkpoint_every"] = checkpoint_every;
    j["image_size"] = image_size;
    j["linear_lr_decay"] = linear_lr_decay;
    j["generator"] = {{"base_channels", generator.base_channels},
                      {"downsample_stages", generator.downsample_stages},
                      {"residual_blocks", generator.residual_blocks},
                      {"dropout_rate", generator.dropout_rate}};
    j["discriminator"] = {{"scales", discriminator.scales},
                          {"layers", discriminator.layers},
                          {"base_channels", discriminator.base_channels}};
    j["weights"] = weights_json(weights);
    return j.dump(2);
}

TrainConfig TrainConfig::from_json(const std::string& text) {
    const nlohmann::json j = nlohmann::json::parse(text);
    TrainConfig c;
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.adam_beta1 = j.value("adam_beta1", c.adam_beta1);
    c.adam_beta2 = j.value("adam_beta2", c.adam_beta2);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.max_iterations = j.value("max_iterations", c.max_iterations);
    c.epochs = j.value("epochs", c.epochs);
    c.seed = j.value("seed", c.seed);
    c.checkpoint_every = j.value("checkpoint_every", c.checkpoint_every);
    c.image_size = j.value("image_size", c.image_size);
    c.linear_lr_decay = j.value("linear_lr_decay", c.linear_lr_decay);
    if (j.contains("generator")) {
        const auto& g = j["generator"];
        c.generator.base_channels = g.value("base_channels", c.generator.base_channels);
        c.generator.downsample_stages = g.value("downsample_stages", c.generator.downsample_stages);
        c.generator.residual_blocks = g.value("residual_blocks", c.generator.residual_blocks);
        c.generator.dropout_rate = g.value("dropout_rate", c.generator.dropout_rate);
    }
    if (j.contains("discriminator")) {
        const auto& d = j["discriminator"];
        c.discriminator.scales = d.value("scales", c.discriminator.scales);
        c.discriminator.layers = d.value("layers", c.discriminator.layers);
        c.discriminator.base_channels = d.value("base_channels", c.discriminator.base_channels);
    }
    if (j.contains("weights")) c.weights = weights_from(j["weights"]);
    return c;
}

std::string loss_weights_to_json(const losses::LossWeights& weights) {
    return weights_json(weights).dump(2);
}

losses::LossWeights loss_weights_from_json(const std::string& text) {
    return weights_from(nlohmann::json::parse(text));
}

}  // namespace recongan::train
