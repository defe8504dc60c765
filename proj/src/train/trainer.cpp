#include "recongan/train/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <nlohmann/json.hpp>

#include "recongan/core/image_io.hpp"
#include "recongan/net/serialize.hpp"

namespace fs = std::filesystem;

namespace recongan::train {

using losses::LossBreakdown;

SampleBatch make_batch(data::SampleStream& stream, int64_t epoch_size, int64_t global_index,
                       int count) {
    SampleBatch batch;
    for (int j = 0; j < count; ++j) {
        const int64_t g = global_index + j;
        auto sample = stream.sample(g / epoch_size, g % epoch_size);
        const int h = sample.real.dim(1), w = sample.real.dim(2);
        if (batch.source.empty()) {
            batch.source = Tensor({count, 3, h, w});
            batch.real = Tensor({count, 3, h, w});
        }
        const int64_t plane = static_cast<int64_t>(3) * h * w;
        std::copy_n(sample.source.data(), plane, batch.source.data() + j * plane);
        std::copy_n(sample.real.data(), plane, batch.real.data() + j * plane);
        batch.masks.push_back(std::move(sample.mask));
    }
    return batch;
}

Trainer::Trainer(const TrainConfig& config, std::shared_ptr<losses::FeatureExtractor> extractor)
    : config_(config),
      extractor_(std::move(extractor)),
      generator_(config.generator, config.seed),
      discriminator_(config.discriminator, mix_seed(config.seed, 0x64735fULL)),
      adam_g_({config.learning_rate, config.adam_beta1, config.adam_beta2, 1e-8}),
      adam_d_({config.learning_rate, config.adam_beta1, config.adam_beta2, 1e-8}) {
    config_.validate();
    if (!extractor_) throw std::invalid_argument("Trainer: feature extractor required");
    generator_.collect(g_params_);
    discriminator_.collect(d_params_);
}

LossBreakdown Trainer::train_step(const SampleBatch& batch) {
    const auto& w = config_.weights;
    losses::LossComponents parts;

    // Generator forward once; the result serves the D step as a constant and
    // the G step through cached activations.
    Tensor fake = generator_.forward(batch.source, /*training=*/true, /*grad=*/true);

    auto logits_of = [](const std::vector<models::ScaleFeatures>& feats) {
        std::vector<Tensor> out;
        out.reserve(feats.size());
        for (const auto& f : feats) out.push_back(f.logits());
        return out;
    };

    // --- discriminator update (sum of the three scale losses)
    d_params_.zero_grads();
    {
        // The two halves of the loss touch disjoint forwards; each is
        // backpropagated right away so the second pass may reuse the caches.
        auto backprop_logit_grads = [&](const std::vector<models::ScaleFeatures>& feats,
                                        std::vector<Tensor> grads) {
            std::vector<std::vector<Tensor>> taps(feats.size());
            for (size_t k = 0; k < feats.size(); ++k) {
                taps[k].resize(feats[k].features.size());
                taps[k].back() = std::move(grads[k]);
            }
            discriminator_.backward_to_candidate(taps);
        };

        auto feats_real = discriminator_.forward(batch.source, batch.real, true, true);
        auto real_half =
            losses::adversarial_d_real_half(logits_of(feats_real), w.adversarial_mode);
        backprop_logit_grads(feats_real, std::move(real_half.grads));

        auto feats_fake = discriminator_.forward(batch.source, fake, true, true);
        auto fake_half =
            losses::adversarial_d_fake_half(logits_of(feats_fake), w.adversarial_mode);
        backprop_logit_grads(feats_fake, std::move(fake_half.grads));

        parts.adv_d = real_half.loss + fake_half.loss;
        adam_d_.step(d_params_);
    }

    // --- generator update
    {
        auto feats_real = discriminator_.forward(batch.source, batch.real, true, false);
        auto feats_fake = discriminator_.forward(batch.source, fake, true, true);
        auto fake_logits = logits_of(feats_fake);

        auto adv_g = losses::adversarial_g_with_grad(fake_logits, w.adversarial_mode,
                                                     w.d_aggregation);
        parts.adv_g = adv_g.loss;

        std::vector<std::vector<Tensor>> tap_grads(3);
        for (size_t k = 0; k < 3; ++k) tap_grads[k].resize(feats_fake[k].features.size());
        if (w.lambda_fm > 0.0)
            parts.fm = losses::feature_matching_with_grad(feats_real, feats_fake, tap_grads,
                                                          w.lambda_fm);
        for (size_t k = 0; k < 3; ++k) {
            if (tap_grads[k].back().empty())
                tap_grads[k].back() = std::move(adv_g.grad_fake[k]);
            else
                add_inplace(tap_grads[k].back(), adv_g.grad_fake[k]);
        }

        Tensor g_img = discriminator_.backward_to_candidate(tap_grads);

        if (w.lambda_vgg > 0.0)
            parts.vgg = losses::perceptual_with_grad(batch.real, fake, *extractor_, 1.0, &g_img,
                                                     w.lambda_vgg);
        if (w.point_loss_enabled && w.point_mode != losses::PointLossMode::none) {
            std::vector<const corruption::Mask*> masks;
            for (const auto& m : batch.masks) masks.push_back(&m);
            parts.point = losses::point_loss(masks, batch.source, fake, w.point_mode,
                                             w.point_normalization, &g_img, w.lambda_point);
        }

        const LossBreakdown breakdown = losses::total_generator_objective(parts, w);
        g_params_.zero_grads();
        generator_.backward(g_img);
        adam_g_.step(g_params_);
        ++iteration_;
        return breakdown;
    }
}

void Trainer::save_checkpoint(const std::string& path_base) {
    net::ParamRegistry reg;
    generator_.collect(reg);
    discriminator_.collect(reg);
    adam_g_.ensure_slots(g_params_);  // initial checkpoints carry zero moments
    adam_d_.ensure_slots(d_params_);
    adam_g_.collect("opt_g", reg);
    adam_d_.collect("opt_d", reg);

    nlohmann::json manifest;
    manifest["checkpoint_version"] = kCheckpointVersion;
    manifest["iteration"] = iteration_;
    manifest["seed"] = config_.seed;
    manifest["config"] = nlohmann::json::parse(config_.to_json());
    const std::string text = manifest.dump(2);

    net::save_tensors(path_base + ".bin", reg, text);
    std::ofstream side(path_base + ".json");
    if (!side) throw std::runtime_error("failed to write checkpoint manifest: " + path_base);
    side << text << "\n";
}

void Trainer::load_checkpoint(const std::string& path_base) {
    const net::TensorFile file = net::load_tensors(path_base + ".bin");
    const nlohmann::json manifest = nlohmann::json::parse(file.manifest);

    const int version = manifest.value("checkpoint_version", -1);
    if (version != kCheckpointVersion) {
        nlohmann::json current;
        current["checkpoint_version"] = kCheckpointVersion;
        current["config"] = nlohmann::json::parse(config_.to_json());
        throw std::runtime_error("checkpoint version mismatch; file manifest:\n" +
                                 manifest.dump(2) + "\nexpected:\n" + current.dump(2));
    }

    const TrainConfig stored = TrainConfig::from_json(manifest.at("config").dump());
    if (loss_weights_to_json(stored.weights) != loss_weights_to_json(config_.weights))
        std::cerr << "warning: checkpoint was written with different loss weights; "
                     "proceeding with the current configuration\n";

    net::ParamRegistry reg;
    generator_.collect(reg);
    discriminator_.collect(reg);
    adam_g_.ensure_slots(g_params_);
    adam_d_.ensure_slots(d_params_);
    adam_g_.collect("opt_g", reg);
    adam_d_.collect("opt_d", reg);
    net::restore_into(file, reg);

    iteration_ = manifest.at("iteration").get<int64_t>();
    generator_.reseed_dropout(mix_seed(config_.seed, static_cast<uint64_t>(iteration_)));
}

Tensor Trainer::reconstruct(const Tensor& source_batch) {
    return generator_.forward(source_batch, /*training=*/false, /*grad=*/false);
}

void Trainer::set_lr_factor(double factor) {
    adam_g_.set_learning_rate(config_.learning_rate * factor);
    adam_d_.set_learning_rate(config_.learning_rate * factor);
}

namespace {

void write_sample_grid(Trainer& trainer, data::SampleStream& stream, const std::string& path) {
    const int count = static_cast<int>(std::min<int64_t>(4, stream.epoch_size()));
    std::vector<Tensor> sources, recons, reals;
    for (int j = 0; j < count; ++j) {
        auto sample = stream.sample(0, j);
        const Tensor batch =
            sample.source.reshaped({1, 3, sample.source.dim(1), sample.source.dim(2)});
        Tensor recon = trainer.reconstruct(batch);
        recons.push_back(recon.reshaped({3, recon.dim(2), recon.dim(3)}));
        sources.push_back(std::move(sample.source));
        reals.push_back(std::move(sample.real));
    }
    using imageio::hstack;
    using imageio::vstack;
    imageio::save_image(path, vstack({hstack(sources), hstack(recons), hstack(reals)}));
}

std::string checkpoint_name(int64_t iteration) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "checkpoint_%06lld", static_cast<long long>(iteration));
    return buf;
}

void append_csv_row(std::ofstream& csv, int64_t iteration, const LossBreakdown& b) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%lld,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g",
                  static_cast<long long>(iteration), b.adv_d, b.adv_g, b.fm, b.vgg, b.point,
                  b.total_g);
    csv << buf << "\n";
    csv.flush();
}

}  // namespace

TrainResult train_loop(Trainer& trainer, data::SampleStream& stream, const std::string& out_dir,
                       std::ostream* progress) {
    const TrainConfig& config = trainer.config();
    config.validate();
    fs::create_directories(out_dir);

    const int64_t n = stream.epoch_size();
    if (n <= 0) throw std::invalid_argument("train_loop: empty training set");
    const int64_t steps_per_epoch = (n + config.batch_size - 1) / config.batch_size;
    const int64_t total = config.max_iterations >= 0 ? config.max_iterations
                                                     : config.epochs * steps_per_epoch;

    const bool resuming = trainer.iteration() > 0;
    std::ofstream csv(out_dir + "/losses.csv", resuming ? std::ios::app : std::ios::trunc);
    if (!csv) throw std::runtime_error("failed to open loss log in " + out_dir);
    if (!resuming) {
        csv << "iteration,adv_d,adv_g,fm,vgg,point,total_g\n";
        trainer.save_checkpoint(out_dir + "/checkpoint_initial");
    }

    auto flush_attempt = [&](const char* name) {
        try {
            trainer.save_checkpoint(out_dir + "/" + name);
        } catch (...) {
            // Flushing is best-effort while aborting.
        }
    };

    try {
        for (int64_t it = trainer.iteration(); it < total; ++it) {
            if (config.linear_lr_decay && total > 0)
                trainer.set_lr_factor(1.0 - static_cast<double>(it) / static_cast<double>(total));

            SampleBatch batch =
                make_batch(stream, n, it * config.batch_size, config.batch_size);
            LossBreakdown breakdown;
            try {
                breakdown = trainer.train_step(batch);
            } catch (const losses::numeric_error& e) {
                throw losses::numeric_error(
                    e.component(), std::string(e.what()) + " at iteration " +
                                       std::to_string(trainer.iteration() + 1));
            }
            append_csv_row(csv, trainer.iteration(), breakdown);
            if (progress && (trainer.iteration() % 50 == 0 || trainer.iteration() == total))
                *progress << "iter " << trainer.iteration() << "/" << total << " total_g "
                          << breakdown.total_g << " adv_d " << breakdown.adv_d << "\n";

            if (config.checkpoint_every > 0 && trainer.iteration() % config.checkpoint_every == 0 &&
                trainer.iteration() < total) {
                const std::string base = out_dir + "/" + checkpoint_name(trainer.iteration());
                trainer.save_checkpoint(base);
                write_sample_grid(trainer, stream, base + "_samples.png");
            }
        }
    } catch (const losses::numeric_error&) {
        flush_attempt("checkpoint_abort");
        throw;
    } catch (const std::exception&) {
        flush_attempt("checkpoint_abort");
        throw;
    }

    const std::string final_base = out_dir + "/checkpoint_final";
    trainer.save_checkpoint(final_base);
    if (stream.epoch_size() > 0) write_sample_grid(trainer, stream, final_base + "_samples.png");
    return {final_base, trainer.iteration()};
}

}  // namespace recongan::train
