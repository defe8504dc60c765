#pragma once

#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "recongan/data/dataset.hpp"
#include "recongan/net/adam.hpp"
#include "recongan/train/checkpoint.hpp"

namespace recongan::train {

struct SampleBatch {
    Tensor source;  // {N,3,H,W}
    Tensor real;    // {N,3,H,W}
    std::vector<corruption::Mask> masks;
};

SampleBatch make_batch(data::SampleStream& stream, int64_t epoch_size, int64_t global_index,
                       int count);

/// Alternating optimization: one discriminator Adam step on the summed
/// three-scale loss (generator output detached), then one generator step on
/// the combined objective.
class Trainer {
public:
    Trainer(const TrainConfig& config, std::shared_ptr<losses::FeatureExtractor> extractor);

    losses::LossBreakdown train_step(const SampleBatch& batch);

    /// Writes <path_base>.bin (parameters + optimizer moments) and
    /// <path_base>.json (manifest: version, iteration, config snapshot).
    void save_checkpoint(const std::string& path_base);

    /// Restores parameters, moments and the iteration counter. Refuses on a
    /// version mismatch; differing loss weights only warn, current config wins.
    void load_checkpoint(const std::string& path_base);

    /// Inference-mode generator forward.
    Tensor reconstruct(const Tensor& source_batch);

    models::Generator& generator() { return generator_; }
    models::DiscriminatorBank& discriminator() { return discriminator_; }
    const TrainConfig& config() const { return config_; }
    int64_t iteration() const { return iteration_; }

    /// Linear learning-rate decay hook; factor in (0,1].
    void set_lr_factor(double factor);

private:
    TrainConfig config_;
    std::shared_ptr<losses::FeatureExtractor> extractor_;
    models::Generator generator_;
    models::DiscriminatorBank discriminator_;
    net::ParamRegistry g_params_, d_params_;
    net::Adam adam_g_, adam_d_;
    int64_t iteration_ = 0;
};

struct TrainResult {
    std::string final_checkpoint;  // path base, without extension
    int64_t iterations = 0;
};

/// Runs the loop to termination: losses.csv, periodic checkpoints and sample
/// reconstruction grids in out_dir. `trainer` may already hold a restored
/// checkpoint; iteration numbering then continues where it left off.
TrainResult train_loop(Trainer& trainer, data::SampleStream& stream, const std::string& out_dir,
                       std::ostream* progress = nullptr);

}  // namespace recongan::train
