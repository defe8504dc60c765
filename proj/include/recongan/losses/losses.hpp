#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "recongan/corruption/corruption.hpp"
#include "recongan/losses/perceptual.hpp"
#include "recongan/models/discriminator.hpp"

namespace recongan::losses {

enum class AdversarialMode { vanilla_log, least_squares };
enum class DAggregation { sum, max };
enum class PointLossMode { l2, l1, none };
enum class PointNormalization { mean, sum };

const char* to_string(AdversarialMode mode);
const char* to_string(DAggregation agg);
const char* to_string(PointLossMode mode);
const char* to_string(PointNormalization norm);
AdversarialMode adversarial_mode_from_string(const std::string& s);
DAggregation d_aggregation_from_string(const std::string& s);
PointLossMode point_mode_from_string(const std::string& s);
PointNormalization point_normalization_from_string(const std::string& s);

struct LossWeights {
    double lambda_fm = 10.0;
    double lambda_vgg = 10.0;
    double lambda_point = 10.0;
    bool point_loss_enabled = true;
    AdversarialMode adversarial_mode = AdversarialMode::vanilla_log;
    DAggregation d_aggregation = DAggregation::sum;
    PointLossMode point_mode = PointLossMode::l2;
    PointNormalization point_normalization = PointNormalization::mean;

    void validate() const;  // finite, non-negative weights
};

struct LossBreakdown {
    double adv_g = 0.0;
    double adv_d = 0.0;
    double fm = 0.0;
    double vgg = 0.0;
    double point = 0.0;
    double total_g = 0.0;
};

/// Raised when a loss component turns non-finite; carries the component name.
class numeric_error : public std::runtime_error {
public:
    numeric_error(const std::string& component, const std::string& message)
        : std::runtime_error(message), component_(component) {}
    const std::string& component() const { return component_; }

private:
    std::string component_;
};

// ---------------------------------------------------------------------------
// Adversarial objective over the three scale logit maps. The discriminator
// trains on the sum of the per-scale losses; the generator term aggregates
// per-scale non-saturating losses by sum or by max.

std::pair<double, double> adversarial_losses(const std::vector<Tensor>& real_logits,
                                             const std::vector<Tensor>& fake_logits,
                                             AdversarialMode mode, DAggregation aggregation);

struct AdvDGrads {
    double loss = 0.0;
    std::vector<Tensor> grad_real;
    std::vector<Tensor> grad_fake;
};
AdvDGrads adversarial_d_with_grad(const std::vector<Tensor>& real_logits,
                                  const std::vector<Tensor>& fake_logits, AdversarialMode mode);

/// The two halves of the discriminator loss separately, so each can be
/// backpropagated right after its own forward pass.
struct AdvHalf {
    double loss = 0.0;
    std::vector<Tensor> grads;
};
AdvHalf adversarial_d_real_half(const std::vector<Tensor>& real_logits, AdversarialMode mode);
AdvHalf adversarial_d_fake_half(const std::vector<Tensor>& fake_logits, AdversarialMode mode);

struct AdvGGrads {
    double loss = 0.0;
    std::vector<Tensor> grad_fake;
};
AdvGGrads adversarial_g_with_grad(const std::vector<Tensor>& fake_logits, AdversarialMode mode,
                                  DAggregation aggregation);

// ---------------------------------------------------------------------------
// Feature matching: sum over scales and layers of the per-element L1 distance
// (1/N_i weights, N_i = per-sample element count of layer i), batch-averaged.

double feature_matching_loss(const std::vector<models::ScaleFeatures>& real_feats,
                             const std::vector<models::ScaleFeatures>& fake_feats);

/// Same sum; also accumulates grad_scale * d(loss)/d(fake features) into
/// tap_grads (created on demand, sized [scales][T]).
double feature_matching_with_grad(const std::vector<models::ScaleFeatures>& real_feats,
                                  const std::vector<models::ScaleFeatures>& fake_feats,
                                  std::vector<std::vector<Tensor>>& tap_grads, double grad_scale);

// ---------------------------------------------------------------------------
// Perceptual distance over frozen extractor taps (1/M_i weights), scaled by
// lambda, batch-averaged.

double perceptual_loss(const Tensor& real, const Tensor& fake, FeatureExtractor& extractor,
                       double lambda);

/// Accumulates grad_scale * d(loss)/d(fake) into grad_accum if non-null.
double perceptual_with_grad(const Tensor& real, const Tensor& fake, FeatureExtractor& extractor,
                            double lambda, Tensor* grad_accum, double grad_scale);

// ---------------------------------------------------------------------------
// Corresponding point loss: squared (or absolute) difference between the
// source and the generated image at retained pixels only, mean over the kept
// pixel-channel count by default.

double corresponding_point_loss(const corruption::CorruptedSample& sample,
                                const Tensor& generated);

double point_loss(const std::vector<const corruption::Mask*>& masks, const Tensor& source_batch,
                  const Tensor& generated_batch, PointLossMode mode, PointNormalization norm,
                  Tensor* grad_accum, double grad_scale);

// ---------------------------------------------------------------------------

struct LossComponents {
    double adv_g = 0.0;
    double adv_d = 0.0;
    double fm = 0.0;
    double vgg = 0.0;
    double point = 0.0;
};

/// total_g = adv_g + lambda_fm*fm + lambda_vgg*vgg (+ lambda_point*point when
/// enabled). Throws numeric_error naming the first non-finite component.
LossBreakdown total_generator_objective(const LossComponents& parts, const LossWeights& weights);

}  // namespace recongan::losses
