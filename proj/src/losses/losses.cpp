#include "recongan/losses/losses.hpp"

#include <algorithm>
#include <cmath>

namespace recongan::losses {

namespace {

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::fabs(x))); }
double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void check_scale_list(const std::vector<Tensor>& logits, const char* what) {
    if (logits.size() != 3)
        throw std::invalid_argument(std::string(what) + ": expected 3 scale logit maps, got " +
                                    std::to_string(logits.size()));
}

struct ScaleTerm {
    double loss = 0.0;
    Tensor grad;  // d(loss)/d(logits)
};

// Mean-over-map discriminator and generator terms for one scale.
ScaleTerm d_term_real(const Tensor& z, AdversarialMode mode) {
    ScaleTerm t;
    t.grad = Tensor::zeros_like(z);
    const double inv_n = 1.0 / static_cast<double>(z.size());
    double acc = 0.0;
    for (int64_t i = 0; i < z.size(); ++i) {
        const double v = z[i];
        if (mode == AdversarialMode::vanilla_log) {
            acc += softplus(-v);                                        // -log sigma(z)
            t.grad[i] = static_cast<float>((sigmoid(v) - 1.0) * inv_n);
        } else {
            acc += 0.5 * (v - 1.0) * (v - 1.0);
            t.grad[i] = static_cast<float>((v - 1.0) * inv_n);
        }
    }
    t.loss = acc * inv_n;
    return t;
}

ScaleTerm d_term_fake(const Tensor& z, AdversarialMode mode) {
    ScaleTerm t;
    t.grad = Tensor::zeros_like(z);
    const double inv_n = 1.0 / static_cast<double>(z.size());
    double acc = 0.0;
    for (int64_t i = 0; i < z.size(); ++i) {
        const double v = z[i];
        if (mode == AdversarialMode::vanilla_log) {
            acc += softplus(v);                                         // -log(1 - sigma(z))
            t.grad[i] = static_cast<float>(sigmoid(v) * inv_n);
        } else {
            acc += 0.5 * v * v;
            t.grad[i] = static_cast<float>(v * inv_n);
        }
    }
    t.loss = acc * inv_n;
    return t;
}

// Non-saturating generator term.
ScaleTerm g_term(const Tensor& z, AdversarialMode mode) {
    ScaleTerm t;
    t.grad = Tensor::zeros_like(z);
    const double inv_n = 1.0 / static_cast<double>(z.size());
    double acc = 0.0;
    for (int64_t i = 0; i < z.size(); ++i) {
        const double v = z[i];
        if (mode == AdversarialMode::vanilla_log) {
            acc += softplus(-v);
            t.grad[i] = static_cast<float>((sigmoid(v) - 1.0) * inv_n);
        } else {
            acc += (v - 1.0) * (v - 1.0);
            t.grad[i] = static_cast<float>(2.0 * (v - 1.0) * inv_n);
        }
    }
    t.loss = acc * inv_n;
    return t;
}

}  // namespace

const char* to_string(AdversarialMode mode) {
    return mode == AdversarialMode::vanilla_log ? "vanilla_log" : "least_squares";
}
const char* to_string(DAggregation agg) { return agg == DAggregation::sum ? "sum" : "max"; }
const char* to_string(PointLossMode mode) {
    switch (mode) {
        case PointLossMode::l2: return "l2";
        case PointLossMode::l1: return "l1";
        case PointLossMode::none: return "none";
    }
    return "unknown";
}
const char* to_string(PointNormalization norm) {
    return norm == PointNormalization::mean ? "mean" : "sum";
}

AdversarialMode adversarial_mode_from_string(const std::string& s) {
    if (s == "vanilla_log") return AdversarialMode::vanilla_log;
    if (s == "least_squares") return AdversarialMode::least_squares;
    throw std::invalid_argument("unknown adversarial mode: " + s);
}
DAggregation d_aggregation_from_string(const std::string& s) {
    if (s == "sum") return DAggregation::sum;
    if (s == "max") return DAggregation::max;
    throw std::invalid_argument("unknown discriminator aggregation: " + s);
}
PointLossMode point_mode_from_string(const std::string& s) {
    if (s == "l2") return PointLossMode::l2;
    if (s == "l1") return PointLossMode::l1;
    if (s == "none") return PointLossMode::none;
    throw std::invalid_argument("unknown point loss mode: " + s);
}
PointNormalization point_normalization_from_string(const std::string& s) {
    if (s == "mean") return PointNormalization::mean;
    if (s == "sum") return PointNormalization::sum;
    throw std::invalid_argument("unknown point normalization: " + s);
}

void LossWeights::validate() const {
    for (double v : {lambda_fm, lambda_vgg, lambda_point})
        if (!(std::isfinite(v) && v >= 0.0))
            throw std::invalid_argument("LossWeights: weights must be finite and non-negative");
}

AdvHalf adversarial_d_real_half(const std::vector<Tensor>& real_logits, AdversarialMode mode) {
    check_scale_list(real_logits, "adversarial_d");
    AdvHalf out;
    for (const Tensor& z : real_logits) {
        ScaleTerm t = d_term_real(z, mode);
        out.loss += t.loss;
        out.grads.push_back(std::move(t.grad));
    }
    return out;
}

AdvHalf adversarial_d_fake_half(const std::vector<Tensor>& fake_logits, AdversarialMode mode) {
    check_scale_list(fake_logits, "adversarial_d");
    AdvHalf out;
    for (const Tensor& z : fake_logits) {
        ScaleTerm t = d_term_fake(z, mode);
        out.loss += t.loss;
        out.grads.push_back(std::move(t.grad));
    }
    return out;
}

AdvDGrads adversarial_d_with_grad(const std::vector<Tensor>& real_logits,
                                  const std::vector<Tensor>& fake_logits, AdversarialMode mode) {
    check_scale_list(real_logits, "adversarial_d");
    check_scale_list(fake_logits, "adversarial_d");
    for (size_t k = 0; k < 3; ++k)
        check_same_shape(real_logits[k], fake_logits[k], "adversarial_d");
    AdvDGrads out;
    AdvHalf real = adversarial_d_real_half(real_logits, mode);
    AdvHalf fake = adversarial_d_fake_half(fake_logits, mode);
    out.loss = real.loss + fake.loss;
    out.grad_real = std::move(real.grads);
    out.grad_fake = std::move(fake.grads);
    return out;
}

AdvGGrads adversarial_g_with_grad(const std::vector<Tensor>& fake_logits, AdversarialMode mode,
                                  DAggregation aggregation) {
    check_scale_list(fake_logits, "adversarial_g");
    std::vector<ScaleTerm> terms;
    terms.reserve(3);
    for (const Tensor& z : fake_logits) terms.push_back(g_term(z, mode));

    AdvGGrads out;
    if (aggregation == DAggregation::sum) {
        for (auto& t : terms) {
            out.loss += t.loss;
            out.grad_fake.push_back(std::move(t.grad));
        }
    } else {
        size_t best = 0;
        for (size_t k = 1; k < terms.size(); ++k)
            if (terms[k].loss > terms[best].loss) best = k;
        out.loss = terms[best].loss;
        for (size_t k = 0; k < terms.size(); ++k)
            out.grad_fake.push_back(k == best ? std::move(terms[k].grad)
                                              : Tensor::zeros_like(fake_logits[k]));
    }
    return out;
}

std::pair<double, double> adversarial_losses(const std::vector<Tensor>& real_logits,
                                             const std::vector<Tensor>& fake_logits,
                                             AdversarialMode mode, DAggregation aggregation) {
    const double adv_d = adversarial_d_with_grad(real_logits, fake_logits, mode).loss;
    const double adv_g = adversarial_g_with_grad(fake_logits, mode, aggregation).loss;
    return {adv_d, adv_g};
}

namespace {

void check_feature_structure(const std::vector<models::ScaleFeatures>& real,
                             const std::vector<models::ScaleFeatures>& fake) {
    if (real.size() != fake.size())
        throw std::invalid_argument("feature_matching: scale count mismatch");
    for (size_t k = 0; k < real.size(); ++k) {
        if (real[k].features.size() != fake[k].features.size())
            throw std::invalid_argument("feature_matching: layer count mismatch at scale " +
                                        std::to_string(k));
        for (size_t i = 0; i < real[k].features.size(); ++i)
            check_same_shape(real[k].features[i], fake[k].features[i], "feature_matching");
    }
}

}  // namespace

double feature_matching_loss(const std::vector<models::ScaleFeatures>& real_feats,
                             const std::vector<models::ScaleFeatures>& fake_feats) {
    check_feature_structure(real_feats, fake_feats);
    double loss = 0.0;
    for (size_t k = 0; k < real_feats.size(); ++k) {
        for (size_t i = 0; i < real_feats[k].features.size(); ++i) {
            const Tensor& r = real_feats[k].features[i];
            const Tensor& f = fake_feats[k].features[i];
            const int batch = r.dim(0);
            const double per_sample = static_cast<double>(r.size() / batch);
            double l1 = 0.0;
            for (int64_t j = 0; j < r.size(); ++j) l1 += std::fabs(r[j] - f[j]);
            loss += l1 / (per_sample * batch);
        }
    }
    return loss;
}

double feature_matching_with_grad(const std::vector<models::ScaleFeatures>& real_feats,
                                  const std::vector<models::ScaleFeatures>& fake_feats,
                                  std::vector<std::vector<Tensor>>& tap_grads,
                                  double grad_scale) {
    check_feature_structure(real_feats, fake_feats);
    if (tap_grads.size() != fake_feats.size()) tap_grads.resize(fake_feats.size());

    double loss = 0.0;
    for (size_t k = 0; k < real_feats.size(); ++k) {
        if (tap_grads[k].size() != fake_feats[k].features.size())
            tap_grads[k].resize(fake_feats[k].features.size());
        for (size_t i = 0; i < real_feats[k].features.size(); ++i) {
            const Tensor& r = real_feats[k].features[i];
            const Tensor& f = fake_feats[k].features[i];
            const int batch = r.dim(0);
            const double inv = 1.0 / (static_cast<double>(r.size() / batch) * batch);
            Tensor& g = tap_grads[k][i];
            if (g.empty()) g = Tensor::zeros_like(f);
            double l1 = 0.0;
            const float gstep = static_cast<float>(grad_scale * inv);
            for (int64_t j = 0; j < r.size(); ++j) {
                const double d = static_cast<double>(f[j]) - r[j];
                l1 += std::fabs(d);
                if (d > 0.0)
                    g[j] += gstep;
                else if (d < 0.0)
                    g[j] -= gstep;
            }
            loss += l1 * inv;
        }
    }
    return loss;
}

double perceptual_loss(const Tensor& real, const Tensor& fake, FeatureExtractor& extractor,
                       double lambda) {
    return perceptual_with_grad(real, fake, extractor, lambda, nullptr, 0.0);
}

double perceptual_with_grad(const Tensor& real, const Tensor& fake, FeatureExtractor& extractor,
                            double lambda, Tensor* grad_accum, double grad_scale) {
    check_same_shape(real, fake, "perceptual_loss");
    if (lambda == 0.0 && grad_accum == nullptr) return 0.0;

    const std::vector<Tensor> real_taps = extractor.features(real, false);
    const std::vector<Tensor> fake_taps = extractor.features(fake, grad_accum != nullptr);

    double loss = 0.0;
    std::vector<Tensor> tap_grads(fake_taps.size());
    for (size_t i = 0; i < fake_taps.size(); ++i) {
        const Tensor& r = real_taps[i];
        const Tensor& f = fake_taps[i];
        const int batch = f.dim(0);
        const double inv = 1.0 / (static_cast<double>(f.size() / batch) * batch);
        double l1 = 0.0;
        if (grad_accum != nullptr) {
            tap_grads[i] = Tensor::zeros_like(f);
            const float gstep = static_cast<float>(grad_scale * lambda * inv);
            for (int64_t j = 0; j < f.size(); ++j) {
                const double d = static_cast<double>(f[j]) - r[j];
                l1 += std::fabs(d);
                if (d > 0.0)
                    tap_grads[i][j] = gstep;
                else if (d < 0.0)
                    tap_grads[i][j] = -gstep;
            }
        } else {
            for (int64_t j = 0; j < f.size(); ++j)
                l1 += std::fabs(static_cast<double>(f[j]) - r[j]);
        }
        loss += l1 * inv;
    }

    if (grad_accum != nullptr) add_inplace(*grad_accum, extractor.backward(tap_grads));
    return lambda * loss;
}

double corresponding_point_loss(const corruption::CorruptedSample& sample,
                                const Tensor& generated) {
    check_same_shape(sample.real, generated, "corresponding_point_loss");
    const std::vector<const corruption::Mask*> masks{&sample.mask};
    const Tensor src = sample.source.reshaped({1, 3, sample.source.dim(1), sample.source.dim(2)});
    const Tensor gen = generated.reshaped({1, 3, generated.dim(1), generated.dim(2)});
    return point_loss(masks, src, gen, PointLossMode::l2, PointNormalization::mean, nullptr, 0.0);
}

double point_loss(const std::vector<const corruption::Mask*>& masks, const Tensor& source_batch,
                  const Tensor& generated_batch, PointLossMode mode, PointNormalization norm,
                  Tensor* grad_accum, double grad_scale) {
    if (mode == PointLossMode::none) return 0.0;
    check_same_shape(source_batch, generated_batch, "point_loss");
    const int N = source_batch.dim(0), H = source_batch.dim(2), W = source_batch.dim(3);
    if (static_cast<size_t>(N) != masks.size())
        throw std::invalid_argument("point_loss: one mask per batch item required");

    int64_t kept_total = 0;
    for (const auto* m : masks) {
        if (m->height != H || m->width != W)
            throw std::invalid_argument("point_loss: mask size mismatch");
        kept_total += m->kept_count();
    }
    if (kept_total == 0) return 0.0;

    const double denom =
        norm == PointNormalization::mean ? static_cast<double>(kept_total) * 3.0 : 1.0;
    double acc = 0.0;
    for (int n = 0; n < N; ++n) {
        const corruption::Mask& m = *masks[static_cast<size_t>(n)];
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x) {
                if (!m.at(y, x)) continue;
                for (int c = 0; c < 3; ++c) {
                    const double d = static_cast<double>(generated_batch.at4(n, c, y, x)) -
                                     source_batch.at4(n, c, y, x);
                    if (mode == PointLossMode::l2) {
                        acc += d * d;
                        if (grad_accum != nullptr)
                            grad_accum->at4(n, c, y, x) +=
                                static_cast<float>(grad_scale * 2.0 * d / denom);
                    } else {
                        acc += std::fabs(d);
                        if (grad_accum != nullptr && d != 0.0)
                            grad_accum->at4(n, c, y, x) +=
                                static_cast<float>(grad_scale * (d > 0.0 ? 1.0 : -1.0) / denom);
                    }
                }
            }
    }
    return acc / denom;
}

LossBreakdown total_generator_objective(const LossComponents& parts, const LossWeights& weights) {
    weights.validate();
    const std::pair<const char*, double> named[] = {
        {"adv_g", parts.adv_g}, {"adv_d", parts.adv_d}, {"fm", parts.fm},
        {"vgg", parts.vgg},     {"point", parts.point},
    };
    for (const auto& [name, value] : named)
        if (!std::isfinite(value))
            throw numeric_error(name, std::string("loss component ") + name + " is non-finite");

    LossBreakdown out;
    out.adv_g = parts.adv_g;
    out.adv_d = parts.adv_d;
    out.fm = parts.fm;
    out.vgg = parts.vgg;
    out.point = parts.point;
    out.total_g = parts.adv_g + weights.lambda_fm * parts.fm + weights.lambda_vgg * parts.vgg +
                  (weights.point_loss_enabled ? weights.lambda_point * parts.point : 0.0);
    if (!std::isfinite(out.total_g))
        throw numeric_error("total_g", "total generator objective is non-finite");
    return out;
}

}  // namespace recongan::losses
