#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "gradcheck.hpp"
#include "recongan/losses/losses.hpp"
#include "testutil.hpp"

using namespace recongan;
using namespace recongan::losses;
using models::ScaleFeatures;
using testutil::random_batch;

namespace {

std::vector<Tensor> constant_logits(float value, int n = 2, int h = 4, int w = 4) {
    std::vector<Tensor> out;
    for (int k = 0; k < 3; ++k) {
        Tensor t({n, 1, h, w});
        t.fill(value);
        out.push_back(std::move(t));
    }
    return out;
}

corruption::CorruptedSample sample_with_mask(const Tensor& real, double keep, uint64_t seed) {
    corruption::CorruptionSpec spec;
    spec.kind = corruption::CorruptionKind::uniform_points_white;
    spec.keep_fraction = keep;
    spec.seed = seed;
    return corruption::corrupt(real, spec);
}

/// Stand-in extractor with a single identity layer (M = element count).
class IdentityExtractor : public FeatureExtractor {
public:
    std::vector<Tensor> features(const Tensor& batch, bool grad) override {
        shape_ = batch.shape();
        return {batch};
    }
    Tensor backward(const std::vector<Tensor>& feature_grads) override {
        return feature_grads.at(0);
    }
    size_t tap_count() const override { return 1; }

private:
    std::vector<int> shape_;
};

}  // namespace

TEST_CASE("all-zero logits give 2 ln 2 per scale, about 4.159 summed") {
    const auto zeros = constant_logits(0.0f);
    const auto [adv_d, adv_g] =
        adversarial_losses(zeros, zeros, AdversarialMode::vanilla_log, DAggregation::sum);
    CHECK(adv_d == doctest::Approx(6.0 * std::log(2.0)).epsilon(1e-9));  // 3 scales * 2 ln 2
    CHECK(adv_d == doctest::Approx(4.158883).epsilon(1e-5));
    CHECK(adv_g == doctest::Approx(3.0 * std::log(2.0)).epsilon(1e-9));
}

TEST_CASE("a perfectly confident discriminator has vanishing loss") {
    const auto real = constant_logits(25.0f);   // sigma ~ 1
    const auto fake = constant_logits(-25.0f);  // sigma ~ 0
    const auto [adv_d, adv_g] =
        adversarial_losses(real, fake, AdversarialMode::vanilla_log, DAggregation::sum);
    CHECK(adv_d == doctest::Approx(0.0).epsilon(1e-6));
    CHECK(std::fabs(adv_d) < 1e-6);
}

TEST_CASE("max aggregation returns the largest per-scale generator term") {
    std::vector<Tensor> fake;
    for (float v : {3.0f, -2.0f, 0.5f}) {
        Tensor t({1, 1, 2, 2});
        t.fill(v);
        fake.push_back(std::move(t));
    }
    const auto sum_res =
        adversarial_g_with_grad(fake, AdversarialMode::vanilla_log, DAggregation::sum);
    const auto max_res =
        adversarial_g_with_grad(fake, AdversarialMode::vanilla_log, DAggregation::max);
    // softplus(-z) is largest for the most negative logit (scale index 1).
    const double expect = std::log1p(std::exp(2.0));
    CHECK(max_res.loss == doctest::Approx(expect).epsilon(1e-9));
    CHECK(sum_res.loss > max_res.loss);
    CHECK(max_abs(max_res.grad_fake[0]) == 0.0f);
    CHECK(max_abs(max_res.grad_fake[1]) > 0.0f);
    CHECK(max_abs(max_res.grad_fake[2]) == 0.0f);
}

TEST_CASE("least-squares mode reaches zero at its target logits") {
    const auto real = constant_logits(1.0f);
    const auto fake = constant_logits(0.0f);
    const auto [adv_d, adv_g] =
        adversarial_losses(real, fake, AdversarialMode::least_squares, DAggregation::sum);
    CHECK(adv_d == doctest::Approx(0.0));
    CHECK(adv_g == doctest::Approx(3.0));  // (0-1)^2 per scale
}

TEST_CASE("adversarial losses validate the scale count") {
    auto two = constant_logits(0.0f);
    two.pop_back();
    const auto three = constant_logits(0.0f);
    CHECK_THROWS_AS(
        adversarial_losses(two, three, AdversarialMode::vanilla_log, DAggregation::sum),
        std::invalid_argument);
}

TEST_CASE("feature matching loss on synthetic features") {
    auto make_feats = [](float fill, int layers, int n_elems) {
        std::vector<ScaleFeatures> feats(3);
        for (auto& sf : feats)
            for (int i = 0; i < layers; ++i) {
                Tensor t({1, 1, 1, n_elems});
                t.fill(fill);
                sf.features.push_back(std::move(t));
            }
        return feats;
    };

    SUBCASE("identical features give exactly zero") {
        const auto a = make_feats(0.37f, 2, 5);
        CHECK(feature_matching_loss(a, a) == 0.0);
    }
    SUBCASE("single scale, single layer, four elements differing by one") {
        std::vector<ScaleFeatures> real(3), fake(3);
        for (int k = 0; k < 3; ++k) {
            Tensor r({1, 1, 1, 4}), f({1, 1, 1, 4});
            if (k == 0) f.fill(1.0f);  // only scale 0 differs
            real[k].features.push_back(std::move(r));
            fake[k].features.push_back(std::move(f));
        }
        CHECK(feature_matching_loss(real, fake) == doctest::Approx(1.0));  // (1/4)*4
    }
    SUBCASE("three identical scales each contributing one sum to three") {
        const auto real = make_feats(0.0f, 1, 4);
        const auto fake = make_feats(1.0f, 1, 4);
        CHECK(feature_matching_loss(real, fake) == doctest::Approx(3.0));
    }
    SUBCASE("structure mismatch is rejected") {
        const auto a = make_feats(0.0f, 2, 4);
        const auto b = make_feats(0.0f, 3, 4);
        CHECK_THROWS_AS(feature_matching_loss(a, b), std::invalid_argument);
    }
}

TEST_CASE("perceptual loss on the identity stand-in extractor") {
    IdentityExtractor extractor;
    const Tensor real = random_batch(1, 3, 6, 6, 3);

    SUBCASE("identical inputs give zero") {
        CHECK(perceptual_loss(real, real, extractor, 10.0) == 0.0);
    }
    SUBCASE("lambda zero gives zero") {
        const Tensor fake = random_batch(1, 3, 6, 6, 4);
        CHECK(perceptual_loss(real, fake, extractor, 0.0) == 0.0);
    }
    SUBCASE("constant difference of 0.5 gives 0.5 lambda") {
        Tensor fake = real;
        for (int64_t i = 0; i < fake.size(); ++i) fake[i] += 0.5f;
        for (double lambda : {1.0, 10.0})
            CHECK(perceptual_loss(real, fake, extractor, lambda) ==
                  doctest::Approx(0.5 * lambda).epsilon(1e-6));
    }
}

TEST_CASE("vgg19 extractor loads weights from a tensor file") {
    testutil::TempDir tmp("vgg");
    // Synthesize a weight file with the 13-conv prefix layout.
    const int widths[5] = {64, 128, 256, 512, 512};
    const int counts[5] = {2, 2, 4, 4, 1};
    std::vector<Tensor> holders;
    holders.reserve(26);
    net::ParamRegistry reg;
    Rng rng(2);
    int ch = 3, index = 0;
    for (int stage = 0; stage < 5; ++stage)
        for (int i = 0; i < counts[stage]; ++i) {
            Tensor w({widths[stage], ch * 9});
            for (int64_t j = 0; j < w.size(); ++j)
                w[j] = static_cast<float>(rng.normal(0.0, 0.05));
            Tensor b({widths[stage]});
            holders.push_back(std::move(w));
            reg.add("conv" + std::to_string(index) + "/w", &holders.back());
            holders.push_back(std::move(b));
            reg.add("conv" + std::to_string(index) + "/b", &holders.back());
            ch = widths[stage];
            ++index;
        }
    net::save_tensors(tmp.file("vgg.bin"), reg, "{}");

    auto extractor = ConvStackExtractor::vgg19(tmp.file("vgg.bin"));
    REQUIRE(extractor->tap_count() == 5);
    const Tensor img = random_batch(1, 3, 32, 32, 5);
    const auto taps = extractor->features(img, false);
    REQUIRE(taps.size() == 5);
    CHECK(taps[0].shape() == std::vector<int>{1, 64, 32, 32});
    CHECK(taps[4].shape() == std::vector<int>{1, 512, 2, 2});
    CHECK(perceptual_loss(img, img, *extractor, 10.0) == 0.0);

    CHECK_THROWS_AS(ConvStackExtractor::vgg19(tmp.file("absent.bin")), std::runtime_error);
}

TEST_CASE("random-stack extractor is frozen and deterministic") {
    auto a = ConvStackExtractor::random_stack(5);
    auto b = ConvStackExtractor::random_stack(5);
    const Tensor img = random_batch(1, 3, 16, 16, 9);
    const auto fa = a->features(img, false);
    const auto fb = b->features(img, false);
    REQUIRE(fa.size() == 5);
    REQUIRE(fa.size() == fb.size());
    for (size_t i = 0; i < fa.size(); ++i) CHECK(testutil::bit_equal(fa[i], fb[i]));
}

TEST_CASE("corresponding point loss follows the masked mean-square contract") {
    const Tensor real = testutil::make_test_photo(16, 16);
    const auto sample = sample_with_mask(real, 0.3, 21);

    SUBCASE("agreement on kept pixels gives zero") {
        CHECK(corresponding_point_loss(sample, sample.source) == 0.0);
        CHECK(corresponding_point_loss(sample, sample.real) == 0.0);  // kept pixels match source
    }
    SUBCASE("one kept pixel differing by 0.5 per channel gives 0.25") {
        corruption::CorruptedSample single = sample;
        single.mask = corruption::Mask(16, 16);
        single.mask.set(4, 5, true);
        Tensor generated = single.source;
        for (int c = 0; c < 3; ++c) generated.at3(c, 4, 5) += 0.5f;
        CHECK(corresponding_point_loss(single, generated) == doctest::Approx(0.25).epsilon(1e-6));
    }
    SUBCASE("mask-false perturbations leave the value exactly unchanged") {
        Tensor generated = random_batch(1, 3, 16, 16, 33).reshaped({3, 16, 16});
        const double before = corresponding_point_loss(sample, generated);
        Tensor tampered = generated;
        for (int y = 0; y < 16; ++y)
            for (int x = 0; x < 16; ++x)
                if (!sample.mask.at(y, x))
                    for (int c = 0; c < 3; ++c) tampered.at3(c, y, x) = 42.0f;
        CHECK(corresponding_point_loss(sample, tampered) == before);
    }
    SUBCASE("empty mask gives zero") {
        corruption::CorruptedSample empty = sample;
        empty.mask = corruption::Mask(16, 16);
        CHECK(corresponding_point_loss(empty, sample.source) == 0.0);
    }
    SUBCASE("L1 mode and raw-sum normalization") {
        corruption::CorruptedSample single = sample;
        single.mask = corruption::Mask(16, 16);
        single.mask.set(2, 2, true);
        single.mask.set(3, 3, true);
        Tensor generated = single.source;
        for (int c = 0; c < 3; ++c) generated.at3(c, 2, 2) += 0.5f;
        const std::vector<const corruption::Mask*> masks{&single.mask};
        const Tensor src = single.source.reshaped({1, 3, 16, 16});
        const Tensor gen = generated.reshaped({1, 3, 16, 16});
        CHECK(point_loss(masks, src, gen, PointLossMode::l1, PointNormalization::mean, nullptr,
                         0.0) == doctest::Approx(1.5 / 6.0));
        CHECK(point_loss(masks, src, gen, PointLossMode::l2, PointNormalization::sum, nullptr,
                         0.0) == doctest::Approx(0.75));
        CHECK(point_loss(masks, src, gen, PointLossMode::none, PointNormalization::mean, nullptr,
                         0.0) == 0.0);
    }
}

TEST_CASE("total generator objective assembles the weighted sum") {
    LossWeights weights;
    LossComponents parts{0.7, 1.1, 1.0, 1.0, 1.0};

    SUBCASE("all weights zero leaves only the adversarial term") {
        weights.lambda_fm = weights.lambda_vgg = weights.lambda_point = 0.0;
        CHECK(total_generator_objective(parts, weights).total_g == doctest::Approx(0.7));
    }
    SUBCASE("unit components at weight 10 add thirty") {
        CHECK(total_generator_objective(parts, weights).total_g == doctest::Approx(30.7));
    }
    SUBCASE("disabled point loss is excluded") {
        weights.point_loss_enabled = false;
        parts.point = 123.0;
        CHECK(total_generator_objective(parts, weights).total_g == doctest::Approx(20.7));
    }
    SUBCASE("non-finite components are reported by name") {
        parts.vgg = std::numeric_limits<double>::quiet_NaN();
        try {
            total_generator_objective(parts, weights);
            FAIL("expected numeric_error");
        } catch (const numeric_error& e) {
            CHECK(e.component() == "vgg");
        }
    }
    SUBCASE("negative weights are rejected") {
        weights.lambda_fm = -1.0;
        CHECK_THROWS_AS(total_generator_objective(parts, weights), std::invalid_argument);
    }
}

// ---------------------------------------------------------------------------
// Gradient oracles: analytic gradients w.r.t. the generated image against
// central finite differences (norm-relative error over sampled coordinates).

TEST_CASE("point loss gradient matches finite differences") {
    const Tensor real = testutil::make_test_photo(8, 8);
    const auto sample = sample_with_mask(real, 0.4, 3);
    const Tensor src = sample.source.reshaped({1, 3, 8, 8});
    const std::vector<const corruption::Mask*> masks{&sample.mask};
    const Tensor gen0 = random_batch(1, 3, 8, 8, 41);

    Tensor analytic = Tensor::zeros_like(gen0);
    point_loss(masks, src, gen0, PointLossMode::l2, PointNormalization::mean, &analytic, 1.0);

    const auto result = testutil::gradcheck(
        [&](const Tensor& g) {
            return point_loss(masks, src, g, PointLossMode::l2, PointNormalization::mean, nullptr,
                              0.0);
        },
        gen0, analytic, 150, 1e-3, 7);
    CHECK(result.norm_rel < 1e-2);
}

TEST_CASE("perceptual loss gradient matches finite differences") {
    auto extractor = ConvStackExtractor::random_stack(11);
    const Tensor real = random_batch(1, 3, 8, 8, 51);
    const Tensor gen0 = random_batch(1, 3, 8, 8, 52);

    Tensor analytic = Tensor::zeros_like(gen0);
    perceptual_with_grad(real, gen0, *extractor, 1.0, &analytic, 1.0);

    const auto result = testutil::gradcheck(
        [&](const Tensor& g) { return perceptual_loss(real, g, *extractor, 1.0); }, gen0,
        analytic, 150, 1e-3, 8);
    CHECK(result.norm_rel < 1e-2);
}

TEST_CASE("adversarial and feature-matching gradients match finite differences") {
    // 16x16 is the smallest canvas the fixed three-scale bank accepts with
    // two strided layers per discriminator.
    models::DiscriminatorConfig config;
    config.layers = 2;
    config.base_channels = 8;
    models::DiscriminatorBank bank(config, 19);
    const Tensor source = random_batch(1, 3, 16, 16, 61);
    const Tensor real = random_batch(1, 3, 16, 16, 62);
    const Tensor gen0 = random_batch(1, 3, 16, 16, 63);

    auto logits_of = [](const std::vector<ScaleFeatures>& feats) {
        std::vector<Tensor> out;
        for (const auto& f : feats) out.push_back(f.logits());
        return out;
    };

    SUBCASE("generator adversarial term") {
        auto feats = bank.forward(source, gen0, false, true);
        auto adv = adversarial_g_with_grad(logits_of(feats), AdversarialMode::vanilla_log,
                                           DAggregation::sum);
        std::vector<std::vector<Tensor>> taps(3);
        for (size_t k = 0; k < 3; ++k) {
            taps[k].resize(feats[k].features.size());
            taps[k].back() = std::move(adv.grad_fake[k]);
        }
        const Tensor analytic = bank.backward_to_candidate(taps);

        const auto result = testutil::gradcheck(
            [&](const Tensor& g) {
                auto f = bank.forward(source, g, false, false);
                return adversarial_g_with_grad(logits_of(f), AdversarialMode::vanilla_log,
                                               DAggregation::sum)
                    .loss;
            },
            gen0, analytic, 120, 1e-3, 9);
        CHECK(result.norm_rel < 1e-2);
    }

    SUBCASE("feature matching term") {
        auto feats_real = bank.forward(source, real, false, false);
        auto feats_fake = bank.forward(source, gen0, false, true);
        std::vector<std::vector<Tensor>> taps(3);
        for (size_t k = 0; k < 3; ++k) taps[k].resize(feats_fake[k].features.size());
        feature_matching_with_grad(feats_real, feats_fake, taps, 1.0);
        const Tensor analytic = bank.backward_to_candidate(taps);

        const auto result = testutil::gradcheck(
            [&](const Tensor& g) {
                auto fr = bank.forward(source, real, false, false);
                auto ff = bank.forward(source, g, false, false);
                return feature_matching_loss(fr, ff);
            },
            gen0, analytic, 120, 1e-3, 10);
        CHECK(result.norm_rel < 1e-2);
    }
}
