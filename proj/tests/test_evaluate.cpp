#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>

#include "recongan/core/image_io.hpp"
#include "recongan/eval/evaluate.hpp"
#include "testutil.hpp"

using namespace recongan;
using namespace recongan::eval;
using testutil::TempDir;

namespace {

data::DatasetManifest val_corpus(const TempDir& tmp, int n, int size = 16) {
    std::filesystem::create_directories(tmp.path() / "val");
    for (int i = 0; i < n; ++i)
        imageio::save_image((tmp.path() / "val" / ("v" + std::to_string(i) + ".png")).string(),
                            testutil::make_test_photo(size, size, 60 + i));
    return data::split_manifest(data::list_images((tmp.path() / "val").string()), 0, n, 1, size);
}

corruption::CorruptionSpec point_spec(double keep) {
    corruption::CorruptionSpec spec;
    spec.kind = corruption::CorruptionKind::uniform_points_white;
    spec.keep_fraction = keep;
    return spec;
}

}  // namespace

TEST_CASE("identity baseline at keep one scores at the PSNR cap") {
    TempDir tmp("grid_cap");
    auto val = val_corpus(tmp, 3);
    const auto report =
        evaluate_grid(nullptr, val, {point_spec(1.0)}, 7, std::nullopt, "baseline");
    REQUIRE(report.rows.size() == 3);
    for (const auto& row : report.rows) {
        CHECK(row.psnr_db == 100.0);
        CHECK(row.ssim == doctest::Approx(1.0));
    }
}

TEST_CASE("report rows carry kind and parameter; summaries aggregate") {
    TempDir tmp("grid_rows");
    auto val = val_corpus(tmp, 2);
    const auto report = evaluate_grid(nullptr, val, {point_spec(0.5), point_spec(0.1)}, 3,
                                      std::nullopt, "baseline");
    REQUIRE(report.rows.size() == 4);
    CHECK(report.rows[0].kind == "uniform_points_white");
    CHECK(report.rows[0].param == 0.5);
    CHECK(report.rows[2].param == 0.1);

    const auto summaries = report.summaries();
    REQUIRE(summaries.size() == 2);
    for (const auto& s : summaries) CHECK(s.count == 2);
    // Keeping fewer pixels corrupts more, so the baseline PSNR drops.
    CHECK(summaries[0].param == 0.1);
    CHECK(summaries[1].param == 0.5);
    CHECK(summaries[0].psnr_mean < summaries[1].psnr_mean);
}

TEST_CASE("evaluation is deterministic: byte-identical CSV across runs") {
    TempDir tmp("grid_det");
    auto val = val_corpus(tmp, 2);
    const std::vector<corruption::CorruptionSpec> specs{point_spec(0.3)};
    const auto a = evaluate_grid(nullptr, val, specs, 11, std::nullopt, "x");
    const auto b = evaluate_grid(nullptr, val, specs, 11, std::nullopt, "x");
    CHECK(a.to_csv() == b.to_csv());
    const auto c = evaluate_grid(nullptr, val, specs, 12, std::nullopt, "x");
    CHECK(a.to_csv() != c.to_csv());
}

TEST_CASE("a generator checkpoint changes the rows but not the schema") {
    TempDir tmp("grid_gen");
    auto val = val_corpus(tmp, 1);
    train::TrainConfig config;
    config.image_size = 16;
    config.max_iterations = 1;
    config.generator.base_channels = 8;
    config.generator.residual_blocks = 1;
    config.discriminator.layers = 2;
    train::Trainer trainer(config, losses::ConvStackExtractor::random_stack(1));

    const auto report = evaluate_grid(&trainer.generator(), val, {point_spec(0.5)}, 5,
                                      std::nullopt, "untrained");
    REQUIRE(report.rows.size() == 1);
    CHECK(report.rows[0].psnr_db < 100.0);  // an untrained net never hits the cap
    const std::string csv = report.to_csv();
    CHECK(csv.rfind("kind,param,image_id,psnr_db,ssim\n", 0) == 0);
}

TEST_CASE("write_report emits csv, summary and both plots") {
    TempDir tmp("grid_files");
    auto val = val_corpus(tmp, 2);
    const auto report = evaluate_grid(nullptr, val, {point_spec(0.5), point_spec(0.2)}, 3,
                                      std::nullopt, "baseline");
    write_report(tmp.file("out"), report);
    for (const char* name : {"metrics.csv", "metrics_summary.csv", "psnr.svg", "ssim.svg"})
        CHECK(std::filesystem::exists(tmp.file("out") + "/" + name));
    std::ifstream svg(tmp.file("out") + "/psnr.svg");
    std::string text((std::istreambuf_iterator<char>(svg)), std::istreambuf_iterator<char>());
    CHECK(text.find("<svg") != std::string::npos);
    CHECK(text.find("uniform_points_white") != std::string::npos);
}

TEST_CASE("empty spec list or validation set is rejected") {
    TempDir tmp("grid_err");
    auto val = val_corpus(tmp, 1);
    CHECK_THROWS_AS(evaluate_grid(nullptr, val, {}, 1, std::nullopt, "x"), std::invalid_argument);
    data::DatasetManifest empty = val;
    empty.val_count = 0;
    CHECK_THROWS_AS(evaluate_grid(nullptr, empty, {point_spec(0.5)}, 1, std::nullopt, "x"),
                    std::invalid_argument);
}

TEST_CASE("point-loss ablation trains three variants from identical seeds") {
    TempDir tmp("ablate");
    std::filesystem::create_directories(tmp.path() / "train");
    for (int i = 0; i < 2; ++i)
        imageio::save_image((tmp.path() / "train" / ("t" + std::to_string(i) + ".png")).string(),
                            testutil::make_test_photo(16, 16, 80 + i));
    auto manifest =
        data::split_manifest(data::list_images((tmp.path() / "train").string()), 2, 0, 2, 16);
    auto val = val_corpus(tmp, 1);

    train::TrainConfig config;
    config.seed = 9;
    config.image_size = 16;
    config.max_iterations = 1;
    config.checkpoint_every = 0;
    config.generator.base_channels = 8;
    config.generator.residual_blocks = 1;
    config.discriminator.layers = 2;
    config.discriminator.base_channels = 8;

    data::TaskSampler task;
    task.keep_min = task.keep_max = 0.3;

    const auto results =
        ablate_point_loss(config, manifest, task, std::nullopt, val, {point_spec(0.3)}, 4,
                          tmp.file("ablation"), losses::ConvStackExtractor::random_stack(3));
    REQUIRE(results.size() == 3);
    CHECK(results[0].variant == "l2");
    CHECK(results[1].variant == "l1");
    CHECK(results[2].variant == "none");
    for (const auto& r : results) CHECK(r.report.rows.size() == 1);  // one row-set per variant
    CHECK(std::filesystem::exists(tmp.file("ablation") + "/ablation.csv"));
    CHECK(std::filesystem::exists(tmp.file("ablation") + "/point_l2/checkpoint_final.bin"));

    std::ifstream combined(tmp.file("ablation") + "/ablation.csv");
    std::string line;
    std::getline(combined, line);
    CHECK(line == "variant,kind,param,image_id,psnr_db,ssim");
}
