#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>

#include <nlohmann/json.hpp>

#include "cli.hpp"
#include "recongan/core/image_io.hpp"
#include "testutil.hpp"

using namespace recongan;
using recongan::cli::run_cli;
using testutil::TempDir;

namespace {

void write_corpus(const TempDir& tmp, const std::string& sub, int n, int size = 16) {
    std::filesystem::create_directories(tmp.path() / sub);
    for (int i = 0; i < n; ++i)
        imageio::save_image((tmp.path() / sub / ("img" + std::to_string(i) + ".png")).string(),
                            testutil::make_test_photo(size, size, 300 + i));
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Tiny experiment config shared by the train/evaluate tests.
std::string write_config(const TempDir& tmp, int iterations) {
    nlohmann::json j;
    j["data"] = {{"train_dir", (tmp.path() / "imgs").string()}, {"val_count", 0}};
    j["task"] = {{"kind", "uniform_points_white"}, {"keep", 0.4}};
    j["train"] = {{"max_iterations", iterations},
                  {"image_size", 16},
                  {"checkpoint_every", 0},
                  {"seed", 3},
                  {"generator", {{"base_channels", 8}, {"residual_blocks", 1}}},
                  {"discriminator", {{"layers", 2}, {"base_channels", 8}}}};
    j["out_dir"] = tmp.file("run");
    const std::string path = tmp.file("config.json");
    std::ofstream out(path);
    out << j.dump(2);
    return path;
}

}  // namespace

TEST_CASE("corrupt command writes deterministic triplets") {
    TempDir tmp("cli_corrupt");
    write_corpus(tmp, "imgs", 2, 32);
    const std::vector<std::string> base{"corrupt",        "--input",
                                        tmp.file("imgs"), "--kind",
                                        "uniform_points_color_noise",
                                        "--keep",         "0.25",
                                        "--seed",         "7",
                                        "--target-size",  "32"};

    auto with_out = [&](const std::string& out) {
        auto args = base;
        args.push_back("--out");
        args.push_back(tmp.file(out));
        return args;
    };
    CHECK(run_cli(with_out("a")) == cli::kExitOk);
    CHECK(run_cli(with_out("b")) == cli::kExitOk);

    for (const char* name : {"img0_source.png", "img0_real.png", "img0_mask.png",
                             "img0_spec.json", "img1_source.png"}) {
        const std::string fa = tmp.file("a") + "/" + name;
        const std::string fb = tmp.file("b") + "/" + name;
        REQUIRE(std::filesystem::exists(fa));
        CHECK(slurp(fa) == slurp(fb));  // bit-identical across runs
    }
}

TEST_CASE("corrupt validates its inputs with exit code 2") {
    TempDir tmp("cli_corrupt_err");
    write_corpus(tmp, "imgs", 1);
    CHECK(run_cli({"corrupt", "--input", tmp.file("missing"), "--out", tmp.file("o"), "--seed",
                   "1"}) == cli::kExitConfig);
    CHECK(run_cli({"corrupt", "--input", tmp.file("imgs"), "--out", tmp.file("o"), "--kind",
                   "clutter_color_block"}) == cli::kExitConfig);  // donor missing
    CHECK(run_cli({"corrupt", "--input", tmp.file("imgs"), "--out", tmp.file("o"), "--kind",
                   "bogus"}) == cli::kExitConfig);
}

TEST_CASE("train runs from a config file and echoes the effective config") {
    TempDir tmp("cli_train");
    write_corpus(tmp, "imgs", 2);
    const std::string config = write_config(tmp, 1);

    CHECK(run_cli({"train", "--config", config}) == cli::kExitOk);
    CHECK(std::filesystem::exists(tmp.file("run") + "/checkpoint_final.bin"));
    CHECK(std::filesystem::exists(tmp.file("run") + "/losses.csv"));
    CHECK(std::filesystem::exists(tmp.file("run") + "/manifest.json"));

    // Flag overrides beat file values and land in the echoed config.
    CHECK(run_cli({"train", "--config", config, "--out", tmp.file("run2"), "--keep", "0.9",
                   "--max-iterations", "0"}) == cli::kExitOk);
    const auto echoed = nlohmann::json::parse(slurp(tmp.file("run2") + "/config.json"));
    CHECK(echoed["task"]["keep"].get<double>() == 0.9);
    CHECK(echoed["train"]["max_iterations"].get<int64_t>() == 0);
    CHECK(echoed["task"]["point_loss"] == "auto");
    CHECK(echoed["train"]["weights"]["point_loss_enabled"].get<bool>() == true);
}

TEST_CASE("train lists every configuration error before exiting") {
    TempDir tmp("cli_train_err");
    CHECK(run_cli({"train", "--out", tmp.file("x")}) == cli::kExitConfig);  // no train dir
    write_corpus(tmp, "imgs", 1);
    CHECK(run_cli({"train", "--train-dir", tmp.file("imgs"), "--out", tmp.file("x"), "--kind",
                   "clutter_color_block", "--max-iterations", "0"}) == cli::kExitConfig);
}

TEST_CASE("reconstruct mirrors input names and enforces the stride") {
    TempDir tmp("cli_recon");
    write_corpus(tmp, "imgs", 2);
    const std::string config = write_config(tmp, 0);
    REQUIRE(run_cli({"train", "--config", config}) == cli::kExitOk);
    const std::string ckpt = tmp.file("run") + "/checkpoint_final";

    CHECK(run_cli({"reconstruct", "--checkpoint", ckpt, "--input", tmp.file("imgs"), "--out",
                   tmp.file("recon"), "--dump-triptych", "--real-dir", tmp.file("imgs")}) ==
          cli::kExitOk);
    CHECK(std::filesystem::exists(tmp.file("recon") + "/img0_recon.png"));
    CHECK(std::filesystem::exists(tmp.file("recon") + "/img1_recon.png"));
    CHECK(std::filesystem::exists(tmp.file("recon") + "/img0_triptych.png"));
    const Tensor recon = imageio::load_image(tmp.file("recon") + "/img0_recon.png");
    CHECK(recon.shape() == std::vector<int>{3, 16, 16});

    // 15x15 is not divisible by the stride; the message should say so.
    imageio::save_image(tmp.file("odd.png"), testutil::make_test_photo(15, 15));
    CHECK(run_cli({"reconstruct", "--checkpoint", ckpt, "--input", tmp.file("odd.png"), "--out",
                   tmp.file("recon2")}) == cli::kExitConfig);
}

TEST_CASE("evaluate writes reports for a checkpoint and for the baseline") {
    TempDir tmp("cli_eval");
    write_corpus(tmp, "imgs", 2);
    const std::string config = write_config(tmp, 0);
    REQUIRE(run_cli({"train", "--config", config}) == cli::kExitOk);

    CHECK(run_cli({"evaluate", "--checkpoint", tmp.file("run") + "/checkpoint_final", "--val",
                   tmp.file("imgs"), "--keep", "0.5,1.0", "--seed", "5", "--out",
                   tmp.file("eval")}) == cli::kExitOk);
    CHECK(std::filesystem::exists(tmp.file("eval") + "/metrics.csv"));
    CHECK(std::filesystem::exists(tmp.file("eval") + "/psnr.svg"));

    CHECK(run_cli({"evaluate", "--baseline", "--val", tmp.file("imgs"), "--keep", "1.0",
                   "--target-size", "16", "--out", tmp.file("eval_base")}) == cli::kExitOk);
    const std::string csv = slurp(tmp.file("eval_base") + "/metrics.csv");
    CHECK(csv.find(",100,") != std::string::npos);  // keep=1 baseline at the cap

    CHECK(run_cli({"evaluate", "--baseline", "--val", tmp.file("empty_dir"), "--out",
                   tmp.file("e2")}) == cli::kExitConfig);
}

TEST_CASE("plot renders curves from a metrics csv") {
    TempDir tmp("cli_plot");
    const std::string csv = tmp.file("metrics.csv");
    {
        std::ofstream out(csv);
        out << "kind,param,image_id,psnr_db,ssim\n";
        out << "uniform_points_white,0.05,a,18.0,0.6\n";
        out << "uniform_points_white,0.10,a,21.0,0.7\n";
        out << "feature_points_white,0.05,a,19.5,0.65\n";
        out << "feature_points_white,0.10,a,22.5,0.75\n";
    }
    CHECK(run_cli({"plot", "--metrics", csv, "--out", tmp.file("p.svg"), "--compare",
                   "uniform,feature"}) == cli::kExitOk);
    const std::string svg = slurp(tmp.file("p.svg"));
    CHECK(svg.find("uniform_points_white") != std::string::npos);
    CHECK(svg.find("feature_points_white") != std::string::npos);

    // A single spec still renders (marker, no crash).
    {
        std::ofstream out(csv);
        out << "kind,param,image_id,psnr_db,ssim\n";
        out << "center_white_block,128,a,24.0,0.8\n";
    }
    CHECK(run_cli({"plot", "--metrics", csv, "--out", tmp.file("p2.svg")}) == cli::kExitOk);
    CHECK(run_cli({"plot", "--metrics", tmp.file("nope.csv"), "--out", tmp.file("p3.svg")}) ==
          cli::kExitConfig);
}

TEST_CASE("unknown subcommands and missing required flags exit with code 2") {
    CHECK(run_cli({"frobnicate"}) == cli::kExitConfig);
    CHECK(run_cli({"corrupt"}) == cli::kExitConfig);  // --input/--out required
    CHECK(run_cli({}) == cli::kExitConfig);
}
