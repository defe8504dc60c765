#include "cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#ifdef _OPENMP
#include <omp.h>
#endif

#include "recongan/core/image_io.hpp"
#include "recongan/core/rng.hpp"
#include "recongan/core/svg_plot.hpp"
#include "recongan/data/dataset.hpp"
#include "recongan/eval/evaluate.hpp"
#include "recongan/train/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace recongan::cli {

namespace {

std::string resolve_out(const std::string& out) {
    const char* root = std::getenv("RECONGAN_OUT_ROOT");
    if (root && *root && !out.empty() && !fs::path(out).is_absolute())
        return (fs::path(root) / out).string();
    return out;
}

std::vector<double> parse_double_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
    return out;
}

std::vector<std::string> parse_string_list(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(item);
    return out;
}

std::shared_ptr<losses::FeatureExtractor> make_extractor(const std::string& kind,
                                                         const std::string& weights_path,
                                                         uint64_t seed) {
    if (kind == "random_stack") return losses::ConvStackExtractor::random_stack(seed);
    if (kind == "vgg19") {
        if (weights_path.empty())
            throw std::invalid_argument(
                "perceptual extractor vgg19 requires --vgg-weights (no fallback configured)");
        return losses::ConvStackExtractor::vgg19(weights_path);
    }
    throw std::invalid_argument("unknown perceptual extractor: " + kind);
}

// ---------------------------------------------------------------------------
// Experiment configuration: JSON file with data/task/train/perceptual
// sections; command-line flags override file values.

struct ExperimentConfig {
    std::string train_dir, val_dir, donor_dir;
    int64_t train_count = -1;  // -1: all remaining after val_count
    int64_t val_count = 0;
    bool frozen_corruption = false;

    std::string task_kind = "uniform_points_white";
    double keep = 0.1;
    double keep_min = -1.0, keep_max = -1.0;
    int block_size = 128;
    std::string point_loss = "auto";  // auto | on | off

    train::TrainConfig train;

    std::string perceptual_kind = "random_stack";
    std::string vgg_weights;
    uint64_t perceptual_seed = 0;

    std::string out_dir;

    static ExperimentConfig from_file(const std::string& path);
    std::string to_json_text() const;
    data::TaskSampler task_sampler() const;
    void finalize();  // resolve "auto" fields
    std::vector<std::string> validate() const;
};

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot read config file: " + path);
    const json j = json::parse(in);

    ExperimentConfig c;
    if (j.contains("data")) {
        const auto& d = j["data"];
        c.train_dir = d.value("train_dir", c.train_dir);
        c.val_dir = d.value("val_dir", c.val_dir);
        c.donor_dir = d.value("donor_dir", c.donor_dir);
        c.train_count = d.value("train_count", c.train_count);
        c.val_count = d.value("val_count", c.val_count);
        c.frozen_corruption = d.value("frozen_corruption", c.frozen_corruption);
    }
    if (j.contains("task")) {
        const auto& t = j["task"];
        c.task_kind = t.value("kind", c.task_kind);
        c.keep = t.value("keep", c.keep);
        c.keep_min = t.value("keep_min", c.keep_min);
        c.keep_max = t.value("keep_max", c.keep_max);
        c.block_size = t.value("block_size", c.block_size);
        c.point_loss = t.value("point_loss", c.point_loss);
    }
    if (j.contains("train")) c.train = train::TrainConfig::from_json(j["train"].dump());
    if (j.contains("perceptual")) {
        const auto& p = j["perceptual"];
        c.perceptual_kind = p.value("kind", c.perceptual_kind);
        c.vgg_weights = p.value("weights_path", c.vgg_weights);
        c.perceptual_seed = p.value("seed", c.perceptual_seed);
    }
    c.out_dir = j.value("out_dir", c.out_dir);
    return c;
}

std::string ExperimentConfig::to_json_text() const {
    json j;
    j["data"] = {{"train_dir", train_dir},   {"val_dir", val_dir},
                 {"donor_dir", donor_dir},   {"train_count", train_count},
                 {"val_count", val_count},   {"frozen_corruption", frozen_corruption}};
    j["task"] = {{"kind", task_kind}, {"keep", keep},           {"keep_min", keep_min},
                 {"keep_max", keep_max}, {"block_size", block_size}, {"point_loss", point_loss}};
    j["train"] = json::parse(train.to_json());
    j["perceptual"] = {{"kind", perceptual_kind},
                       {"weights_path", vgg_weights},
                       {"seed", perceptual_seed}};
    j["out_dir"] = out_dir;
    return j.dump(2);
}

data::TaskSampler ExperimentConfig::task_sampler() const {
    data::TaskSampler task;
    task.kind = corruption::kind_from_string(task_kind);
    if (keep_min >= 0.0 && keep_max >= 0.0) {
        task.keep_min = keep_min;
        task.keep_max = keep_max;
    } else {
        task.keep_min = task.keep_max = keep;
    }
    task.block_size = block_size;
    return task;
}

void ExperimentConfig::finalize() {
    if (train.max_iterations < 0 && train.epochs < 0)
        train.max_iterations = 100000;  // batch-1 default protocol
    if (point_loss == "auto") {
        train.weights.point_loss_enabled =
            corruption::point_loss_default(corruption::kind_from_string(task_kind));
    } else if (point_loss == "on") {
        train.weights.point_loss_enabled = true;
    } else if (point_loss == "off") {
        train.weights.point_loss_enabled = false;
    }
}

std::vector<std::string> ExperimentConfig::validate() const {
    std::vector<std::string> errors;
    if (train_dir.empty())
        errors.push_back("data.train_dir is required");
    else if (!fs::is_directory(train_dir))
        errors.push_back("data.train_dir is not a directory: " + train_dir);
    if (!val_dir.empty() && !fs::is_directory(val_dir))
        errors.push_back("data.val_dir is not a directory: " + val_dir);
    if (!donor_dir.empty() && !fs::is_directory(donor_dir))
        errors.push_back("data.donor_dir is not a directory: " + donor_dir);
    if (out_dir.empty()) errors.push_back("out_dir is required");

    try {
        corruption::CorruptionKind kind = corruption::kind_from_string(task_kind);
        if (kind == corruption::CorruptionKind::clutter_color_block && donor_dir.empty())
            errors.push_back("task.kind clutter_color_block requires data.donor_dir");
    } catch (const std::exception& e) {
        errors.push_back(e.what());
    }
    if (point_loss != "auto" && point_loss != "on" && point_loss != "off")
        errors.push_back("task.point_loss must be auto/on/off");
    if (perceptual_kind == "vgg19" && vgg_weights.empty())
        errors.push_back("perceptual.kind vgg19 requires perceptual.weights_path");
    try {
        train.validate();
    } catch (const std::exception& e) {
        errors.push_back(e.what());
    }
    try {
        task_sampler().sample_spec(0);
    } catch (const std::exception& e) {
        errors.push_back(e.what());
    }
    return errors;
}

// ---------------------------------------------------------------------------
// corrupt

struct CorruptOptions {
    std::string input, out, kind = "uniform_points_white", donor_dir;
    double keep = 0.1;
    int block_size = 128;
    int target_size = 256;
    uint64_t seed = 0;
    int64_t limit = -1;
};

int cmd_corrupt(const CorruptOptions& opt) {
    const auto kind = corruption::kind_from_string(opt.kind);
    const auto paths = data::list_images(opt.input);
    if (paths.empty()) throw std::invalid_argument("no images found in " + opt.input);
    std::vector<std::string> donors;
    if (kind == corruption::CorruptionKind::clutter_color_block) {
        if (opt.donor_dir.empty())
            throw std::invalid_argument("--donor is required for clutter_color_block");
        donors = data::list_images(opt.donor_dir);
        if (donors.empty()) throw std::invalid_argument("no donor images in " + opt.donor_dir);
    }

    const std::string out_dir = resolve_out(opt.out);
    fs::create_directories(out_dir);

    int64_t written = 0;
    for (size_t i = 0; i < paths.size(); ++i) {
        if (opt.limit >= 0 && written >= opt.limit) break;
        corruption::CorruptionSpec spec;
        spec.kind = kind;
        spec.keep_fraction = opt.keep;
        spec.block_size = opt.block_size;
        spec.seed = mix_seed(opt.seed, 0x636f7272ULL, i);

        const Tensor real = imageio::load_and_normalize(paths[i], opt.target_size);
        corruption::CorruptedSample sample;
        if (!donors.empty()) {
            Rng donor_rng(mix_seed(spec.seed, 0x646f6e6fULL));
            const Tensor donor = imageio::load_and_normalize(
                donors[donor_rng.bounded(donors.size())], opt.target_size);
            sample = corruption::corrupt(real, spec, &donor);
        } else {
            sample = corruption::corrupt(real, spec, nullptr);
        }

        const std::string stem = fs::path(paths[i]).stem().string();
        imageio::save_image(out_dir + "/" + stem + "_source.png", sample.source);
        imageio::save_image(out_dir + "/" + stem + "_real.png", sample.real);
        imageio::save_mask(out_dir + "/" + stem + "_mask.png", sample.mask);
        std::ofstream spec_out(out_dir + "/" + stem + "_spec.json");
        spec_out << sample.spec.to_json() << "\n";
        ++written;
    }
    std::cout << "wrote " << written << " corrupted triplets to " << out_dir << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// train

int cmd_train(ExperimentConfig config, const std::string& resume) {
    config.finalize();
    const auto errors = config.validate();
    if (!errors.empty()) {
        std::cerr << "configuration errors:\n";
        for (const auto& e : errors) std::cerr << "  - " << e << "\n";
        return kExitConfig;
    }

    const std::string out_dir = resolve_out(config.out_dir);
    fs::create_directories(out_dir);
    {
        std::ofstream echo(out_dir + "/config.json");
        echo << config.to_json_text() << "\n";
    }

    auto paths = data::list_images(config.train_dir);
    const int64_t train_count = config.train_count >= 0
                                    ? config.train_count
                                    : static_cast<int64_t>(paths.size()) - config.val_count;
    auto manifest = data::split_manifest(std::move(paths), train_count, config.val_count,
                                         config.train.seed, config.train.image_size);
    manifest.save(out_dir + "/manifest.json");

    std::optional<data::DatasetManifest> donor;
    if (!config.donor_dir.empty())
        donor = data::split_manifest(data::list_images(config.donor_dir), 0, 0, config.train.seed,
                                     config.train.image_size);

    data::SampleStream stream(manifest, config.task_sampler(), donor,
                              mix_seed(config.train.seed, 0x73747265ULL),
                              config.frozen_corruption);

    auto extractor =
        make_extractor(config.perceptual_kind, config.vgg_weights, config.perceptual_seed);
    train::Trainer trainer(config.train, extractor);
    if (!resume.empty()) trainer.load_checkpoint(resume);

    const auto result = train::train_loop(trainer, stream, out_dir, &std::cout);
    std::cout << "finished at iteration " << result.iterations << "; final checkpoint "
              << result.final_checkpoint << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// reconstruct

struct ReconstructOptions {
    std::string checkpoint, input, out, real_dir;
    int target_size = 0;  // 0: native size
    bool triptych = false;
};

train::TrainConfig config_from_checkpoint(const std::string& base) {
    std::ifstream in(base + ".json");
    if (!in) throw std::invalid_argument("cannot read checkpoint manifest: " + base + ".json");
    const json manifest = json::parse(in);
    return train::TrainConfig::from_json(manifest.at("config").dump());
}

int cmd_reconstruct(const ReconstructOptions& opt) {
    train::TrainConfig config = config_from_checkpoint(opt.checkpoint);
    // Extractor is unused at inference; any frozen stack satisfies the ctor.
    std::shared_ptr<losses::FeatureExtractor> extractor =
        losses::ConvStackExtractor::random_stack(0);
    train::Trainer trainer(config, extractor);
    trainer.load_checkpoint(opt.checkpoint);

    std::vector<std::string> inputs;
    if (fs::is_directory(opt.input))
        inputs = data::list_images(opt.input);
    else
        inputs.push_back(opt.input);
    if (inputs.empty()) throw std::invalid_argument("no input images under " + opt.input);

    const std::string out_dir = resolve_out(opt.out);
    fs::create_directories(out_dir);
    const int stride = 1 << config.generator.downsample_stages;

    for (const auto& path : inputs) {
        Tensor source = opt.target_size > 0 ? imageio::load_and_normalize(path, opt.target_size)
                                            : imageio::load_image(path);
        const int h = source.dim(1), w = source.dim(2);
        if (h % stride != 0 || w % stride != 0)
            throw std::invalid_argument(
                path + ": size " + std::to_string(w) + "x" + std::to_string(h) +
                " is not divisible by the network stride " + std::to_string(stride) +
                "; resize (e.g. --target-size " + std::to_string(config.image_size) +
                ") or pad to a multiple of " + std::to_string(stride));

        Tensor recon = trainer.reconstruct(source.reshaped({1, 3, h, w})).reshaped({3, h, w});
        const std::string stem = fs::path(path).stem().string();
        imageio::save_image(out_dir + "/" + stem + "_recon.png", recon);

        if (opt.triptych) {
            std::vector<Tensor> strip{source, recon};
            if (!opt.real_dir.empty()) {
                const fs::path real_path = fs::path(opt.real_dir) / fs::path(path).filename();
                if (fs::exists(real_path)) {
                    Tensor real = opt.target_size > 0
                                      ? imageio::load_and_normalize(real_path.string(),
                                                                    opt.target_size)
                                      : imageio::load_image(real_path.string());
                    if (real.same_shape(source)) strip.push_back(std::move(real));
                }
            }
            imageio::save_image(out_dir + "/" + stem + "_triptych.png", imageio::hstack(strip));
        }
    }
    std::cout << "reconstructed " << inputs.size() << " image(s) into " << out_dir << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// evaluate

struct EvaluateOptions {
    std::string checkpoint, val_dir, donor_dir, out, kinds = "uniform_points_white";
    std::string keeps = "0.1";
    std::string block_sizes = "128";
    int64_t val_count = -1;  // -1: all
    int target_size = 0;     // 0: from checkpoint config
    uint64_t seed = 0;
    bool baseline = false;
    bool ablate = false;
    std::string config_path;  // for --ablate-point-loss
};

std::vector<corruption::CorruptionSpec> build_specs(const std::string& kinds,
                                                    const std::string& keeps,
                                                    const std::string& block_sizes) {
    std::vector<corruption::CorruptionSpec> specs;
    for (const auto& kind_name : parse_string_list(kinds)) {
        const auto kind = corruption::kind_from_string(kind_name);
        if (corruption::is_point_kind(kind)) {
            for (double keep : parse_double_list(keeps)) {
                corruption::CorruptionSpec spec;
                spec.kind = kind;
                spec.keep_fraction = keep;
                spec.validate();
                specs.push_back(spec);
            }
        } else {
            for (double bs : parse_double_list(block_sizes)) {
                corruption::CorruptionSpec spec;
                spec.kind = kind;
                spec.block_size = static_cast<int>(bs);
                spec.validate();
                specs.push_back(spec);
            }
        }
    }
    return specs;
}

int cmd_evaluate(const EvaluateOptions& opt) {
    const std::string out_dir = resolve_out(opt.out);

    if (opt.ablate) {
        if (opt.config_path.empty())
            throw std::invalid_argument("--ablate-point-loss requires --config");
        ExperimentConfig config = ExperimentConfig::from_file(opt.config_path);
        config.finalize();
        const auto errors = config.validate();
        if (!errors.empty()) {
            std::cerr << "configuration errors:\n";
            for (const auto& e : errors) std::cerr << "  - " << e << "\n";
            return kExitConfig;
        }
        auto paths = data::list_images(config.train_dir);
        const int64_t train_count = config.train_count >= 0
                                        ? config.train_count
                                        : static_cast<int64_t>(paths.size()) - config.val_count;
        auto manifest = data::split_manifest(std::move(paths), train_count, config.val_count,
                                             config.train.seed, config.train.image_size);
        std::optional<data::DatasetManifest> donor;
        if (!config.donor_dir.empty())
            donor = data::split_manifest(data::list_images(config.donor_dir), 0, 0,
                                         config.train.seed, config.train.image_size);

        // Validation grid: the task kind over the requested keep fractions,
        // scored on the manifest's validation split (or the training split
        // when no validation images were reserved).
        data::DatasetManifest val = manifest;
        if (val.val_count == 0) {
            val.val_count = val.train_count;
            val.train_count = 0;
        }
        const auto specs = build_specs(config.task_kind, opt.keeps, opt.block_sizes);
        auto extractor =
            make_extractor(config.perceptual_kind, config.vgg_weights, config.perceptual_seed);
        const auto results =
            eval::ablate_point_loss(config.train, manifest, config.task_sampler(), donor, val,
                                    specs, opt.seed, out_dir, extractor, &std::cout);
        for (const auto& r : results)
            for (const auto& s : r.report.summaries())
                std::cout << r.variant << " " << s.kind << " param " << s.param << ": PSNR "
                          << s.psnr_mean << " dB, SSIM " << s.ssim_mean << "\n";
        return kExitOk;
    }

    if (opt.checkpoint.empty() && !opt.baseline)
        throw std::invalid_argument("either --checkpoint or --baseline is required");
    if (opt.val_dir.empty()) throw std::invalid_argument("--val is required");

    std::unique_ptr<train::Trainer> trainer;
    int target_size = opt.target_size;
    if (!opt.checkpoint.empty()) {
        train::TrainConfig config = config_from_checkpoint(opt.checkpoint);
        std::shared_ptr<losses::FeatureExtractor> extractor =
            losses::ConvStackExtractor::random_stack(0);
        trainer = std::make_unique<train::Trainer>(config, extractor);
        trainer->load_checkpoint(opt.checkpoint);
        if (target_size == 0) target_size = config.image_size;
    }
    if (target_size == 0) target_size = 256;

    auto paths = data::list_images(opt.val_dir);
    if (paths.empty()) throw std::invalid_argument("empty validation set: " + opt.val_dir);
    const int64_t val_count =
        opt.val_count >= 0 ? std::min<int64_t>(opt.val_count, paths.size())
                           : static_cast<int64_t>(paths.size());
    auto val = data::split_manifest(std::move(paths), 0, val_count, opt.seed, target_size);

    std::optional<data::DatasetManifest> donor;
    if (!opt.donor_dir.empty())
        donor = data::split_manifest(data::list_images(opt.donor_dir), 0, 0, opt.seed,
                                     target_size);

    const auto specs = build_specs(opt.kinds, opt.keeps, opt.block_sizes);
    const auto report =
        eval::evaluate_grid(trainer ? &trainer->generator() : nullptr, val, specs, opt.seed,
                            donor, opt.baseline ? "baseline" : opt.checkpoint);
    eval::write_report(out_dir, report);
    for (const auto& s : report.summaries())
        std::cout << s.kind << " param " << s.param << ": PSNR " << s.psnr_mean << " dB, SSIM "
                  << s.ssim_mean << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// plot

struct PlotOptions {
    std::string metrics, out, metric = "psnr", compare;
};

int cmd_plot(const PlotOptions& opt) {
    std::ifstream in(opt.metrics);
    if (!in) throw std::invalid_argument("cannot read metrics csv: " + opt.metrics);

    std::vector<std::string> keep_kinds = parse_string_list(opt.compare);
    auto kind_selected = [&](const std::string& kind) {
        if (keep_kinds.empty() || opt.compare.empty()) return true;
        for (const auto& k : keep_kinds)
            if (kind.find(k) != std::string::npos) return true;
        return false;
    };

    std::string line;
    std::getline(in, line);  // header
    std::map<std::pair<std::string, double>, std::pair<double, int>> acc;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto cols = parse_string_list(line);
        if (cols.size() < 5) throw std::invalid_argument("malformed metrics row: " + line);
        const std::string& kind = cols[0];
        if (!kind_selected(kind)) continue;
        const double param = std::stod(cols[1]);
        const double value = opt.metric == "ssim" ? std::stod(cols[4]) : std::stod(cols[3]);
        auto& slot = acc[{kind, param}];
        slot.first += value;
        slot.second += 1;
    }
    if (acc.empty()) throw std::invalid_argument("no matching rows in " + opt.metrics);

    std::map<std::string, plot::Series> series;
    for (const auto& [key, sum_count] : acc) {
        series[key.first].label = key.first;
        series[key.first].points.emplace_back(key.second, sum_count.first / sum_count.second);
    }
    std::vector<plot::Series> list;
    for (auto& [kind, s] : series) list.push_back(std::move(s));
    const std::string label = opt.metric == "ssim" ? "SSIM" : "PSNR (dB)";
    plot::write_line_plot(resolve_out(opt.out), "Reconstruction quality",
                          "corruption parameter", label, list);
    std::cout << "wrote " << resolve_out(opt.out) << "\n";
    return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"Conditional-GAN image reconstruction toolkit"};
    app.require_subcommand(1);

    int workers = 0;
    app.add_option("--workers", workers, "worker threads for tensor math (0: library default)");

    CorruptOptions copt;
    auto* corrupt = app.add_subcommand("corrupt", "materialize corrupted image triplets");
    corrupt->add_option("--input", copt.input, "folder of source images")->required();
    corrupt->add_option("--out", copt.out, "output folder")->required();
    corrupt->add_option("--kind", copt.kind, "corruption kind");
    corrupt->add_option("--keep", copt.keep, "retained pixel fraction (point kinds)");
    corrupt->add_option("--block-size,--max-block", copt.block_size,
                        "block side (block kinds; upper bound for clutter)");
    corrupt->add_option("--donor", copt.donor_dir, "donor image folder (clutter blocks)");
    corrupt->add_option("--seed", copt.seed, "RNG seed");
    corrupt->add_option("--target-size", copt.target_size, "square resize edge");
    corrupt->add_option("--limit", copt.limit, "only corrupt the first N images");

    ExperimentConfig tconf;
    std::string config_path, resume;
    std::string kind_flag, point_loss_flag, adv_mode_flag, d_agg_flag, point_mode_flag,
        point_norm_flag, perceptual_flag, vgg_weights_flag;
    double keep_flag = -1.0, keep_min_flag = -1.0, keep_max_flag = -1.0, lr_flag = -1.0;
    double lambda_fm_flag = -1.0, lambda_vgg_flag = -1.0, lambda_point_flag = -1.0;
    int block_flag = -1, batch_flag = -1, image_size_flag = -1;
    int64_t iters_flag = -2, epochs_flag = -2, ckpt_every_flag = -1, train_count_flag = -2,
            val_count_flag = -2;
    uint64_t seed_flag = 0;
    bool seed_set = false, frozen_flag = false, decay_flag = false;
    std::string train_dir_flag, val_dir_flag, donor_dir_flag, out_flag;

    auto* train_cmd = app.add_subcommand("train", "run the optimization loop");
    train_cmd->add_option("--config", config_path, "experiment config JSON");
    train_cmd->add_option("--train-dir", train_dir_flag, "training image folder");
    train_cmd->add_option("--val-dir", val_dir_flag, "validation image folder");
    train_cmd->add_option("--donor", donor_dir_flag, "donor image folder");
    train_cmd->add_option("--out", out_flag, "output directory");
    train_cmd->add_option("--kind", kind_flag, "corruption kind");
    train_cmd->add_option("--keep", keep_flag, "retained pixel fraction");
    train_cmd->add_option("--keep-min", keep_min_flag, "lower bound for per-sample keep draw");
    train_cmd->add_option("--keep-max", keep_max_flag, "upper bound for per-sample keep draw");
    train_cmd->add_option("--block-size", block_flag, "block side");
    train_cmd->add_option("--max-iterations", iters_flag, "iteration budget");
    train_cmd->add_option("--epochs", epochs_flag, "epoch budget");
    train_cmd->add_option("--batch-size", batch_flag, "batch size");
    train_cmd->add_option("--lr", lr_flag, "Adam learning rate");
    train_cmd->add_option("--image-size", image_size_flag, "square training resolution");
    train_cmd->add_option("--seed", seed_flag, "master seed")->each([&](const std::string&) {
        seed_set = true;
    });
    train_cmd->add_option("--checkpoint-every", ckpt_every_flag, "checkpoint interval");
    train_cmd->add_option("--train-count", train_count_flag, "training image count");
    train_cmd->add_option("--val-count", val_count_flag, "validation image count");
    train_cmd->add_option("--lambda-fm", lambda_fm_flag, "feature matching weight");
    train_cmd->add_option("--lambda-vgg", lambda_vgg_flag, "perceptual weight");
    train_cmd->add_option("--lambda-point", lambda_point_flag, "point loss weight");
    train_cmd->add_option("--point-loss", point_loss_flag, "auto/on/off");
    train_cmd->add_option("--point-mode", point_mode_flag, "l2/l1/none");
    train_cmd->add_option("--point-norm", point_norm_flag, "mean/sum");
    train_cmd->add_option("--adv-mode", adv_mode_flag, "vanilla_log/least_squares");
    train_cmd->add_option("--d-aggregation", d_agg_flag, "sum/max generator aggregation");
    train_cmd->add_option("--perceptual", perceptual_flag, "random_stack/vgg19");
    train_cmd->add_option("--vgg-weights", vgg_weights_flag, "extractor weight file");
    train_cmd->add_flag("--frozen-corruption", frozen_flag, "fixed corruption across epochs");
    train_cmd->add_flag("--linear-lr-decay", decay_flag, "linear learning-rate decay");
    train_cmd->add_option("--resume", resume, "checkpoint base path to resume from");

    ReconstructOptions ropt;
    auto* rec = app.add_subcommand("reconstruct", "run inference on images");
    rec->add_option("--checkpoint", ropt.checkpoint, "checkpoint base path")->required();
    rec->add_option("--input", ropt.input, "image file or folder")->required();
    rec->add_option("--out", ropt.out, "output folder")->required();
    rec->add_option("--real-dir", ropt.real_dir, "reference images for triptychs");
    rec->add_option("--target-size", ropt.target_size, "resize edge (0: native size)");
    rec->add_flag("--dump-triptych", ropt.triptych, "write source|recon[|real] strips");

    EvaluateOptions eopt;
    auto* ev = app.add_subcommand("evaluate", "PSNR/SSIM grid over corruption specs");
    ev->add_option("--checkpoint", eopt.checkpoint, "checkpoint base path");
    ev->add_flag("--baseline", eopt.baseline, "score the corrupted source (no model)");
    ev->add_option("--val", eopt.val_dir, "validation image folder");
    ev->add_option("--val-count", eopt.val_count, "validation image count");
    ev->add_option("--donor", eopt.donor_dir, "donor image folder");
    ev->add_option("--kind,--compare", eopt.kinds, "comma list of corruption kinds");
    ev->add_option("--keep", eopt.keeps, "comma list of keep fractions");
    ev->add_option("--block-size", eopt.block_sizes, "comma list of block sizes");
    ev->add_option("--target-size", eopt.target_size, "square resize edge");
    ev->add_option("--seed", eopt.seed, "evaluation seed (frozen corruption)");
    ev->add_option("--out", eopt.out, "output directory")->required();
    ev->add_flag("--ablate-point-loss", eopt.ablate, "train and compare L2/L1/none point losses");
    ev->add_option("--config", eopt.config_path, "experiment config for the ablation");

    PlotOptions popt;
    auto* pl = app.add_subcommand("plot", "render metric curves from a CSV");
    pl->add_option("--metrics", popt.metrics, "metrics.csv from evaluate")->required();
    pl->add_option("--out", popt.out, "output SVG path")->required();
    pl->add_option("--metric", popt.metric, "psnr or ssim");
    pl->add_option("--compare", popt.compare, "comma list of kinds to overlay");

    std::vector<std::string> argv(args);
    try {
        app.parse(std::vector<std::string>(argv.rbegin(), argv.rend()));
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

#ifdef _OPENMP
    if (workers > 0) omp_set_num_threads(workers);
#endif

    try {
        if (corrupt->parsed()) return cmd_corrupt(copt);
        if (train_cmd->parsed()) {
            ExperimentConfig config =
                config_path.empty() ? ExperimentConfig{} : ExperimentConfig::from_file(config_path);
            if (!train_dir_flag.empty()) config.train_dir = train_dir_flag;
            if (!val_dir_flag.empty()) config.val_dir = val_dir_flag;
            if (!donor_dir_flag.empty()) config.donor_dir = donor_dir_flag;
            if (!out_flag.empty()) config.out_dir = out_flag;
            if (!kind_flag.empty()) config.task_kind = kind_flag;
            if (keep_flag >= 0.0) config.keep = keep_flag;
            if (keep_min_flag >= 0.0) config.keep_min = keep_min_flag;
            if (keep_max_flag >= 0.0) config.keep_max = keep_max_flag;
            if (block_flag >= 0) config.block_size = block_flag;
            if (iters_flag >= -1) config.train.max_iterations = iters_flag;
            if (epochs_flag >= -1) config.train.epochs = epochs_flag;
            if (batch_flag >= 0) config.train.batch_size = batch_flag;
            if (lr_flag >= 0.0) config.train.learning_rate = lr_flag;
            if (image_size_flag >= 0) config.train.image_size = image_size_flag;
            if (seed_set) config.train.seed = seed_flag;
            if (ckpt_every_flag >= 0) config.train.checkpoint_every = ckpt_every_flag;
            if (train_count_flag >= -1) config.train_count = train_count_flag;
            if (val_count_flag >= -1) config.val_count = std::max<int64_t>(0, val_count_flag);
            if (lambda_fm_flag >= 0.0) config.train.weights.lambda_fm = lambda_fm_flag;
            if (lambda_vgg_flag >= 0.0) config.train.weights.lambda_vgg = lambda_vgg_flag;
            if (lambda_point_flag >= 0.0) config.train.weights.lambda_point = lambda_point_flag;
            if (!point_loss_flag.empty()) config.point_loss = point_loss_flag;
            if (!point_mode_flag.empty())
                config.train.weights.point_mode = losses::point_mode_from_string(point_mode_flag);
            if (!point_norm_flag.empty())
                config.train.weights.point_normalization =
                    losses::point_normalization_from_string(point_norm_flag);
            if (!adv_mode_flag.empty())
                config.train.weights.adversarial_mode =
                    losses::adversarial_mode_from_string(adv_mode_flag);
            if (!d_agg_flag.empty())
                config.train.weights.d_aggregation = losses::d_aggregation_from_string(d_agg_flag);
            if (!perceptual_flag.empty()) config.perceptual_kind = perceptual_flag;
            if (!vgg_weights_flag.empty()) config.vgg_weights = vgg_weights_flag;
            if (frozen_flag) config.frozen_corruption = true;
            if (decay_flag) config.train.linear_lr_decay = true;
            return cmd_train(std::move(config), resume);
        }
        if (rec->parsed()) return cmd_reconstruct(ropt);
        if (ev->parsed()) return cmd_evaluate(eopt);
        if (pl->parsed()) return cmd_plot(popt);
        return kExitConfig;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const losses::numeric_error& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return kExitRuntime;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
}

}  // namespace recongan::cli
