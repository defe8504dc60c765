#include "recongan/eval/evaluate.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>

#include "recongan/core/image_io.hpp"
#include "recongan/core/rng.hpp"
#include "recongan/core/svg_plot.hpp"

namespace fs = std::filesystem;

namespace recongan::eval {

namespace {

double spec_param(const corruption::CorruptionSpec& spec) {
    return corruption::is_point_kind(spec.kind) ? spec.keep_fraction
                                                : static_cast<double>(spec.block_size);
}

std::string row_csv(const MetricsRow& r) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%s,%.9g,%s,%.9g,%.9g", r.kind.c_str(), r.param,
                  r.image_id.c_str(), r.psnr_db, r.ssim);
    return buf;
}

}  // namespace

std::vector<SpecSummary> MetricsReport::summaries() const {
    std::map<std::pair<std::string, double>, std::vector<const MetricsRow*>> groups;
    for (const auto& r : rows) groups[{r.kind, r.param}].push_back(&r);

    std::vector<SpecSummary> out;
    for (const auto& [key, members] : groups) {
        SpecSummary s;
        s.kind = key.first;
        s.param = key.second;
        s.count = static_cast<int>(members.size());
        double psum = 0.0, ssum = 0.0;
        for (const auto* r : members) {
            psum += r->psnr_db;
            ssum += r->ssim;
        }
        s.psnr_mean = psum / s.count;
        s.ssim_mean = ssum / s.count;
        double pvar = 0.0, svar = 0.0;
        for (const auto* r : members) {
            pvar += (r->psnr_db - s.psnr_mean) * (r->psnr_db - s.psnr_mean);
            svar += (r->ssim - s.ssim_mean) * (r->ssim - s.ssim_mean);
        }
        s.psnr_std = std::sqrt(pvar / s.count);
        s.ssim_std = std::sqrt(svar / s.count);
        out.push_back(std::move(s));
    }
    return out;
}

std::string MetricsReport::to_csv() const {
    std::string out = "kind,param,image_id,psnr_db,ssim\n";
    for (const auto& r : rows) out += row_csv(r) + "\n";
    return out;
}

std::string MetricsReport::summary_csv() const {
    std::string out = "kind,param,count,psnr_mean,psnr_std,ssim_mean,ssim_std\n";
    for (const auto& s : summaries()) {
        char buf[256];
        std::snprintf(buf, sizeof(buf), "%s,%.9g,%d,%.9g,%.9g,%.9g,%.9g", s.kind.c_str(), s.param,
                      s.count, s.psnr_mean, s.psnr_std, s.ssim_mean, s.ssim_std);
        out += std::string(buf) + "\n";
    }
    return out;
}

MetricsReport evaluate_grid(models::Generator* generator, const data::DatasetManifest& val_set,
                            const std::vector<corruption::CorruptionSpec>& specs, uint64_t seed,
                            const std::optional<data::DatasetManifest>& donor_manifest,
                            const std::string& checkpoint_id) {
    if (specs.empty()) throw std::invalid_argument("evaluate_grid: no corruption specs");
    const auto val_paths = val_set.val_paths();
    if (val_paths.empty()) throw std::invalid_argument("evaluate_grid: empty validation set");

    MetricsReport report;
    report.checkpoint_id = checkpoint_id;
    report.dataset_id = val_paths.front() + "..+" + std::to_string(val_paths.size());
    report.seed = seed;

    for (size_t si = 0; si < specs.size(); ++si) {
        const bool needs_donor = specs[si].kind == corruption::CorruptionKind::clutter_color_block;
        if (needs_donor && !donor_manifest)
            throw std::invalid_argument("evaluate_grid: clutter spec requires a donor manifest");

        for (size_t ii = 0; ii < val_paths.size(); ++ii) {
            corruption::CorruptionSpec spec = specs[si];
            spec.seed = mix_seed(seed, 0x6576616cULL, si, ii);  // frozen per (spec, image)

            const Tensor real = imageio::load_and_normalize(val_paths[ii], val_set.target_size);
            corruption::CorruptedSample sample;
            if (needs_donor) {
                Rng donor_rng(mix_seed(spec.seed, 0x646f6e6fULL));
                const auto& donors = donor_manifest->entries;
                const Tensor donor = imageio::load_and_normalize(
                    donors[donor_rng.bounded(donors.size())], val_set.target_size);
                sample = corruption::corrupt(real, spec, &donor);
            } else {
                sample = corruption::corrupt(real, spec, nullptr);
            }

            Tensor recon;
            if (generator != nullptr) {
                const int h = sample.source.dim(1), w = sample.source.dim(2);
                Tensor batch = sample.source.reshaped({1, 3, h, w});
                Tensor out = generator->forward(batch, /*training=*/false, /*grad=*/false);
                recon = out.reshaped({3, h, w});
            } else {
                recon = sample.source;  // identity baseline
            }

            MetricsRow row;
            row.kind = corruption::to_string(spec.kind);
            row.param = spec_param(spec);
            row.image_id = fs::path(val_paths[ii]).stem().string();
            row.psnr_db = psnr(recon, real);
            row.ssim = ssim(recon, real);
            report.rows.push_back(std::move(row));
        }
    }
    return report;
}

void write_report(const std::string& out_dir, const MetricsReport& report) {
    fs::create_directories(out_dir);
    {
        std::ofstream out(out_dir + "/metrics.csv");
        out << report.to_csv();
    }
    {
        std::ofstream out(out_dir + "/metrics_summary.csv");
        out << report.summary_csv();
    }

    std::map<std::string, plot::Series> psnr_series, ssim_series;
    for (const auto& s : report.summaries()) {
        psnr_series[s.kind].label = s.kind;
        psnr_series[s.kind].points.emplace_back(s.param, s.psnr_mean);
        ssim_series[s.kind].label = s.kind;
        ssim_series[s.kind].points.emplace_back(s.param, s.ssim_mean);
    }
    std::vector<plot::Series> pv, sv;
    for (auto& [kind, series] : psnr_series) pv.push_back(std::move(series));
    for (auto& [kind, series] : ssim_series) sv.push_back(std::move(series));
    plot::write_line_plot(out_dir + "/psnr.svg", "Reconstruction PSNR", "corruption parameter",
                          "PSNR (dB)", pv);
    plot::write_line_plot(out_dir + "/ssim.svg", "Reconstruction SSIM", "corruption parameter",
                          "SSIM", sv);
}

std::vector<AblationResult> ablate_point_loss(
    const train::TrainConfig& base_config, const data::DatasetManifest& train_manifest,
    const data::TaskSampler& task, const std::optional<data::DatasetManifest>& donor_manifest,
    const data::DatasetManifest& val_set, const std::vector<corruption::CorruptionSpec>& specs,
    uint64_t eval_seed, const std::string& out_dir,
    const std::shared_ptr<losses::FeatureExtractor>& extractor, std::ostream* progress) {
    const losses::PointLossMode variants[] = {losses::PointLossMode::l2, losses::PointLossMode::l1,
                                              losses::PointLossMode::none};
    std::vector<AblationResult> results;
    for (const auto variant : variants) {
        train::TrainConfig config = base_config;
        config.weights.point_mode = variant;
        config.weights.point_loss_enabled = variant != losses::PointLossMode::none;

        const std::string variant_dir =
            out_dir + "/point_" + losses::to_string(variant);
        train::Trainer trainer(config, extractor);
        data::SampleStream stream(train_manifest, task, donor_manifest, config.seed);
        if (progress) *progress << "ablation variant " << losses::to_string(variant) << "\n";
        const auto trained = train::train_loop(trainer, stream, variant_dir, progress);

        AblationResult result;
        result.variant = losses::to_string(variant);
        result.report = evaluate_grid(&trainer.generator(), val_set, specs, eval_seed,
                                      donor_manifest, trained.final_checkpoint);
        write_report(variant_dir + "/eval", result.report);
        results.push_back(std::move(result));
    }

    fs::create_directories(out_dir);
    std::ofstream combined(out_dir + "/ablation.csv");
    combined << "variant,kind,param,image_id,psnr_db,ssim\n";
    for (const auto& r : results)
        for (const auto& row : r.report.rows)
            combined << r.variant << "," << row_csv(row) << "\n";
    return results;
}

}  // namespace recongan::eval
