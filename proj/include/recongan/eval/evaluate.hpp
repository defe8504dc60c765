#pragma once

#include <optional>
#include <string>
#include <vector>

#include "recongan/data/dataset.hpp"
#include "recongan/eval/metrics.hpp"
#include "recongan/train/trainer.hpp"

namespace recongan::eval {

struct MetricsRow {
    std::string kind;
    double param = 0.0;  // keep fraction for point regimes, block size for blocks
    std::string image_id;
    double psnr_db = 0.0;
    double ssim = 0.0;
};

struct SpecSummary {
    std::string kind;
    double param = 0.0;
    int count = 0;
    double psnr_mean = 0.0, psnr_std = 0.0;
    double ssim_mean = 0.0, ssim_std = 0.0;
};

struct MetricsReport {
    std::vector<MetricsRow> rows;  // ordered by (spec, image id)
    std::string checkpoint_id;
    std::string dataset_id;
    uint64_t seed = 0;

    std::vector<SpecSummary> summaries() const;
    std::string to_csv() const;       // kind,param,image_id,psnr_db,ssim
    std::string summary_csv() const;  // kind,param,count,psnr_mean,psnr_std,ssim_mean,ssim_std
};

/// Reconstruct every validation image under every spec and tabulate PSNR/SSIM
/// against the real image. Corruption seeds derive from (seed, spec index,
/// image index) so competing checkpoints see identical inputs; the seed field
/// of the passed specs is ignored. A null generator scores the corrupted
/// source itself (identity baseline).
MetricsReport evaluate_grid(models::Generator* generator, const data::DatasetManifest& val_set,
                            const std::vector<corruption::CorruptionSpec>& specs, uint64_t seed,
                            const std::optional<data::DatasetManifest>& donor_manifest,
                            const std::string& checkpoint_id);

/// metrics.csv, metrics_summary.csv and PSNR/SSIM curves (one series per
/// corruption kind, parameter on the x axis) under out_dir.
void write_report(const std::string& out_dir, const MetricsReport& report);

struct AblationResult {
    std::string variant;  // l2 / l1 / none
    MetricsReport report;
};

/// Trains one desk-scale model per point-loss variant from identical seeds and
/// evaluates all of them on a common frozen grid. Artifacts land in
/// out_dir/point_<variant>; the combined table in out_dir/ablation.csv.
std::vector<AblationResult> ablate_point_loss(
    const train::TrainConfig& base_config, const data::DatasetManifest& train_manifest,
    const data::TaskSampler& task, const std::optional<data::DatasetManifest>& donor_manifest,
    const data::DatasetManifest& val_set, const std::vector<corruption::CorruptionSpec>& specs,
    uint64_t eval_seed, const std::string& out_dir,
    const std::shared_ptr<losses::FeatureExtractor>& extractor, std::ostream* progress = nullptr);

}  // namespace recongan::eval
