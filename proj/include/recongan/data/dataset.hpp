#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "recongan/corruption/corruption.hpp"

namespace recongan::data {

/// Deterministic shuffled split of an image corpus. Entries hold the shuffled
/// order; train entries come first, then validation entries.
struct DatasetManifest {
    std::vector<std::string> entries;
    int target_size = 256;
    int64_t train_count = 0;
    int64_t val_count = 0;
    uint64_t seed = 0;

    std::vector<std::string> train_paths() const;
    std::vector<std::string> val_paths() const;

    std::string to_json() const;
    static DatasetManifest from_json(const std::string& text);
    void save(const std::string& path) const;
    static DatasetManifest load(const std::string& path);
};

/// Sorted list of raster image files directly inside a folder.
std::vector<std::string> list_images(const std::string& dir);

DatasetManifest split_manifest(std::vector<std::string> paths, int64_t train_count,
                               int64_t val_count, uint64_t seed, int target_size = 256);

/// Draws one CorruptionSpec per training sample. keep_min == keep_max pins the
/// fraction; otherwise it is drawn uniformly from the range.
struct TaskSampler {
    corruption::CorruptionKind kind = corruption::CorruptionKind::uniform_points_white;
    double keep_min = 0.1;
    double keep_max = 0.1;
    int block_size = 128;

    corruption::CorruptionSpec sample_spec(uint64_t sample_seed) const;
};

/// Streams (corrupted, real) pairs. Sample content depends only on
/// (stream seed, epoch, entry) so prefetching can never change results; with
/// frozen corruption the epoch does not enter the corruption seed.
class SampleStream {
public:
    SampleStream(DatasetManifest manifest, TaskSampler task,
                 std::optional<DatasetManifest> donor_manifest, uint64_t seed,
                 bool frozen_corruption = false);

    int64_t epoch_size() const { return manifest_.train_count; }

    /// index in [0, epoch_size); each training entry appears exactly once per
    /// epoch, in an epoch-specific shuffled order.
    corruption::CorruptedSample sample(int64_t epoch, int64_t index);

    const DatasetManifest& manifest() const { return manifest_; }

private:
    const Tensor& image_at(const DatasetManifest& m, int64_t entry_index);

    DatasetManifest manifest_;
    TaskSampler task_;
    std::optional<DatasetManifest> donor_;
    uint64_t seed_ = 0;
    bool frozen_ = false;
    bool cache_enabled_ = false;
    std::unordered_map<std::string, Tensor> cache_;
};

}  // namespace recongan::data
