#include "recongan/data/dataset.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "recongan/core/image_io.hpp"
#include "recongan/core/rng.hpp"

namespace fs = std::filesystem;

namespace recongan::data {

namespace {

// Decoded 256x256 float images are ~0.75 MB; cache folders up to this many
// entries and re-decode on every access beyond that.
constexpr size_t kCacheLimit = 512;

bool has_image_extension(const fs::path& p) {
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return ext == ".png" || ext == ".jpg" || ext == ".jpeg" || ext == ".bmp";
}

}  // namespace

std::vector<std::string> DatasetManifest::train_paths() const {
    return {entries.begin(), entries.begin() + train_count};
}

std::vector<std::string> DatasetManifest::val_paths() const {
    return {entries.begin() + train_count, entries.begin() + train_count + val_count};
}

std::string DatasetManifest::to_json() const {
    nlohmann::json j;
    j["entries"] = entries;
    j["target_size"] = target_size;
    j["split"] = {{"train_count", train_count}, {"val_count", val_count}};
    j["seed"] = seed;
    return j.dump(2);
}

DatasetManifest DatasetManifest::from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    DatasetManifest m;
    m.entries = j.at("entries").get<std::vector<std::string>>();
    m.target_size = j.at("target_size").get<int>();
    m.train_count = j.at("split").at("train_count").get<int64_t>();
    m.val_count = j.at("split").at("val_count").get<int64_t>();
    m.seed = j.at("seed").get<uint64_t>();
    if (m.train_count + m.val_count > static_cast<int64_t>(m.entries.size()))
        throw std::invalid_argument("manifest: split exceeds entry count");
    return m;
}

void DatasetManifest::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("failed to write manifest: " + path);
    out << to_json() << "\n";
}

DatasetManifest DatasetManifest::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("failed to read manifest: " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return from_json(text);
}

std::vector<std::string> list_images(const std::string& dir) {
    if (!fs::is_directory(dir)) throw std::invalid_argument("not a directory: " + dir);
    std::vector<std::string> paths;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file() && has_image_extension(entry.path()))
            paths.push_back(entry.path().string());
    std::sort(paths.begin(), paths.end());
    return paths;
}

DatasetManifest split_manifest(std::vector<std::string> paths, int64_t train_count,
                               int64_t val_count, uint64_t seed, int target_size) {
    if (train_count < 0 || val_count < 0)
        throw std::invalid_argument("split_manifest: negative split count");
    if (train_count + val_count > static_cast<int64_t>(paths.size()))
        throw std::invalid_argument("split_manifest: insufficient paths (" +
                                    std::to_string(paths.size()) + " available, " +
                                    std::to_string(train_count + val_count) + " requested)");

    // Fisher-Yates on the sorted list so the split is a pure function of seed.
    std::sort(paths.begin(), paths.end());
    Rng rng(mix_seed(seed, 0x73706c6974ULL));  // "split" stream
    for (size_t i = paths.size(); i > 1; --i)
        std::swap(paths[i - 1], paths[rng.bounded(i)]);

    DatasetManifest m;
    m.entries = std::move(paths);
    m.target_size = target_size;
    m.train_count = train_count;
    m.val_count = val_count;
    m.seed = seed;
    return m;
}

corruption::CorruptionSpec TaskSampler::sample_spec(uint64_t sample_seed) const {
    corruption::CorruptionSpec spec;
    spec.kind = kind;
    spec.block_size = block_size;
    spec.seed = sample_seed;
    if (corruption::is_point_kind(kind)) {
        if (keep_min == keep_max) {
            spec.keep_fraction = keep_min;
        } else {
            Rng rng(mix_seed(sample_seed, 0x6b656570ULL));  // "keep" stream
            spec.keep_fraction = rng.uniform(keep_min, keep_max);
        }
    }
    spec.validate();
    return spec;
}

SampleStream::SampleStream(DatasetManifest manifest, TaskSampler task,
                           std::optional<DatasetManifest> donor_manifest, uint64_t seed,
                           bool frozen_corruption)
    : manifest_(std::move(manifest)),
      task_(task),
      donor_(std::move(donor_manifest)),
      seed_(seed),
      frozen_(frozen_corruption) {
    if (task_.kind == corruption::CorruptionKind::clutter_color_block && !donor_)
        throw std::invalid_argument("sample_stream: clutter_color_block requires a donor manifest");
    size_t cached = manifest_.entries.size();
    if (donor_) cached += donor_->entries.size();
    cache_enabled_ = cached <= kCacheLimit;
}

const Tensor& SampleStream::image_at(const DatasetManifest& m, int64_t entry_index) {
    const std::string& path = m.entries[static_cast<size_t>(entry_index)];
    if (cache_enabled_) {
        auto it = cache_.find(path);
        if (it != cache_.end()) return it->second;
        auto [slot, inserted] =
            cache_.emplace(path, imageio::load_and_normalize(path, m.target_size));
        return slot->second;
    }
    static thread_local Tensor scratch;
    scratch = imageio::load_and_normalize(path, m.target_size);
    return scratch;
}

corruption::CorruptedSample SampleStream::sample(int64_t epoch, int64_t index) {
    if (index < 0 || index >= epoch_size())
        throw std::invalid_argument("sample_stream: index out of range");

    // Epoch-specific permutation of the training entries.
    const int64_t n = epoch_size();
    std::vector<int64_t> perm(static_cast<size_t>(n));
    for (int64_t i = 0; i < n; ++i) perm[static_cast<size_t>(i)] = i;
    Rng perm_rng(mix_seed(seed_, 0x7065726dULL, static_cast<uint64_t>(epoch)));
    for (size_t i = perm.size(); i > 1; --i)
        std::swap(perm[i - 1], perm[perm_rng.bounded(i)]);

    const int64_t entry = perm[static_cast<size_t>(index)];
    const uint64_t corruption_epoch = frozen_ ? 0 : static_cast<uint64_t>(epoch);
    const uint64_t sample_seed =
        mix_seed(seed_, 0x73616d70ULL, corruption_epoch, static_cast<uint64_t>(entry));

    const corruption::CorruptionSpec spec = task_.sample_spec(sample_seed);

    if (spec.kind == corruption::CorruptionKind::clutter_color_block) {
        Rng donor_rng(mix_seed(sample_seed, 0x646f6e6fULL));  // "dono" stream
        const int64_t donor_entry =
            static_cast<int64_t>(donor_rng.bounded(donor_->entries.size()));
        // Copy the donor before loading the real image; image_at may reuse a
        // scratch buffer when the cache is disabled.
        Tensor donor_img = image_at(*donor_, donor_entry);
        const Tensor& real = image_at(manifest_, entry);
        return corruption::corrupt(real, spec, &donor_img);
    }
    const Tensor& real = image_at(manifest_, entry);
    return corruption::corrupt(real, spec, nullptr);
}

}  // namespace recongan::data
