#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lga/augment.hpp"
#include "lga/data.hpp"
#include "lga/mask.hpp"
#include "lga/tensor.hpp"

namespace lga {

struct ManifestRecord {
    std::string image; // path relative to the manifest directory
    std::string label_name;
    int label = -1;
    std::string split; // train | val | test
    std::vector<BoundingBox> boxes;
    std::optional<Keypoints> keypoints;

    bool has_person_evidence() const { return !boxes.empty() || keypoints.has_value(); }
};

struct Manifest {
    ActionLabelSpace label_space;
    std::vector<ManifestRecord> records;
    std::string root_dir; // directory the image paths are relative to

    std::vector<int> split_indices(const std::string& split) const;
    std::string resolve_image(const ManifestRecord& record) const;
};

/// Parses and validates a line-delimited manifest: a labels header line
/// followed by one record object per line. Violations fail hard with the
/// offending line number.
Manifest load_manifest(const std::string& path);

/// Canonical emission; load followed by save reproduces the file.
void save_manifest(const Manifest& manifest, const std::string& path);

/// Controlled misleading-context benchmark: each image carries one articulated
/// stick-figure agent whose pose encodes the action class, and one solid-shape
/// distractor whose identity matches the label with probability
/// train_correlation on the train split (test_correlation elsewhere;
/// a negative value means uniform, i.e. 1/C).
struct SyntheticSpec {
    int num_classes = 4;
    int train_samples = 400;
    int val_samples = 0;
    int test_samples = 200;
    int canvas_size = 96; // must be a multiple of 32
    double train_correlation = 1.0;
    double test_correlation = -1.0;
    std::uint64_t seed = 0;
};

/// Renders images under out_dir/images, writes out_dir/manifest.jsonl and
/// returns the manifest. Fully deterministic in spec.seed.
Manifest generate_synthetic(const SyntheticSpec& spec, const std::string& out_dir);

/// The maximum class count generate_synthetic supports (distinct poses/shapes).
int synthetic_max_classes();

struct BatchOptions {
    int image_size = 448;
    int heatmap_stride = 32;
    int batch_size = 12;
    bool training = true;     // epoch shuffle + augmentation
    bool with_targets = true; // rasterize person masks into heatmap targets
    MaskTarget mask_target = MaskTarget::soft;
    bool rotation_signed = true;
    double min_keypoint_extent = 32.0;
    std::uint64_t seed = 0;
    std::uint64_t epoch = 0;
};

struct Batch {
    std::vector<Tensor> images; // {3,S,S} each
    std::vector<int> labels;
    std::vector<HeatmapTarget> targets; // aligned with images; empty grid when absent
    std::vector<bool> has_target;
    std::vector<int> sample_indices; // manifest record indices
};

/// Streams one epoch of batches. Order is a pure function of (seed, epoch)
/// and augmentation draws are pure functions of (seed, epoch, record index),
/// so epochs are reproducible regardless of prefetch order. The last short
/// batch is included.
class BatchIterator {
public:
    BatchIterator(const Manifest& manifest, const std::string& split, BatchOptions options);

    /// Fills the next batch; false at end of epoch.
    bool next(Batch& batch);

    /// Advances past n batches without decoding images.
    void skip(int n);

    long num_samples() const { return static_cast<long>(order_.size()); }
    int num_batches() const;

private:
    const Manifest* manifest_;
    BatchOptions options_;
    std::vector<int> order_;
    std::size_t cursor_ = 0;
};

} // namespace lga
