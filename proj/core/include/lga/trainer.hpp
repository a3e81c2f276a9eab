#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lga/checkpoint.hpp"
#include "lga/dataset.hpp"
#include "lga/eval.hpp"
#include "lga/loss.hpp"
#include "lga/model.hpp"

namespace lga {

enum class OptimizerKind { adam, momentum };

struct TrainConfig {
    double learning_rate = 1e-5; // paper-scale parity; synthetic runs use 1e-3
    int batch_size = 12;
    int epochs = 10;
    double lambda_mask = 1.0;
    Reduction mask_loss_reduction = Reduction::mean;
    OptimizerKind optimizer = OptimizerKind::adam;
    std::uint64_t seed = 0;
    long checkpoint_every = 0; // steps; 0 keeps only last/best
    int eval_every = 1;        // epochs; 0 disables validation passes
    int image_size = 448;
    MaskTarget mask_target = MaskTarget::soft;
    bool rotation_signed = true;
    ModelConfig model; // num_classes is overwritten from the manifest

    /// Desk-scale preset for the synthetic benchmark: slim backbone, higher
    /// learning rate, canvas-sized inputs.
    static TrainConfig synthetic_defaults();
};

struct TrainResult {
    Checkpoint state;
    double best_val_map = 0.0;
    std::string out_dir;
};

/// Runs the joint optimization, logging one JSONL record per step
/// ({step, epoch, l_cls, l_mask, total}) and one per validation pass
/// ({epoch, step, val_map, mean_attention_in_mask}) to out_dir/metrics.jsonl.
/// Checkpoints land under out_dir. Deterministic end to end in config.seed;
/// resuming from a checkpoint reproduces the uninterrupted trace.
TrainResult train(TrainConfig config, const Manifest& manifest, const std::string& out_dir,
                  const std::string& resume_path = "");

/// Scores a split (no augmentation, manifest order) and, optionally, measures
/// the mean PAM attention-in-mask over samples that carry person evidence.
/// Classification scoring never touches annotation fields.
struct SplitEval {
    ScoreTable table;
    EvalReport report;
};
SplitEval evaluate_split(const ModelParams& params, const Manifest& manifest,
                         const std::string& split, int image_size, bool with_attention,
                         MaskTarget mask_target = MaskTarget::soft,
                         double min_keypoint_extent = 32.0);

struct AblationRun {
    std::uint64_t seed = 0;
    double lambda_mask = 0.0;
    double test_map = 0.0;
    double mean_attention = 0.0;
};

struct AblationReport {
    std::vector<AblationRun> runs; // lambda 0 and 1 per seed
    double mean_map_with = 0.0;
    double mean_map_without = 0.0;
    double mean_attention_with = 0.0;
    double mean_attention_without = 0.0;

    double map_delta() const { return mean_map_with - mean_map_without; }
    double attention_delta() const { return mean_attention_with - mean_attention_without; }
};

/// The with/without-mask-loss comparison: for each seed trains twice with
/// identical configs except lambda_mask in {0, 1}, evaluates the test split,
/// and aggregates the paired deltas. Needs at least 3 seeds. Writes
/// ablation.json, ablation.txt and per-seed class-delta tables to out_dir.
AblationReport ablation(const TrainConfig& base_config, const Manifest& manifest,
                        const std::vector<std::uint64_t>& seeds, const std::string& out_dir);

} // namespace lga
