#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lga/data.hpp"
#include "lga/tensor.hpp"

namespace lga {

/// Post-softmax scores for N samples over C classes, plus ground truth.
struct ScoreTable {
    Tensor scores; // {N, C}, rows sum to 1
    std::vector<int> gt_labels;

    int num_samples() const { return scores.shape.empty() ? 0 : scores.shape[0]; }
    int num_classes() const { return scores.shape.empty() ? 0 : scores.shape[1]; }
};

/// Per-class AP, mAP over the defined classes, supports, and (when measured
/// separately from ground-truth masks) the mean attention-in-mask statistic.
struct EvalReport {
    std::vector<std::optional<double>> per_class_ap;
    std::vector<long> per_class_support;
    double map = 0.0;
    std::optional<double> mean_attention_in_mask;
};

/// All-points area under the precision-recall curve, ranking by descending
/// score with ties broken by original index. nullopt when there are no
/// positives.
std::optional<double> average_precision(const std::vector<double>& scores,
                                        const std::vector<bool>& positives);

/// One-vs-rest AP per class from the score columns; classes without
/// positives are excluded from the mAP.
EvalReport evaluate(const ScoreTable& table);

struct ClassDelta {
    int class_index = 0;
    double delta = 0.0; // ap_a - ap_b
};

/// Per-class AP deltas (a minus b), sorted by delta descending. Classes
/// undefined in either report contribute a delta of 0.
std::vector<ClassDelta> compare_runs(const EvalReport& a, const EvalReport& b);

/// Human-readable per-class table.
void write_report_text(const EvalReport& report, const ActionLabelSpace& labels,
                       const std::string& path);
/// Machine-readable variant.
void write_report_json(const EvalReport& report, const ActionLabelSpace& labels,
                       const std::string& path);

/// Two-column (class name, delta) table for plotting tools.
void write_deltas_tsv(const std::vector<ClassDelta>& deltas, const ActionLabelSpace& labels,
                      const std::string& path);

} // namespace lga
