#pragma once

#include <vector>

#include "lga/data.hpp"
#include "lga/model.hpp"

namespace lga {

enum class Reduction { mean, sum };

/// Joint objective components; total is always constructed as
/// l_cls + lambda_mask * l_mask, so the identity holds exactly.
struct LossBreakdown {
    double l_cls = 0.0;
    double l_mask = 0.0;
    double lambda_mask = 1.0;
    double total = 0.0;
};

/// Numerically stable softmax.
std::vector<double> softmax(const std::vector<double>& logits);

/// Cross-entropy of softmax(logits) at gt_class, via the log-sum-exp shift.
double classification_loss(const std::vector<double>& logits, int gt_class);

/// Squared L2 distance between the predicted heatmap and the target;
/// mean reduction divides by the cell count.
double mask_loss(const Tensor& m_star, const HeatmapTarget& m_gt, Reduction reduction = Reduction::mean);

LossBreakdown combined_loss(const ForwardOutputs& outputs, int gt_class, const HeatmapTarget& m_gt,
                            double lambda_mask = 1.0, Reduction reduction = Reduction::mean);

/// d l_cls / d logits = softmax(logits) - onehot(gt).
std::vector<double> classification_loss_grad(const std::vector<double>& logits, int gt_class);

/// d l_mask / d m_star; mean reduction scales by 1/(h*w).
Tensor mask_loss_grad(const Tensor& m_star, const HeatmapTarget& m_gt, Reduction reduction = Reduction::mean);

} // namespace lga
