#include "lga/loss.hpp"

#include <algorithm>
#include <cmath>

namespace lga {

namespace {

void check_gt(const std::vector<double>& logits, int gt_class) {
    if (gt_class < 0 || gt_class >= static_cast<int>(logits.size()))
        throw IndexOutOfRange("gt class " + std::to_string(gt_class) + " out of [0," +
                              std::to_string(logits.size()) + ")");
}

double max_logit(const std::vector<double>& logits) {
    double m = logits[0];
    for (double x : logits) m = std::max(m, x);
    return m;
}

} // namespace

std::vector<double> softmax(const std::vector<double>& logits) {
    const double m = max_logit(logits);
    std::vector<double> out(logits.size());
    double z = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - m);
        z += out[i];
    }
    for (auto& x : out) x /= z;
    return out;
}

double classification_loss(const std::vector<double>& logits, int gt_class) {
    check_gt(logits, gt_class);
    const double m = max_logit(logits);
    double z = 0.0;
    for (double x : logits) z += std::exp(x - m);
    return std::log(z) - (logits[static_cast<std::size_t>(gt_class)] - m);
}

double mask_loss(const Tensor& m_star, const HeatmapTarget& m_gt, Reduction reduction) {
    if (m_star.shape != m_gt.grid.shape)
        throw DimensionMismatch("heatmap and target shapes differ");
    double s = 0.0;
    for (std::size_t i = 0; i < m_star.v.size(); ++i) {
        const double d = m_star.v[i] - m_gt.grid.v[i];
        s += d * d;
    }
    if (reduction == Reduction::mean) s /= static_cast<double>(m_star.v.size());
    return s;
}

LossBreakdown combined_loss(const ForwardOutputs& outputs, int gt_class, const HeatmapTarget& m_gt,
                            double lambda_mask, Reduction reduction) {
    LossBreakdown b;
    b.l_cls = classification_loss(outputs.logits, gt_class);
    b.l_mask = mask_loss(outputs.m_star, m_gt, reduction);
    b.lambda_mask = lambda_mask;
    b.total = b.l_cls + lambda_mask * b.l_mask;
    return b;
}

std::vector<double> classification_loss_grad(const std::vector<double>& logits, int gt_class) {
    check_gt(logits, gt_class);
    auto g = softmax(logits);
    g[static_cast<std::size_t>(gt_class)] -= 1.0;
    return g;
}

Tensor mask_loss_grad(const Tensor& m_star, const HeatmapTarget& m_gt, Reduction reduction) {
    if (m_star.shape != m_gt.grid.shape)
        throw DimensionMismatch("heatmap and target shapes differ");
    Tensor g(m_star.shape);
    const double scale =
        reduction == Reduction::mean ? 2.0 / static_cast<double>(m_star.v.size()) : 2.0;
    for (std::size_t i = 0; i < m_star.v.size(); ++i)
        g.v[i] = scale * (m_star.v[i] - m_gt.grid.v[i]);
    return g;
}

} // namespace lga
