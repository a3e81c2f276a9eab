#pragma once

// Shared between the unit tests and the acceptance suite.

#include <algorithm>
#include <cmath>

#include "lga/loss.hpp"
#include "lga/model.hpp"
#include "lga/rng.hpp"

namespace lga::testing {

inline ModelConfig toy_model_config(int num_classes = 3) {
    // 16x16 inputs, two stride-2 stages ending at D=8, 4x4 feature maps.
    ModelConfig config;
    config.backbone.stage_channels = {4, 8};
    config.num_classes = num_classes;
    config.cls_channels = 6;
    config.loc_channels = {4, 3};
    return config;
}

struct GradCheck {
    double max_rel_err = 0.0;
    long params_checked = 0;
};

/// Central-difference check of the full combined-loss backward pass over
/// every parameter of a toy model.
inline GradCheck gradient_check(const ModelConfig& config, std::uint64_t seed, int input_side,
                                double lambda_mask, Reduction reduction) {
    ModelParams params = build_model(config, seed);
    RngStream rng(mix64(seed, 0xda7aull));

    Tensor image({3, input_side, input_side});
    for (auto& v : image.v) v = rng.uniform01();
    const int gt = rng.below_int(config.num_classes);
    const int hm = input_side / config.backbone.stride();
    HeatmapTarget target;
    target.grid = Tensor({hm, hm});
    for (auto& v : target.grid.v) v = rng.uniform01();

    auto loss_value = [&]() {
        const ForwardOutputs out = forward(params, image);
        return combined_loss(out, gt, target, lambda_mask, reduction).total;
    };

    Gradients grads = Gradients::zeros_like(params);
    {
        ForwardCache cache;
        const ForwardOutputs out = forward(params, image, &cache);
        const auto dlogits = classification_loss_grad(out.logits, gt);
        Tensor dm = mask_loss_grad(out.m_star, target, reduction);
        for (auto& g : dm.v) g *= lambda_mask;
        backward(params, cache, out, dlogits, dm, grads);
    }

    GradCheck result;
    auto tensors = params.parameter_tensors();
    const double h = 1e-6;
    for (std::size_t t = 0; t < tensors.size(); ++t) {
        for (std::size_t k = 0; k < tensors[t]->v.size(); ++k) {
            double& w = tensors[t]->v[k];
            const double saved = w;
            w = saved + h;
            const double up = loss_value();
            w = saved - h;
            const double down = loss_value();
            w = saved;
            const double fd = (up - down) / (2.0 * h);
            const double analytic = grads.tensors[t].v[k];
            const double denom = std::max(std::fabs(fd), std::fabs(analytic));
            if (denom > 1e-8)
                result.max_rel_err = std::max(result.max_rel_err, std::fabs(fd - analytic) / denom);
            else
                result.max_rel_err = std::max(result.max_rel_err, std::fabs(fd - analytic));
            ++result.params_checked;
        }
    }
    return result;
}

} // namespace lga::testing
