#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lga/errors.hpp"
#include "lga/tensor.hpp"

namespace lga {

/// Stride-32 feature extractor description: one stride-2 3x3 conv + ReLU per
/// stage, so overall stride is 2^stages (32 for the default five stages).
struct BackboneSpec {
    std::vector<int> stage_channels{32, 64, 128, 256, 256};

    int feature_channels() const { return stage_channels.back(); }
    int stride() const { return 1 << static_cast<int>(stage_channels.size()); }
};

enum class LocOutput { linear, sigmoid };

struct ModelConfig {
    BackboneSpec backbone;
    int num_classes = 2;
    /// Classification-branch conv width; the paper model uses 1024.
    int cls_channels = 1024;
    /// Localization-branch hidden widths; a final conv maps to 1 channel, so
    /// the default {512,64,32} gives the four-conv chain 512->64->32->1.
    std::vector<int> loc_channels{512, 64, 32};
    LocOutput loc_output = LocOutput::linear;
};

struct ConvLayer {
    Tensor weight; // {out_ch, in_ch, 3, 3}
    Tensor bias;   // {out_ch}
    int stride = 1;

    int out_channels() const { return weight.shape[0]; }
    int in_channels() const { return weight.shape[1]; }
};

struct LinearLayer {
    Tensor weight; // {out, in}
    Tensor bias;   // {out}
};

/// All learnable weights. Backbone and localization convs are ReLU-activated
/// except the final localization conv, whose output nonlinearity is selected
/// by config.loc_output.
struct ModelParams {
    ModelConfig config;
    std::vector<ConvLayer> backbone;
    ConvLayer cls_conv;
    LinearLayer fc;
    std::vector<ConvLayer> loc_convs;

    /// Fixed-order view over every parameter tensor; the order defines the
    /// checkpoint and optimizer-state layout.
    std::vector<Tensor*> parameter_tensors();
    std::vector<const Tensor*> parameter_tensors() const;
    std::vector<std::string> parameter_names() const;
    long num_parameters() const;
};

/// Every tensor the forward pass exposes: backbone features F, the
/// classification features F_cls, their global average pool V, the class
/// logits S, and the predicted location heatmap M*.
struct ForwardOutputs {
    Tensor f;                   // {D, h, w}
    Tensor f_cls;               // {K, h, w}, nonnegative (post-ReLU)
    std::vector<double> v;      // K
    std::vector<double> logits; // C
    Tensor m_star;              // {h, w}
};

/// Intermediate activations retained for the backward pass.
struct ForwardCache {
    Tensor input;                    // {3, H, W}
    std::vector<Tensor> backbone_pre; // pre-ReLU per stage
    std::vector<Tensor> backbone_act; // post-ReLU per stage
    Tensor cls_pre;                  // pre-ReLU
    std::vector<Tensor> loc_pre;     // pre-activation per loc conv
    std::vector<Tensor> loc_act;     // post-ReLU per hidden loc conv
};

/// Parameter gradients, same tensor order as ModelParams::parameter_tensors.
struct Gradients {
    std::vector<Tensor> tensors;

    static Gradients zeros_like(const ModelParams& params);
    void zero();
    void add_scaled(const Gradients& other, double scale);
};

/// He-uniform init (bound sqrt(6/fan_in)), zero biases, deterministic in
/// init_seed.
ModelParams build_model(const ModelConfig& config, std::uint64_t init_seed);

/// Runs the two-branch forward pass on one {3,H,W} image. H and W must be
/// multiples of the backbone stride (ShapeError otherwise). Pass a cache to
/// retain what backward needs.
ForwardOutputs forward(const ModelParams& params, const Tensor& image, ForwardCache* cache = nullptr);

/// Argmax class with lowest-index tie break; NonFiniteLogits on NaN/inf.
int predict(const ForwardOutputs& outputs);

/// Row class_index of the FC weight matrix: the per-channel weights that
/// project the classifier back onto the feature maps.
std::vector<double> cam_weights(const ModelParams& params, int class_index);

/// Accumulates parameter gradients given the loss gradients at the two heads
/// (dL/dlogits and dL/dM*). Also the only consumer of ForwardCache.
void backward(const ModelParams& params, const ForwardCache& cache, const ForwardOutputs& outputs,
              const std::vector<double>& dlogits, const Tensor& dm_star, Gradients& grads);

// Direct 3x3 convolution with padding 1. Exposed for tests and benchmarks.
void conv3x3_forward(const Tensor& in, const Tensor& weight, const Tensor& bias, int stride,
                     Tensor& out);
void conv3x3_backward(const Tensor& in, const Tensor& weight, int stride, const Tensor& dout,
                      Tensor* din, Tensor& dweight, Tensor& dbias);

} // namespace lga
