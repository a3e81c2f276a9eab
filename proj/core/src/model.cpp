#include "lga/model.hpp"

#include <algorithm>
#include <cmath>

#include "lga/rng.hpp"

namespace lga {

namespace {

void init_uniform(Tensor& t, double bound, RngStream& rng) {
    for (auto& x : t.v) x = rng.uniform(-bound, bound);
}

ConvLayer make_conv(int out_ch, int in_ch, int stride, RngStream& rng) {
    ConvLayer layer;
    layer.weight = Tensor({out_ch, in_ch, 3, 3});
    layer.bias = Tensor({out_ch});
    layer.stride = stride;
    init_uniform(layer.weight, std::sqrt(6.0 / (in_ch * 9)), rng);
    return layer;
}

void relu_inplace(Tensor& t) {
    for (auto& x : t.v) x = x > 0.0 ? x : 0.0;
}

} // namespace

std::vector<Tensor*> ModelParams::parameter_tensors() {
    std::vector<Tensor*> out;
    for (auto& c : backbone) {
        out.push_back(&c.weight);
        out.push_back(&c.bias);
    }
    out.push_back(&cls_conv.weight);
    out.push_back(&cls_conv.bias);
    out.push_back(&fc.weight);
    out.push_back(&fc.bias);
    for (auto& c : loc_convs) {
        out.push_back(&c.weight);
        out.push_back(&c.bias);
    }
    return out;
}

std::vector<const Tensor*> ModelParams::parameter_tensors() const {
    auto mutable_view = const_cast<ModelParams*>(this)->parameter_tensors();
    return {mutable_view.begin(), mutable_view.end()};
}

std::vector<std::string> ModelParams::parameter_names() const {
    std::vector<std::string> names;
    for (std::size_t i = 0; i < backbone.size(); ++i) {
        names.push_back("backbone." + std::to_string(i) + ".weight");
        names.push_back("backbone." + std::to_string(i) + ".bias");
    }
    names.push_back("cls_conv.weight");
    names.push_back("cls_conv.bias");
    names.push_back("fc.weight");
    names.push_back("fc.bias");
    for (std::size_t i = 0; i < loc_convs.size(); ++i) {
        names.push_back("loc_convs." + std::to_string(i) + ".weight");
        names.push_back("loc_convs." + std::to_string(i) + ".bias");
    }
    return names;
}

long ModelParams::num_parameters() const {
    long n = 0;
    for (const auto* t : parameter_tensors()) n += t->numel();
    return n;
}

Gradients Gradients::zeros_like(const ModelParams& params) {
    Gradients g;
    for (const auto* t : params.parameter_tensors()) g.tensors.emplace_back(t->shape);
    return g;
}

void Gradients::zero() {
    for (auto& t : tensors) t.fill(0.0);
}

void Gradients::add_scaled(const Gradients& other, double scale) {
    for (std::size_t i = 0; i < tensors.size(); ++i) {
        const auto& src = other.tensors[i].v;
        auto& dst = tensors[i].v;
        for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += scale * src[k];
    }
}

ModelParams build_model(const ModelConfig& config, std::uint64_t init_seed) {
    if (config.num_classes < 2) throw ShapeError("num_classes must be at least 2");
    if (config.backbone.stage_channels.empty()) throw ShapeError("backbone needs at least one stage");

    ModelParams params;
    params.config = config;

    int layer_id = 0;
    int in_ch = 3;
    for (int ch : config.backbone.stage_channels) {
        RngStream rng(mix64(init_seed, 0x6261636bull, static_cast<std::uint64_t>(layer_id++)));
        params.backbone.push_back(make_conv(ch, in_ch, /*stride=*/2, rng));
        in_ch = ch;
    }
    const int feat = config.backbone.feature_channels();
    {
        RngStream rng(mix64(init_seed, 0x636c73ull, 0));
        params.cls_conv = make_conv(config.cls_channels, feat, /*stride=*/1, rng);
    }
    {
        RngStream rng(mix64(init_seed, 0x6663ull, 0));
        params.fc.weight = Tensor({config.num_classes, config.cls_channels});
        params.fc.bias = Tensor({config.num_classes});
        init_uniform(params.fc.weight, std::sqrt(6.0 / config.cls_channels), rng);
    }
    int loc_in = feat;
    int loc_id = 0;
    for (int ch : config.loc_channels) {
        RngStream rng(mix64(init_seed, 0x6c6f63ull, static_cast<std::uint64_t>(loc_id++)));
        params.loc_convs.push_back(make_conv(ch, loc_in, /*stride=*/1, rng));
        loc_in = ch;
    }
    {
        RngStream rng(mix64(init_seed, 0x6c6f63ull, static_cast<std::uint64_t>(loc_id)));
        params.loc_convs.push_back(make_conv(1, loc_in, /*stride=*/1, rng));
    }
    return params;
}

void conv3x3_forward(const Tensor& in, const Tensor& weight, const Tensor& bias, int stride,
                     Tensor& out) {
    const int IC = in.shape[0], H = in.shape[1], W = in.shape[2];
    const int OC = weight.shape[0];
    const int OH = (H - 1) / stride + 1;
    const int OW = (W - 1) / stride + 1;
    if (out.shape != std::vector<int>{OC, OH, OW}) out = Tensor({OC, OH, OW});

    const double* ip = in.data();
    const double* wp = weight.data();
    double* op = out.data();
    const long in_plane = static_cast<long>(H) * W;
    const long out_plane = static_cast<long>(OH) * OW;

    for (int oc = 0; oc < OC; ++oc) {
        double* out_c = op + oc * out_plane;
        const double bv = bias.v[static_cast<std::size_t>(oc)];
        for (long p = 0; p < out_plane; ++p) out_c[p] = bv;
        for (int ic = 0; ic < IC; ++ic) {
            const double* in_c = ip + ic * in_plane;
            const double* w_c = wp + (static_cast<long>(oc) * IC + ic) * 9;
            for (int ky = 0; ky < 3; ++ky) {
                const int oy_lo = ky == 0 ? 1 : 0;
                const int oy_hi = std::min(OH, (H - ky) / stride + 1);
                for (int kx = 0; kx < 3; ++kx) {
                    const double wv = w_c[ky * 3 + kx];
                    const int ox_lo = kx == 0 ? 1 : 0;
                    const int ox_hi = std::min(OW, (W - kx) / stride + 1);
                    for (int oy = oy_lo; oy < oy_hi; ++oy) {
                        const double* in_row = in_c + static_cast<long>(oy * stride + ky - 1) * W + (kx - 1);
                        double* out_row = out_c + static_cast<long>(oy) * OW;
                        if (stride == 1) {
                            for (int ox = ox_lo; ox < ox_hi; ++ox) out_row[ox] += wv * in_row[ox];
                        } else {
                            for (int ox = ox_lo; ox < ox_hi; ++ox)
                                out_row[ox] += wv * in_row[static_cast<long>(ox) * stride];
                        }
                    }
                }
            }
        }
    }
}

void conv3x3_backward(const Tensor& in, const Tensor& weight, int stride, const Tensor& dout,
                      Tensor* din, Tensor& dweight, Tensor& dbias) {
    const int IC = in.shape[0], H = in.shape[1], W = in.shape[2];
    const int OC = weight.shape[0];
    const int OH = dout.shape[1], OW = dout.shape[2];

    const double* ip = in.data();
    const double* wp = weight.data();
    const double* gp = dout.data();
    const long in_plane = static_cast<long>(H) * W;
    const long out_plane = static_cast<long>(OH) * OW;

    for (int oc = 0; oc < OC; ++oc) {
        const double* g_c = gp + oc * out_plane;
        double acc_b = 0.0;
        for (long p = 0; p < out_plane; ++p) acc_b += g_c[p];
        dbias.v[static_cast<std::size_t>(oc)] += acc_b;

        for (int ic = 0; ic < IC; ++ic) {
            const double* in_c = ip + ic * in_plane;
            const double* w_c = wp + (static_cast<long>(oc) * IC + ic) * 9;
            double* dw_c = dweight.data() + (static_cast<long>(oc) * IC + ic) * 9;
            double* din_c = din ? din->data() + ic * in_plane : nullptr;
            for (int ky = 0; ky < 3; ++ky) {
                const int oy_lo = ky == 0 ? 1 : 0;
                const int oy_hi = std::min(OH, (H - ky) / stride + 1);
                for (int kx = 0; kx < 3; ++kx) {
                    const double wv = w_c[ky * 3 + kx];
                    const int ox_lo = kx == 0 ? 1 : 0;
                    const int ox_hi = std::min(OW, (W - kx) / stride + 1);
                    double acc_w = 0.0;
                    for (int oy = oy_lo; oy < oy_hi; ++oy) {
                        const double* in_row = in_c + static_cast<long>(oy * stride + ky - 1) * W + (kx - 1);
                        const double* g_row = g_c + static_cast<long>(oy) * OW;
                        double* din_row =
                            din_c ? din_c + static_cast<long>(oy * stride + ky - 1) * W + (kx - 1) : nullptr;
                        if (stride == 1) {
                            for (int ox = ox_lo; ox < ox_hi; ++ox) acc_w += in_row[ox] * g_row[ox];
                            if (din_row)
                                for (int ox = ox_lo; ox < ox_hi; ++ox) din_row[ox] += wv * g_row[ox];
                        } else {
                            for (int ox = ox_lo; ox < ox_hi; ++ox)
                                acc_w += in_row[static_cast<long>(ox) * stride] * g_row[ox];
                            if (din_row)
                                for (int ox = ox_lo; ox < ox_hi; ++ox)
                                    din_row[static_cast<long>(ox) * stride] += wv * g_row[ox];
                        }
                    }
                    dw_c[ky * 3 + kx] += acc_w;
                }
            }
        }
    }
}

ForwardOutputs forward(const ModelParams& params, const Tensor& image, ForwardCache* cache) {
    if (image.shape.size() != 3 || image.shape[0] != 3)
        throw ShapeError("expected a {3,H,W} input image");
    const int H = image.shape[1], W = image.shape[2];
    const int stride = params.config.backbone.stride();
    if (H % stride != 0 || W % stride != 0)
        throw ShapeError("input " + std::to_string(W) + "x" + std::to_string(H) +
                         " is not a multiple of the backbone stride " + std::to_string(stride));

    if (cache) {
        cache->input = image;
        cache->backbone_pre.clear();
        cache->backbone_act.clear();
        cache->loc_pre.clear();
        cache->loc_act.clear();
    }

    // Backbone: stride-2 conv + ReLU per stage.
    Tensor act = image;
    for (const auto& conv : params.backbone) {
        Tensor pre;
        conv3x3_forward(act, conv.weight, conv.bias, conv.stride, pre);
        if (cache) cache->backbone_pre.push_back(pre);
        relu_inplace(pre);
        act = std::move(pre);
        if (cache) cache->backbone_act.push_back(act);
    }

    ForwardOutputs out;
    out.f = act;
    const int h = act.shape[1], w = act.shape[2];

    // Classification branch: conv + ReLU, GAP, one FC layer.
    Tensor cls_pre;
    conv3x3_forward(out.f, params.cls_conv.weight, params.cls_conv.bias, 1, cls_pre);
    if (cache) cache->cls_pre = cls_pre;
    out.f_cls = cls_pre;
    relu_inplace(out.f_cls);

    const int K = params.config.cls_channels;
    const long plane = static_cast<long>(h) * w;
    out.v.assign(static_cast<std::size_t>(K), 0.0);
    for (int k = 0; k < K; ++k) {
        const double* p = out.f_cls.data() + k * plane;
        double s = 0.0;
        for (long i = 0; i < plane; ++i) s += p[i];
        out.v[static_cast<std::size_t>(k)] = s / static_cast<double>(plane);
    }

    const int C = params.config.num_classes;
    out.logits.assign(static_cast<std::size_t>(C), 0.0);
    for (int c = 0; c < C; ++c) {
        const double* wrow = params.fc.weight.data() + static_cast<long>(c) * K;
        double s = params.fc.bias.v[static_cast<std::size_t>(c)];
        for (int k = 0; k < K; ++k) s += wrow[k] * out.v[static_cast<std::size_t>(k)];
        out.logits[static_cast<std::size_t>(c)] = s;
    }

    // Localization branch: ReLU between convs, configurable output activation.
    Tensor loc = out.f;
    const std::size_t n_loc = params.loc_convs.size();
    for (std::size_t i = 0; i < n_loc; ++i) {
        Tensor pre;
        conv3x3_forward(loc, params.loc_convs[i].weight, params.loc_convs[i].bias, 1, pre);
        if (cache) cache->loc_pre.push_back(pre);
        if (i + 1 < n_loc) {
            relu_inplace(pre);
            loc = std::move(pre);
            if (cache) cache->loc_act.push_back(loc);
        } else {
            loc = std::move(pre);
        }
    }
    out.m_star = Tensor({h, w});
    if (params.config.loc_output == LocOutput::sigmoid) {
        for (long i = 0; i < out.m_star.numel(); ++i)
            out.m_star.v[static_cast<std::size_t>(i)] = 1.0 / (1.0 + std::exp(-loc.v[static_cast<std::size_t>(i)]));
    } else {
        std::copy(loc.v.begin(), loc.v.end(), out.m_star.v.begin());
    }
    return out;
}

int predict(const ForwardOutputs& outputs) {
    int best = 0;
    for (std::size_t c = 0; c < outputs.logits.size(); ++c) {
        if (!std::isfinite(outputs.logits[c])) throw NonFiniteLogits("logit " + std::to_string(c) + " is not finite");
        if (outputs.logits[c] > outputs.logits[static_cast<std::size_t>(best)]) best = static_cast<int>(c);
    }
    return best;
}

std::vector<double> cam_weights(const ModelParams& params, int class_index) {
    const int C = params.config.num_classes;
    if (class_index < 0 || class_index >= C)
        throw IndexOutOfRange("class index " + std::to_string(class_index) + " out of [0," +
                              std::to_string(C) + ")");
    const int K = params.config.cls_channels;
    const double* row = params.fc.weight.data() + static_cast<long>(class_index) * K;
    return std::vector<double>(row, row + K);
}

void backward(const ModelParams& params, const ForwardCache& cache, const ForwardOutputs& outputs,
              const std::vector<double>& dlogits, const Tensor& dm_star, Gradients& grads) {
    const int K = params.config.cls_channels;
    const int C = params.config.num_classes;
    const int h = outputs.f.shape[1], w = outputs.f.shape[2];
    const long plane = static_cast<long>(h) * w;

    // Gradient slot layout mirrors parameter_tensors(): backbone pairs, then
    // cls conv, fc, loc convs.
    const std::size_t n_backbone = params.backbone.size();
    std::size_t slot = 2 * n_backbone;
    Tensor& d_cls_w = grads.tensors[slot + 0];
    Tensor& d_cls_b = grads.tensors[slot + 1];
    Tensor& d_fc_w = grads.tensors[slot + 2];
    Tensor& d_fc_b = grads.tensors[slot + 3];

    // FC head.
    std::vector<double> dv(static_cast<std::size_t>(K), 0.0);
    for (int c = 0; c < C; ++c) {
        const double g = dlogits[static_cast<std::size_t>(c)];
        d_fc_b.v[static_cast<std::size_t>(c)] += g;
        double* dwrow = d_fc_w.data() + static_cast<long>(c) * K;
        const double* wrow = params.fc.weight.data() + static_cast<long>(c) * K;
        for (int k = 0; k < K; ++k) {
            dwrow[k] += g * outputs.v[static_cast<std::size_t>(k)];
            dv[static_cast<std::size_t>(k)] += g * wrow[k];
        }
    }

    // GAP spreads each channel gradient uniformly; ReLU gates it.
    Tensor d_cls_pre({K, h, w});
    for (int k = 0; k < K; ++k) {
        const double g = dv[static_cast<std::size_t>(k)] / static_cast<double>(plane);
        const double* pre = cache.cls_pre.data() + k * plane;
        double* dst = d_cls_pre.data() + k * plane;
        for (long i = 0; i < plane; ++i) dst[i] = pre[i] > 0.0 ? g : 0.0;
    }

    Tensor d_f(outputs.f.shape);
    conv3x3_backward(outputs.f, params.cls_conv.weight, 1, d_cls_pre, &d_f, d_cls_w, d_cls_b);

    // Localization head, from the output back to F.
    const std::size_t n_loc = params.loc_convs.size();
    Tensor d_loc = dm_star;
    d_loc.shape = {1, h, w};
    if (params.config.loc_output == LocOutput::sigmoid) {
        for (long i = 0; i < d_loc.numel(); ++i) {
            const double s = outputs.m_star.v[static_cast<std::size_t>(i)];
            d_loc.v[static_cast<std::size_t>(i)] *= s * (1.0 - s);
        }
    }
    for (std::size_t i = n_loc; i-- > 0;) {
        Tensor& dw = grads.tensors[slot + 4 + 2 * i];
        Tensor& db = grads.tensors[slot + 4 + 2 * i + 1];
        if (i == 0) {
            conv3x3_backward(outputs.f, params.loc_convs[i].weight, 1, d_loc, &d_f, dw, db);
            break;
        }
        const Tensor& input = cache.loc_act[i - 1];
        Tensor d_input(input.shape);
        conv3x3_backward(input, params.loc_convs[i].weight, 1, d_loc, &d_input, dw, db);
        // Gate through the preceding ReLU.
        const Tensor& pre = cache.loc_pre[i - 1];
        for (long k = 0; k < d_input.numel(); ++k)
            if (pre.v[static_cast<std::size_t>(k)] <= 0.0) d_input.v[static_cast<std::size_t>(k)] = 0.0;
        d_loc = std::move(d_input);
    }

    // Backbone, gated by each stage's ReLU.
    Tensor d_act = std::move(d_f);
    for (std::size_t i = n_backbone; i-- > 0;) {
        const Tensor& pre = cache.backbone_pre[i];
        for (long k = 0; k < d_act.numel(); ++k)
            if (pre.v[static_cast<std::size_t>(k)] <= 0.0) d_act.v[static_cast<std::size_t>(k)] = 0.0;
        const Tensor& input = i == 0 ? cache.input : cache.backbone_act[i - 1];
        Tensor& dw = grads.tensors[2 * i];
        Tensor& db = grads.tensors[2 * i + 1];
        if (i == 0) {
            conv3x3_backward(input, params.backbone[i].weight, params.backbone[i].stride, d_act,
                             nullptr, dw, db);
        } else {
            Tensor d_input(input.shape);
            conv3x3_backward(input, params.backbone[i].weight, params.backbone[i].stride, d_act,
                             &d_input, dw, db);
            d_act = std::move(d_input);
        }
    }
}

} // namespace lga
