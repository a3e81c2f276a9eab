#include "lga/activation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace lga {

Tensor normalize_channel(const Tensor& channel) {
    Tensor out(channel.shape);
    if (channel.v.empty()) return out;
    double lo = channel.v[0], hi = channel.v[0];
    for (double x : channel.v) {
        lo = std::min(lo, x);
        hi = std::max(hi, x);
    }
    if (!(hi > lo)) return out; // constant channel contributes nothing
    const double inv = 1.0 / (hi - lo);
    for (std::size_t i = 0; i < channel.v.size(); ++i) out.v[i] = (channel.v[i] - lo) * inv;
    return out;
}

ActivationMap sam(const Tensor& f_cls) {
    const int K = f_cls.shape[0], h = f_cls.shape[1], w = f_cls.shape[2];
    const long plane = static_cast<long>(h) * w;

    ActivationMap map;
    map.kind = ActivationMap::Kind::SAM;
    map.grid = Tensor({h, w});
    Tensor channel({h, w});
    for (int k = 0; k < K; ++k) {
        const double* src = f_cls.data() + k * plane;
        std::copy(src, src + plane, channel.v.begin());
        const Tensor norm = normalize_channel(channel);
        for (long i = 0; i < plane; ++i) map.grid.v[static_cast<std::size_t>(i)] += norm.v[static_cast<std::size_t>(i)];
    }
    return map;
}

ActivationMap pam(const Tensor& f_cls, const std::vector<double>& weights, int class_index) {
    const int K = f_cls.shape[0], h = f_cls.shape[1], w = f_cls.shape[2];
    if (static_cast<int>(weights.size()) != K)
        throw DimensionMismatch("weight count " + std::to_string(weights.size()) +
                                " does not match channel count " + std::to_string(K));
    const long plane = static_cast<long>(h) * w;

    ActivationMap map;
    map.kind = ActivationMap::Kind::PAM;
    map.class_index = class_index;
    map.grid = Tensor({h, w});
    for (int k = 0; k < K; ++k) {
        const double wk = weights[static_cast<std::size_t>(k)];
        const double* src = f_cls.data() + k * plane;
        for (long i = 0; i < plane; ++i) map.grid.v[static_cast<std::size_t>(i)] += wk * src[i];
    }
    return map;
}

double attention_in_mask(const ActivationMap& map, const HeatmapTarget& target) {
    if (map.grid.shape != target.grid.shape)
        throw DimensionMismatch("activation map and target shapes differ");
    double mass = 0.0, inside = 0.0;
    for (std::size_t i = 0; i < map.grid.v.size(); ++i) {
        const double m = std::max(map.grid.v[i], 0.0);
        mass += m;
        inside += m * target.grid.v[i];
    }
    return mass > 0.0 ? inside / mass : 0.0;
}

namespace {

// Viridis ramp anchors (the standard 9 hex stops, scaled to [0,1]);
// intermediate values are linearly interpolated.
constexpr int kAnchors = 9;
constexpr double kViridis[kAnchors][3] = {
    {68 / 255.0, 1 / 255.0, 84 / 255.0},    {71 / 255.0, 45 / 255.0, 123 / 255.0},
    {59 / 255.0, 82 / 255.0, 139 / 255.0},  {44 / 255.0, 114 / 255.0, 142 / 255.0},
    {33 / 255.0, 145 / 255.0, 140 / 255.0}, {40 / 255.0, 174 / 255.0, 128 / 255.0},
    {94 / 255.0, 201 / 255.0, 98 / 255.0},  {173 / 255.0, 220 / 255.0, 48 / 255.0},
    {253 / 255.0, 231 / 255.0, 37 / 255.0},
};

} // namespace

std::array<double, 3> colormap(double t) {
    t = std::clamp(t, 0.0, 1.0);
    const double pos = t * (kAnchors - 1);
    const int i0 = std::min(static_cast<int>(pos), kAnchors - 2);
    const double f = pos - i0;
    std::array<double, 3> c;
    for (int c_i = 0; c_i < 3; ++c_i)
        c[static_cast<std::size_t>(c_i)] = kViridis[i0][c_i] * (1.0 - f) + kViridis[i0 + 1][c_i] * f;
    return c;
}

Image render_overlay(const Image& image, const ActivationMap& map, double alpha) {
    const Tensor norm = normalize_channel(map.grid);
    const int mh = norm.shape[0], mw = norm.shape[1];

    Image out(image.height, image.width);
    const double sy = static_cast<double>(mh) / image.height;
    const double sx = static_cast<double>(mw) / image.width;
    for (int i = 0; i < image.height; ++i) {
        double fy = std::clamp((i + 0.5) * sy - 0.5, 0.0, static_cast<double>(mh - 1));
        const int y0 = static_cast<int>(fy);
        const int y1 = std::min(y0 + 1, mh - 1);
        const double wy = fy - y0;
        for (int j = 0; j < image.width; ++j) {
            double fx = std::clamp((j + 0.5) * sx - 0.5, 0.0, static_cast<double>(mw - 1));
            const int x0 = static_cast<int>(fx);
            const int x1 = std::min(x0 + 1, mw - 1);
            const double wx = fx - x0;
            const double top = norm.at2(y0, x0) * (1.0 - wx) + norm.at2(y0, x1) * wx;
            const double bot = norm.at2(y1, x0) * (1.0 - wx) + norm.at2(y1, x1) * wx;
            const auto heat = colormap(top * (1.0 - wy) + bot * wy);
            for (int c = 0; c < 3; ++c)
                out.at(i, j, c) = (1.0 - alpha) * image.at(i, j, c) + alpha * heat[static_cast<std::size_t>(c)];
        }
    }
    return out;
}

void save_map_text(const Tensor& grid, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IOError("cannot open for writing: " + path);
    const int h = grid.shape[0], w = grid.shape[1];
    char buf[64];
    for (int i = 0; i < h; ++i) {
        for (int j = 0; j < w; ++j) {
            std::snprintf(buf, sizeof buf, "%.9g", grid.at2(i, j));
            out << buf << (j + 1 == w ? "" : " ");
        }
        out << "\n";
    }
}

} // namespace lga
