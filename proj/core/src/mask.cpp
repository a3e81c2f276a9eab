#include "lga/mask.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace lga {

BoundingBox keypoints_to_box(const Keypoints& kps, double image_width, double image_height,
                             double min_extent, double expand_factor) {
    double x_lo = std::numeric_limits<double>::infinity();
    double y_lo = std::numeric_limits<double>::infinity();
    double x_hi = -std::numeric_limits<double>::infinity();
    double y_hi = -std::numeric_limits<double>::infinity();
    int visible = 0;
    for (const auto& j : kps.joints) {
        if (!j.visible) continue;
        ++visible;
        x_lo = std::min(x_lo, j.x);
        y_lo = std::min(y_lo, j.y);
        x_hi = std::max(x_hi, j.x);
        y_hi = std::max(y_hi, j.y);
    }
    if (visible == 0) throw NoVisibleJoints("no visible joints to build a box from");

    double cx = 0.5 * (x_lo + x_hi);
    double cy = 0.5 * (y_lo + y_hi);
    double w = std::max(x_hi - x_lo, min_extent);
    double h = std::max(y_hi - y_lo, min_extent);
    w *= expand_factor;
    h *= expand_factor;

    BoundingBox box{cx - 0.5 * w, cy - 0.5 * h, cx + 0.5 * w, cy + 0.5 * h};
    return clamp_box(box, image_width, image_height);
}

HumanMask boxes_to_mask(const std::vector<BoundingBox>& boxes, int width, int height) {
    HumanMask mask(height, width);
    for (const auto& b : boxes) {
        // Pixel (i,j) has center (j+0.5, i+0.5); fill the half-open span of
        // columns/rows whose centers fall inside the box.
        int j0 = std::max(0, static_cast<int>(std::ceil(b.x_min - 0.5)));
        int j1 = std::min(width, static_cast<int>(std::ceil(b.x_max - 0.5)));
        int i0 = std::max(0, static_cast<int>(std::ceil(b.y_min - 0.5)));
        int i1 = std::min(height, static_cast<int>(std::ceil(b.y_max - 0.5)));
        for (int i = i0; i < i1; ++i)
            for (int j = j0; j < j1; ++j) mask.at(i, j) = 1;
    }
    return mask;
}

HeatmapTarget downsample_mask(const HumanMask& mask, int h, int w, MaskTarget mode) {
    if (h <= 0 || w <= 0 || mask.height % h != 0 || mask.width % w != 0)
        throw DimensionMismatch("mask size " + std::to_string(mask.width) + "x" +
                                std::to_string(mask.height) + " not divisible by target " +
                                std::to_string(w) + "x" + std::to_string(h));
    const int by = mask.height / h;
    const int bx = mask.width / w;
    const double block = static_cast<double>(by) * bx;

    HeatmapTarget target;
    target.grid = Tensor({h, w});
    for (int ci = 0; ci < h; ++ci) {
        for (int cj = 0; cj < w; ++cj) {
            long count = 0;
            for (int i = ci * by; i < (ci + 1) * by; ++i)
                for (int j = cj * bx; j < (cj + 1) * bx; ++j) count += mask.at(i, j);
            double value = static_cast<double>(count) / block;
            if (mode == MaskTarget::hard) value = value >= 0.5 ? 1.0 : 0.0;
            target.grid.at2(ci, cj) = value;
        }
    }
    return target;
}

} // namespace lga
