#include "lga/augment.hpp"

#include <cmath>

#include "lga/rng.hpp"

namespace lga {

AugmentationParams draw_params(std::uint64_t global_seed, std::uint64_t epoch,
                               std::uint64_t sample_index, bool rotation_signed) {
    RngStream rng(mix64(global_seed, epoch, sample_index));
    AugmentationParams p;
    p.flip = rng.bernoulli(0.5);
    p.rotation_degrees = rng.uniform(0.0, 10.0);
    p.rotation_sign = rotation_signed ? (rng.bernoulli(0.5) ? 1 : -1) : 1;
    p.zoom_factor = rng.uniform(0.9, 1.1);
    return p;
}

namespace {

Image flip_horizontal(const Image& image) {
    Image out(image.height, image.width);
    for (int i = 0; i < image.height; ++i)
        for (int j = 0; j < image.width; ++j)
            for (int c = 0; c < 3; ++c) out.at(i, j, c) = image.at(i, image.width - 1 - j, c);
    return out;
}

HumanMask flip_horizontal(const HumanMask& mask) {
    HumanMask out(mask.height, mask.width);
    for (int i = 0; i < mask.height; ++i)
        for (int j = 0; j < mask.width; ++j) out.at(i, j) = mask.at(i, mask.width - 1 - j);
    return out;
}

/// Inverse-maps output pixel centers through (rotation about center, zoom
/// about center); samples the image bilinearly and the mask nearest.
struct AffineResample {
    double cos_t, sin_t, inv_zoom, cx, cy;

    AffineResample(double angle_degrees, double zoom, int height, int width) {
        const double rad = angle_degrees * M_PI / 180.0;
        cos_t = std::cos(rad);
        sin_t = std::sin(rad);
        inv_zoom = 1.0 / zoom;
        cx = 0.5 * width;
        cy = 0.5 * height;
    }

    // Source location, pixel-center coordinates.
    void map(int i, int j, double& sx, double& sy) const {
        const double dx = (j + 0.5 - cx) * inv_zoom;
        const double dy = (i + 0.5 - cy) * inv_zoom;
        sx = cx + cos_t * dx - sin_t * dy - 0.5;
        sy = cy + sin_t * dx + cos_t * dy - 0.5;
    }
};

Image resample_image(const Image& image, const AffineResample& tf, const std::array<double, 3>& fill) {
    Image out(image.height, image.width);
    const int H = image.height, W = image.width;
    for (int i = 0; i < H; ++i) {
        for (int j = 0; j < W; ++j) {
            double sx, sy;
            tf.map(i, j, sx, sy);
            if (sx < -0.5 || sx > W - 0.5 || sy < -0.5 || sy > H - 0.5) {
                for (int c = 0; c < 3; ++c) out.at(i, j, c) = fill[c];
                continue;
            }
            const int x0 = static_cast<int>(std::floor(sx));
            const int y0 = static_cast<int>(std::floor(sy));
            const double wx = sx - x0;
            const double wy = sy - y0;
            for (int c = 0; c < 3; ++c) {
                auto sample = [&](int y, int x) {
                    if (x < 0 || x >= W || y < 0 || y >= H) return fill[c];
                    return image.at(y, x, c);
                };
                const double top = sample(y0, x0) * (1.0 - wx) + sample(y0, x0 + 1) * wx;
                const double bot = sample(y0 + 1, x0) * (1.0 - wx) + sample(y0 + 1, x0 + 1) * wx;
                out.at(i, j, c) = top * (1.0 - wy) + bot * wy;
            }
        }
    }
    return out;
}

HumanMask resample_mask(const HumanMask& mask, const AffineResample& tf) {
    HumanMask out(mask.height, mask.width);
    const int H = mask.height, W = mask.width;
    for (int i = 0; i < H; ++i) {
        for (int j = 0; j < W; ++j) {
            double sx, sy;
            tf.map(i, j, sx, sy);
            const int x = static_cast<int>(std::lround(sx));
            const int y = static_cast<int>(std::lround(sy));
            out.at(i, j) = (x >= 0 && x < W && y >= 0 && y < H && mask.at(y, x) != 0) ? 1 : 0;
        }
    }
    return out;
}

} // namespace

std::pair<Image, HumanMask> apply_augmentation(const Image& image, const HumanMask& mask,
                                               const AugmentationParams& params) {
    if (image.height != mask.height || image.width != mask.width)
        throw DimensionMismatch("image and mask dimensions differ");

    Image img = params.flip ? flip_horizontal(image) : image;
    HumanMask msk = params.flip ? flip_horizontal(mask) : mask;

    const double angle = params.rotation_sign * params.rotation_degrees;
    if (angle != 0.0) {
        const AffineResample rot(angle, 1.0, img.height, img.width);
        const auto fill = img.channel_means();
        img = resample_image(img, rot, fill);
        msk = resample_mask(msk, rot);
    }
    if (params.zoom_factor != 1.0) {
        const AffineResample zoom(0.0, params.zoom_factor, img.height, img.width);
        const auto fill = img.channel_means();
        img = resample_image(img, zoom, fill);
        msk = resample_mask(msk, zoom);
    }

    for (auto& v : msk.grid) v = v != 0 ? 1 : 0;
    return {std::move(img), std::move(msk)};
}

} // namespace lga
