#pragma once

#include <cstdint>
#include <utility>

#include "lga/data.hpp"
#include "lga/image.hpp"

namespace lga {

/// Per-sample augmentation draw: horizontal flip, rotation in [0,10] degrees
/// with a separate random sign, and center zoom in [0.9,1.1].
struct AugmentationParams {
    bool flip = false;
    double rotation_degrees = 0.0; // in [0, 10]
    int rotation_sign = 1;         // +1 or -1; applied angle is sign * degrees
    double zoom_factor = 1.0;      // in [0.9, 1.1]

    static AugmentationParams identity() { return {}; }
};

/// Deterministic draw: a pure function of (global_seed, epoch, sample_index),
/// so any worker can reproduce any sample's parameters in any order.
/// When rotation_signed is false the sign is fixed to +1.
AugmentationParams draw_params(std::uint64_t global_seed, std::uint64_t epoch,
                               std::uint64_t sample_index, bool rotation_signed = true);

/// Jointly transforms image and mask: flip, then rotation about the image
/// center (bilinear for the image, nearest for the mask; out-of-frame fill is
/// the per-channel image mean for the image and 0 for the mask), then center
/// zoom that crops (>1) or pads (<1) back to the original size. The mask is
/// re-binarized after resampling. Output dimensions equal input dimensions.
std::pair<Image, HumanMask> apply_augmentation(const Image& image, const HumanMask& mask,
                                               const AugmentationParams& params);

} // namespace lga
