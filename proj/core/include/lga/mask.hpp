#pragma once

#include "lga/data.hpp"

namespace lga {

/// How the fractional downsampled target is emitted: soft keeps per-cell
/// coverage fractions, hard thresholds them at 0.5.
enum class MaskTarget { soft, hard };

/// Tight box over the visible joints, each axis grown to at least min_extent,
/// then width and height scaled by expand_factor about the box center, then
/// clamped to the image. Throws NoVisibleJoints when nothing is visible.
BoundingBox keypoints_to_box(const Keypoints& kps, double image_width, double image_height,
                             double min_extent = 32.0, double expand_factor = 1.5);

/// Rasterizes the union of the boxes: a pixel is 1 iff its center lies inside
/// at least one box. An empty list yields the all-zero mask.
HumanMask boxes_to_mask(const std::vector<BoundingBox>& boxes, int width, int height);

/// Block-mean downsample of a binary mask to h x w cells. Mask dimensions
/// must be integer multiples of the target dimensions.
HeatmapTarget downsample_mask(const HumanMask& mask, int h, int w,
                              MaskTarget mode = MaskTarget::soft);

} // namespace lga
